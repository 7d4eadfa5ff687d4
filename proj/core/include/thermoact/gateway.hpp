#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoact/dataset.hpp"
#include "thermoact/plan.hpp"
#include "thermoact/scene.hpp"

namespace thermoact {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::string_view kGatewayVersion = "0.1.0";
/// Sim steps per jog/gripper command: one 15 Hz frame period.
inline constexpr int kSimStepsPerTick = 2;

struct GatewayConfig {
  int task_id = 1;
  std::uint64_t seed = 42;
  SceneConfig scene;
  /// Where episodes are written; empty disables recording.
  std::filesystem::path record_root;
  /// Droppable messages buffered per subscriber before the oldest is dropped.
  std::size_t frame_queue_capacity = 16;
};

/// Receives messages produced while a command is applied.
class FrameSink {
 public:
  virtual ~FrameSink() = default;
  /// False when nobody listens; frames are then neither rendered nor encoded.
  virtual bool active() const = 0;
  virtual void publish(nlohmann::json message) = 0;
};

/// Protocol state machine for one session, free of any transport. Not
/// thread safe; SessionRunner serializes access.
class GatewaySession {
 public:
  GatewaySession(std::string id, GatewayConfig config);
  GatewaySession(const GatewaySession&) = delete;
  GatewaySession& operator=(const GatewaySession&) = delete;
  ~GatewaySession();

  /// Greeting sent to every new subscriber.
  nlohmann::json hello() const;

  /// Applies one client message and returns its ack or error. Frames and
  /// state updates for each simulated tick go to `sink` when it is active.
  /// Never throws for bad client input; the session stays usable.
  nlohmann::json apply(std::string_view text, FrameSink* sink = nullptr);

  const std::string& id() const noexcept { return id_; }
  const Scene& scene() const noexcept { return scene_; }
  std::int64_t last_seq() const noexcept { return last_seq_; }
  bool recording() const noexcept { return recorder_ != nullptr; }
  std::size_t subtask_index() const noexcept { return subtask_index_; }
  const std::vector<SubTask>& plan() const noexcept { return plan_; }
  /// Current annotation prompt: the active sub-task, or the instruction once
  /// every sub-task was marked done.
  std::string current_prompt() const;

  /// The messages for the current snapshot: external frame, wrist frame and
  /// state update, all stamped with the scene clock.
  std::vector<nlohmann::json> snapshot_messages(std::optional<std::int64_t> seq = {}) const;

 private:
  nlohmann::json dispatch(const std::string& type, const nlohmann::json& msg, FrameSink* sink);
  void reset(int task_id, std::uint64_t seed);
  void tick(const Action& command, FrameSink* sink);
  nlohmann::json state_update() const;

  std::string id_;
  GatewayConfig config_;
  Scene scene_;
  std::vector<SubTask> plan_;
  std::size_t subtask_index_ = 0;
  std::int64_t last_seq_ = 0;
  std::int64_t current_seq_ = 0;
  std::unique_ptr<EpisodeRecorder> recorder_;
  int recordings_started_ = 0;
};

/// Outgoing queue of one subscriber. Reliable messages (acks, errors) are
/// never dropped; droppable ones (frames, state updates) are capped and the
/// oldest is discarded first.
class BoundedOutbox {
 public:
  explicit BoundedOutbox(std::size_t droppable_capacity);

  void push(std::string text, bool droppable);
  /// Oldest message, reliable or not, in arrival order.
  std::optional<std::string> pop();
  std::size_t size() const;
  std::size_t dropped() const;

 private:
  struct Entry {
    std::string text;
    bool droppable;
  };
  mutable std::mutex mutex_;
  std::deque<Entry> queue_;
  std::size_t capacity_;
  std::size_t droppable_count_ = 0;
  std::size_t dropped_ = 0;
};

/// A connection listening to a session.
class Subscriber {
 public:
  virtual ~Subscriber() = default;
  /// Called from the session thread; must not block.
  virtual void deliver(std::string text, bool droppable) = 0;
};

/// Owns a GatewaySession and the thread that applies its commands in
/// arrival order.
class SessionRunner {
 public:
  SessionRunner(std::string id, GatewayConfig config);
  ~SessionRunner();
  SessionRunner(const SessionRunner&) = delete;
  SessionRunner& operator=(const SessionRunner&) = delete;

  const std::string& id() const noexcept { return id_; }

  /// Queues the hello for `subscriber` and adds it to the broadcast set.
  void subscribe(std::shared_ptr<Subscriber> subscriber);
  void unsubscribe(const Subscriber* subscriber);
  std::size_t subscriber_count() const;

  /// Enqueues a client message; the reply goes to `reply_to` only.
  void submit(std::string text, std::shared_ptr<Subscriber> reply_to);
  /// Blocks until every submitted message has been applied.
  void drain();
  /// Stops the thread and releases subscribers; further submits are ignored.
  void shutdown();

 private:
  struct Command {
    std::string text;
    std::shared_ptr<Subscriber> reply_to;
    bool hello = false;
  };
  class Broadcast;
  void loop();

  std::string id_;
  GatewaySession session_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<Command> commands_;
  std::vector<std::shared_ptr<Subscriber>> subscribers_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread thread_;
};

/// HTTP + WebSocket front end. Routes: GET /health, GET /tasks,
/// POST /session, and WebSocket upgrades on /ws/<session>.
class GatewayServer {
 public:
  explicit GatewayServer(GatewayConfig defaults);
  ~GatewayServer();
  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  /// Binds and starts serving on a background thread; port 0 picks a free
  /// port. Throws kNetwork when the address cannot be bound.
  void start(const std::string& address, unsigned short port);
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();
  unsigned short port() const noexcept;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Catalog served at /tasks.
nlohmann::json task_catalog();

}  // namespace thermoact
