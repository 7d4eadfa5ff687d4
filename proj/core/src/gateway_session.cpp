#include <algorithm>
#include <cmath>

#include "thermoact/error.hpp"
#include "thermoact/gateway.hpp"
#include "thermoact/orchestrator.hpp"
#include "thermoact/planner.hpp"

namespace thermoact {
namespace {

using nlohmann::json;

json error_message(std::string message, std::optional<std::int64_t> seq) {
  json out = {{"type", "error"}, {"message", std::move(message)}};
  out["seq"] = seq ? json(*seq) : json(nullptr);
  return out;
}

json frame_message(std::string_view camera, double t, const std::vector<std::uint8_t>& png,
                   const RgbImage& image, std::optional<std::int64_t> seq) {
  json out = {{"type", "frame"},   {"camera", camera},       {"t", t},
              {"width", image.width()}, {"height", image.height()}, {"png", base64_encode(png)}};
  if (seq) out["seq"] = *seq;
  return out;
}

double number_field(const json& msg, const char* key) {
  const auto it = msg.find(key);
  if (it == msg.end() || !it->is_number()) {
    throw Error(ErrorCode::kInvalidInput, std::string("field '") + key + "' must be a number");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidInput, std::string("field '") + key + "' is not finite");
  return v;
}

struct Snapshot {
  RgbImage external;
  RgbImage wrist;
  std::vector<std::uint8_t> external_png;
  std::vector<std::uint8_t> wrist_png;
};

Snapshot capture(const Scene& scene) {
  Snapshot s;
  s.external = thermal_to_pseudocolor(render_thermal(scene, scene.camera(CameraKind::kExternal, true)));
  s.wrist = render_rgb(scene, scene.camera(CameraKind::kWrist, false));
  s.external_png = encode_png(s.external);
  s.wrist_png = encode_png(s.wrist);
  return s;
}

}  // namespace

GatewaySession::GatewaySession(std::string id, GatewayConfig config)
    : id_(std::move(id)), config_(std::move(config)) {
  reset(config_.task_id, config_.seed);
}

GatewaySession::~GatewaySession() = default;

json GatewaySession::hello() const {
  return {{"type", "hello"},          {"protocol", kProtocolVersion},
          {"version", kGatewayVersion}, {"session", id_},
          {"task", scene_.task_id()},  {"seed", scene_.seed()},
          {"last_seq", last_seq_},     {"recording_enabled", !config_.record_root.empty()}};
}

std::string GatewaySession::current_prompt() const {
  if (subtask_index_ < plan_.size()) return format_subtask(plan_[subtask_index_]);
  return std::string(task_instruction(scene_.task_id()));
}

void GatewaySession::reset(int task_id, std::uint64_t seed) {
  Scene scene = scene_from_task(task_id, seed, config_.scene);
  plan_ = mock_plan(scene, task_instruction(task_id)).subtasks;
  scene_ = std::move(scene);
  subtask_index_ = 0;
}

json GatewaySession::state_update() const {
  const SceneObject* held = scene_.attached_object();
  json out = {{"type", "state_update"},
              {"t", scene_.clock()},
              {"state", scene_.state()},
              {"joint_targets", scene_.joint_targets().q},
              {"gripper_target", scene_.gripper_target()},
              {"attached", held ? json(held->id) : json(nullptr)},
              {"subtask", current_prompt()},
              {"subtask_index", subtask_index_},
              {"recording", recording()}};
  if (current_seq_ > 0) out["seq"] = current_seq_;
  return out;
}

std::vector<json> GatewaySession::snapshot_messages(std::optional<std::int64_t> seq) const {
  const Snapshot s = capture(scene_);
  json state = state_update();
  if (seq) state["seq"] = *seq;
  return {frame_message("external", scene_.clock(), s.external_png, s.external, seq),
          frame_message("wrist", scene_.clock(), s.wrist_png, s.wrist, seq), std::move(state)};
}

void GatewaySession::tick(const Action& command, FrameSink* sink) {
  for (int i = 0; i < kSimStepsPerTick; ++i) scene_.step(kSimDt, command);

  const bool broadcast = sink != nullptr && sink->active();
  if (!broadcast && !recorder_) return;
  const Snapshot s = capture(scene_);
  if (recorder_) {
    FrameRecord frame;
    frame.t = scene_.clock();
    const auto state = scene_.state();
    frame.state.assign(state.begin(), state.end());
    const auto action = command.flatten();
    frame.action.assign(action.begin(), action.end());
    frame.prompt = current_prompt();
    recorder_->append_encoded(std::move(frame), s.external_png, s.wrist_png);
  }
  if (broadcast) {
    const std::optional<std::int64_t> seq = current_seq_;
    sink->publish(frame_message("external", scene_.clock(), s.external_png, s.external, seq));
    sink->publish(frame_message("wrist", scene_.clock(), s.wrist_png, s.wrist, seq));
    sink->publish(state_update());
  }
}

json GatewaySession::apply(std::string_view text, FrameSink* sink) {
  json msg = json::parse(text, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) return error_message("malformed JSON", std::nullopt);

  std::optional<std::int64_t> seq;
  if (const auto it = msg.find("seq"); it != msg.end() && it->is_number_integer()) seq = it->get<std::int64_t>();
  const auto type_it = msg.find("type");
  if (type_it == msg.end() || !type_it->is_string()) return error_message("missing message type", seq);
  if (!seq) return error_message("missing integer seq", std::nullopt);
  if (*seq <= last_seq_) {
    return error_message("out-of-order seq " + std::to_string(*seq) + " (last " +
                             std::to_string(last_seq_) + ")",
                         seq);
  }

  const std::string type = type_it->get<std::string>();
  current_seq_ = *seq;
  try {
    json payload = dispatch(type, msg, sink);
    last_seq_ = *seq;
    json ack = {{"type", "ack"}, {"seq", *seq}, {"command", type}, {"t", scene_.clock()}};
    ack.update(payload);
    return ack;
  } catch (const Error& e) {
    // A rejected command does not consume its seq, so the client can retry.
    current_seq_ = last_seq_;
    return error_message(e.message(), seq);
  } catch (const std::exception& e) {
    current_seq_ = last_seq_;
    return error_message(e.what(), seq);
  }
}

json GatewaySession::dispatch(const std::string& type, const json& msg, FrameSink* sink) {
  if (type == "hello") {
    const auto it = msg.find("protocol");
    if (it == msg.end() || !it->is_number_integer() || it->get<int>() != kProtocolVersion) {
      throw Error(ErrorCode::kInvalidInput, "unsupported protocol, expected " + std::to_string(kProtocolVersion));
    }
    return {{"protocol", kProtocolVersion}};
  }

  if (type == "scene_reset") {
    if (recorder_) throw Error(ErrorCode::kState, "stop recording before resetting the scene");
    const int task = msg.contains("task") ? static_cast<int>(number_field(msg, "task")) : scene_.task_id();
    const double seed_value = msg.contains("seed") ? number_field(msg, "seed") : static_cast<double>(scene_.seed());
    if (seed_value < 0) throw Error(ErrorCode::kInvalidInput, "seed must be >= 0");
    reset(task, static_cast<std::uint64_t>(seed_value));
    if (sink != nullptr && sink->active()) {
      for (auto& m : snapshot_messages(current_seq_)) sink->publish(std::move(m));
    }
    json plan = json::array();
    for (const auto& s : plan_) plan.push_back(format_subtask(s));
    return {{"task", scene_.task_id()}, {"seed", scene_.seed()}, {"plan", plan}};
  }

  if (type == "jog") {
    const auto it = msg.find("deltas");
    if (it == msg.end() || !it->is_array() || it->size() != kNumJoints) {
      throw Error(ErrorCode::kDimension, "jog needs 6 joint deltas");
    }
    JointVector target = scene_.joint_targets();
    const JointVector before = target;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      const json& d = (*it)[i];
      if (!d.is_number() || !std::isfinite(d.get<double>())) {
        throw Error(ErrorCode::kInvalidInput, "jog deltas must be finite numbers");
      }
      target[i] += d.get<double>();
    }
    target = scene_.arm().clamp(target);
    JointVector applied{};
    for (std::size_t i = 0; i < kNumJoints; ++i) applied[i] = target[i] - before[i];
    Action command;
    command.joint_targets = target;
    command.gripper = scene_.gripper_target();
    tick(command, sink);
    return {{"applied", applied.q}, {"joint_targets", target.q}};
  }

  if (type == "gripper") {
    const double aperture = std::clamp(number_field(msg, "aperture"), 0.0, 1.0);
    Action command;
    command.joint_targets = scene_.joint_targets();
    command.gripper = aperture;
    tick(command, sink);
    return {{"aperture", aperture}};
  }

  if (type == "mark_done") {
    if (!recorder_) throw Error(ErrorCode::kState, "not recording");
    if (recorder_->size() == 0) {
      const Snapshot s = capture(scene_);
      FrameRecord frame;
      frame.t = scene_.clock();
      const auto state = scene_.state();
      frame.state.assign(state.begin(), state.end());
      Action hold;
      hold.joint_targets = scene_.joint_targets();
      hold.gripper = scene_.gripper_target();
      const auto action = hold.flatten();
      frame.action.assign(action.begin(), action.end());
      frame.prompt = current_prompt();
      recorder_->append_encoded(std::move(frame), s.external_png, s.wrist_png);
    }
    recorder_->set_last_done(1.0);
    const std::string finished = recorder_->episode().frames.back().prompt;
    if (subtask_index_ < plan_.size()) ++subtask_index_;
    return {{"subtask", finished}, {"next", current_prompt()}, {"subtask_index", subtask_index_}};
  }

  if (type == "start_recording") {
    if (config_.record_root.empty()) throw Error(ErrorCode::kConfig, "recording disabled on this gateway");
    if (recorder_) throw Error(ErrorCode::kState, "already recording");
    EpisodeMeta meta;
    if (const auto it = msg.find("episode_id"); it != msg.end()) {
      if (!it->is_string() || it->get<std::string>().empty()) {
        throw Error(ErrorCode::kInvalidInput, "episode_id must be a non-empty string");
      }
      meta.id = it->get<std::string>();
      if (meta.id.find_first_of("/\\") != std::string::npos || meta.id.find("..") != std::string::npos) {
        throw Error(ErrorCode::kInvalidInput, "episode_id must not contain path separators");
      }
    } else {
      meta.id = "teleop_t" + std::to_string(scene_.task_id()) + "_s" + std::to_string(scene_.seed()) + "_" +
                std::to_string(recordings_started_ + 1);
    }
    meta.task_id = scene_.task_id();
    meta.condition = Condition::kRgbt;
    meta.seed = scene_.seed();
    meta.extra = {{"source", "teleop"}};
    recorder_ = std::make_unique<EpisodeRecorder>(config_.record_root, meta);
    ++recordings_started_;
    return {{"episode_id", meta.id}};
  }

  if (type == "stop_recording") {
    if (!recorder_) throw Error(ErrorCode::kState, "not recording");
    const Episode episode = recorder_->finalize();
    recorder_.reset();
    return {{"episode_id", episode.meta.id},
            {"frames", episode.frames.size()},
            {"spans", episode.spans.size()},
            {"dir", episode.dir.string()}};
  }

  throw Error(ErrorCode::kInvalidInput, "unknown message type '" + type + "'");
}

}  // namespace thermoact
