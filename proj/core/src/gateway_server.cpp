#include <algorithm>
#include <atomic>
#include <map>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "thermoact/error.hpp"
#include "thermoact/gateway.hpp"

namespace thermoact {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

json task_catalog() {
  json tasks = json::array();
  for (int task = 1; task <= kNumTasks; ++task) {
    tasks.push_back({{"id", task},
                     {"title", std::string(task_title(task))},
                     {"instruction", std::string(task_instruction(task))}});
  }
  return {{"tasks", tasks}};
}

// ---------------------------------------------------------------------------
// BoundedOutbox

BoundedOutbox::BoundedOutbox(std::size_t droppable_capacity) : capacity_(droppable_capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::kInvalidInput, "outbox capacity must be positive");
}

void BoundedOutbox::push(std::string text, bool droppable) {
  std::lock_guard lock(mutex_);
  if (droppable && droppable_count_ == capacity_) {
    const auto oldest = std::find_if(queue_.begin(), queue_.end(), [](const Entry& e) { return e.droppable; });
    queue_.erase(oldest);
    --droppable_count_;
    ++dropped_;
  }
  queue_.push_back({std::move(text), droppable});
  if (droppable) ++droppable_count_;
}

std::optional<std::string> BoundedOutbox::pop() {
  std::lock_guard lock(mutex_);
  if (queue_.empty()) return std::nullopt;
  Entry e = std::move(queue_.front());
  queue_.pop_front();
  if (e.droppable) --droppable_count_;
  return std::move(e.text);
}

std::size_t BoundedOutbox::size() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

std::size_t BoundedOutbox::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

// ---------------------------------------------------------------------------
// SessionRunner

class SessionRunner::Broadcast : public FrameSink {
 public:
  explicit Broadcast(std::vector<std::shared_ptr<Subscriber>> targets) : targets_(std::move(targets)) {}
  bool active() const override { return !targets_.empty(); }
  void publish(json message) override {
    const std::string text = message.dump();
    for (const auto& t : targets_) t->deliver(text, true);
  }

 private:
  std::vector<std::shared_ptr<Subscriber>> targets_;
};

SessionRunner::SessionRunner(std::string id, GatewayConfig config)
    : id_(id), session_(std::move(id), std::move(config)) {
  thread_ = std::thread([this] { loop(); });
}

SessionRunner::~SessionRunner() { shutdown(); }

void SessionRunner::subscribe(std::shared_ptr<Subscriber> subscriber) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    subscribers_.push_back(subscriber);
    commands_.push_back({"", std::move(subscriber), true});
  }
  cv_.notify_one();
}

void SessionRunner::unsubscribe(const Subscriber* subscriber) {
  std::lock_guard lock(mutex_);
  std::erase_if(subscribers_, [&](const auto& s) { return s.get() == subscriber; });
}

std::size_t SessionRunner::subscriber_count() const {
  std::lock_guard lock(mutex_);
  return subscribers_.size();
}

void SessionRunner::submit(std::string text, std::shared_ptr<Subscriber> reply_to) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    commands_.push_back({std::move(text), std::move(reply_to), false});
  }
  cv_.notify_one();
}

void SessionRunner::drain() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return stopping_ || (commands_.empty() && !busy_); });
}

void SessionRunner::shutdown() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
    commands_.clear();
  }
  cv_.notify_all();
  idle_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mutex_);
  subscribers_.clear();
}

void SessionRunner::loop() {
  for (;;) {
    Command command;
    std::vector<std::shared_ptr<Subscriber>> targets;
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return stopping_ || !commands_.empty(); });
      if (stopping_) return;
      command = std::move(commands_.front());
      commands_.pop_front();
      targets = subscribers_;
      busy_ = true;
    }
    if (command.hello) {
      command.reply_to->deliver(session_.hello().dump(), false);
    } else {
      Broadcast sink(std::move(targets));
      const json reply = session_.apply(command.text, &sink);
      if (command.reply_to) command.reply_to->deliver(reply.dump(), false);
    }
    {
      std::lock_guard lock(mutex_);
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

// ---------------------------------------------------------------------------
// Server

namespace {

class Registry {
 public:
  explicit Registry(GatewayConfig defaults) : defaults_(std::move(defaults)) {}

  std::shared_ptr<SessionRunner> create(const json& body) {
    GatewayConfig config = defaults_;
    if (body.contains("task")) {
      if (!body["task"].is_number_integer()) throw Error(ErrorCode::kInvalidInput, "task must be an integer");
      config.task_id = body["task"].get<int>();
    }
    if (body.contains("seed")) {
      if (!body["seed"].is_number_unsigned()) throw Error(ErrorCode::kInvalidInput, "seed must be a non-negative integer");
      config.seed = body["seed"].get<std::uint64_t>();
    }
    if (config.task_id < 1 || config.task_id > kNumTasks) {
      throw Error(ErrorCode::kInvalidInput, "unknown task id " + std::to_string(config.task_id));
    }
    std::lock_guard lock(mutex_);
    const std::string id = "s" + std::to_string(++counter_);
    auto runner = std::make_shared<SessionRunner>(id, std::move(config));
    sessions_[id] = runner;
    return runner;
  }

  std::shared_ptr<SessionRunner> find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

  std::size_t capacity() const { return defaults_.frame_queue_capacity; }

  void shutdown() {
    std::map<std::string, std::shared_ptr<SessionRunner>> sessions;
    {
      std::lock_guard lock(mutex_);
      sessions.swap(sessions_);
    }
    for (auto& [id, runner] : sessions) runner->shutdown();
  }

 private:
  GatewayConfig defaults_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<SessionRunner>> sessions_;
  int counter_ = 0;
};

class WsConnection : public Subscriber, public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<SessionRunner> runner, std::size_t capacity)
      : ws_(std::move(socket)), runner_(std::move(runner)), outbox_(capacity) {}

  void start(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

  /// Greets with an error and closes; used for unknown sessions.
  void reject(http::request<http::string_body> request, std::string message) {
    close_after_flush_ = true;
    outbox_.push(json{{"type", "error"}, {"message", std::move(message)}, {"seq", nullptr}}.dump(), false);
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->write_next();
    });
  }

  void deliver(std::string text, bool droppable) override {
    outbox_.push(std::move(text), droppable);
    net::post(ws_.get_executor(), [self = shared_from_this()] { self->write_next(); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    runner_->subscribe(shared_from_this());
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      detach();
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    runner_->submit(std::move(text), shared_from_this());
    read_next();
  }

  void write_next() {
    if (writing_ || closed_) return;
    std::optional<std::string> next = outbox_.pop();
    if (!next) {
      if (close_after_flush_) {
        closed_ = true;
        ws_.async_close(websocket::close_reason(websocket::close_code::policy_error, "unknown session"),
                        [self = shared_from_this()](beast::error_code) {});
      }
      return;
    }
    writing_ = true;
    current_ = std::move(*next);
    ws_.text(true);
    ws_.async_write(net::buffer(current_), beast::bind_front_handler(&WsConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      detach();
      return;
    }
    write_next();
  }

  void detach() {
    closed_ = true;
    if (runner_) runner_->unsubscribe(this);
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<SessionRunner> runner_;
  BoundedOutbox outbox_;
  beast::flat_buffer buffer_;
  std::string current_;
  bool writing_ = false;
  bool closed_ = false;
  bool close_after_flush_ = false;
};

http::response<http::string_body> json_response(http::status status, const json& body, unsigned version,
                                                bool keep_alive) {
  http::response<http::string_body> res{status, version};
  res.set(http::field::server, "thermoact-gateway");
  res.set(http::field::content_type, "application/json");
  res.keep_alive(keep_alive);
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

std::string ws_session_id(std::string_view target) {
  constexpr std::string_view prefix = "/ws/";
  if (target.substr(0, prefix.size()) != prefix) return {};
  std::string_view rest = target.substr(prefix.size());
  if (const auto q = rest.find('?'); q != std::string_view::npos) rest = rest.substr(0, q);
  return std::string(rest);
}

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, Registry& registry) : stream_(std::move(socket)), registry_(registry) {}

  void start() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read_next, shared_from_this()));
  }

 private:
  void read_next() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;

    if (websocket::is_upgrade(request_)) {
      const std::string id = ws_session_id(std::string(request_.target()));
      auto runner = id.empty() ? nullptr : registry_.find(id);
      stream_.expires_never();
      auto ws = std::make_shared<WsConnection>(stream_.release_socket(), runner, registry_.capacity());
      if (runner) {
        ws->start(std::move(request_));
      } else {
        ws->reject(std::move(request_), "unknown session '" + id + "'");
      }
      return;
    }

    response_ = std::make_shared<http::response<http::string_body>>(route());
    http::async_write(stream_, *response_,
                      beast::bind_front_handler(&HttpConnection::on_write, shared_from_this(), response_->need_eof()));
  }

  http::response<http::string_body> route() {
    const unsigned version = request_.version();
    const bool keep = request_.keep_alive();
    const std::string target(request_.target());
    const auto method = request_.method();

    if (target == "/health") {
      if (method != http::verb::get) return json_response(http::status::method_not_allowed, {{"error", "use GET"}}, version, keep);
      return json_response(http::status::ok,
                           {{"status", "ok"}, {"version", kGatewayVersion}, {"protocol", kProtocolVersion}},
                           version, keep);
    }
    if (target == "/tasks") {
      if (method != http::verb::get) return json_response(http::status::method_not_allowed, {{"error", "use GET"}}, version, keep);
      return json_response(http::status::ok, task_catalog(), version, keep);
    }
    if (target == "/session") {
      if (method != http::verb::post) return json_response(http::status::method_not_allowed, {{"error", "use POST"}}, version, keep);
      json body = json::object();
      if (!request_.body().empty()) {
        body = json::parse(request_.body(), nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
          return json_response(http::status::bad_request, {{"error", "body must be a JSON object"}}, version, keep);
        }
      }
      try {
        auto runner = registry_.create(body);
        return json_response(http::status::ok,
                             {{"session", runner->id()}, {"ws", "/ws/" + runner->id()}, {"protocol", kProtocolVersion}},
                             version, keep);
      } catch (const Error& e) {
        return json_response(http::status::bad_request, {{"error", e.message()}}, version, keep);
      }
    }
    const std::string id = ws_session_id(target);
    if (!id.empty()) {
      if (!registry_.find(id)) {
        return json_response(http::status::not_found, {{"error", "unknown session '" + id + "'"}}, version, keep);
      }
      return json_response(http::status::upgrade_required, {{"error", "websocket upgrade required"}}, version, keep);
    }
    return json_response(http::status::not_found, {{"error", "no route for " + target}}, version, keep);
  }

  void on_write(bool close, beast::error_code ec, std::size_t) {
    if (ec) return;
    if (close) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    response_.reset();
    read_next();
  }

  beast::tcp_stream stream_;
  Registry& registry_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  std::shared_ptr<http::response<http::string_body>> response_;
};

}  // namespace

struct GatewayServer::Impl {
  explicit Impl(GatewayConfig defaults) : registry(std::move(defaults)) {}

  void accept_next() {
    acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), registry)->start();
      accept_next();
    });
  }

  net::io_context ioc{1};
  std::optional<tcp::acceptor> acceptor;
  Registry registry;
  std::thread thread;
  std::atomic<unsigned short> port{0};
  std::mutex mutex;
  std::condition_variable stopped_cv;
  bool running = false;
};

GatewayServer::GatewayServer(GatewayConfig defaults) : impl_(std::make_unique<Impl>(std::move(defaults))) {}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::start(const std::string& address, unsigned short port) {
  if (impl_->running) throw Error(ErrorCode::kState, "gateway already running");
  beast::error_code ec;
  const auto ip = net::ip::make_address(address, ec);
  if (ec) throw Error(ErrorCode::kConfig, "bad bind address '" + address + "': " + ec.message());
  const tcp::endpoint endpoint(ip, port);
  tcp::acceptor acceptor(impl_->ioc);
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw Error(ErrorCode::kNetwork,
                "cannot bind " + address + ":" + std::to_string(port) + ": " + ec.message());
  }
  impl_->port = acceptor.local_endpoint().port();
  impl_->acceptor.emplace(std::move(acceptor));
  impl_->accept_next();
  impl_->running = true;
  impl_->thread = std::thread([impl = impl_.get()] { impl->ioc.run(); });
}

void GatewayServer::stop() {
  if (!impl_->running) return;
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->registry.shutdown();
  {
    std::lock_guard lock(impl_->mutex);
    impl_->running = false;
  }
  impl_->stopped_cv.notify_all();
}

void GatewayServer::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [&] { return !impl_->running; });
}

unsigned short GatewayServer::port() const noexcept { return impl_->port; }

std::size_t GatewayServer::session_count() const { return impl_->registry.size(); }

}  // namespace thermoact
