#include <gtest/gtest.h>

#include "test_util.hpp"
#include "thermoact/gateway.hpp"
#include "ws_client.hpp"

using namespace thermoact;
using nlohmann::json;
using testutil::http::verb;
using testutil::http_request;
using testutil::WsClient;

namespace {

class GatewayServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    GatewayConfig defaults;
    defaults.record_root = dir_.path();
    server_ = std::make_unique<GatewayServer>(defaults);
    server_->start("127.0.0.1", 0);
    ASSERT_NE(server_->port(), 0);
  }
  void TearDown() override { server_->stop(); }

  std::string new_session(const json& body = json::object()) {
    const auto r = http_request(server_->port(), verb::post, "/session", body.dump());
    EXPECT_EQ(r.status, 200) << r.body.dump();
    return r.body["session"].get<std::string>();
  }

  testutil::TempDir dir_;
  std::unique_ptr<GatewayServer> server_;
};

}  // namespace

TEST(TaskCatalog, ListsFiveTasks) {
  const json c = task_catalog();
  ASSERT_EQ(c["tasks"].size(), 5u);
  EXPECT_EQ(c["tasks"][1]["instruction"], "Give me a cold Coke");
}

TEST_F(GatewayServerTest, HealthAndTasks) {
  const auto health = http_request(server_->port(), verb::get, "/health");
  EXPECT_EQ(health.status, 200);
  EXPECT_EQ(health.body["status"], "ok");
  EXPECT_EQ(health.body["protocol"], kProtocolVersion);
  const auto tasks = http_request(server_->port(), verb::get, "/tasks");
  EXPECT_EQ(tasks.status, 200);
  EXPECT_EQ(tasks.body["tasks"].size(), 5u);
  EXPECT_EQ(http_request(server_->port(), verb::post, "/health").status, 405);
  EXPECT_EQ(http_request(server_->port(), verb::get, "/nowhere").status, 404);
}

TEST_F(GatewayServerTest, SessionCreation) {
  const auto r = http_request(server_->port(), verb::post, "/session", json{{"task", 4}, {"seed", 2}}.dump());
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["ws"], "/ws/" + r.body["session"].get<std::string>());
  EXPECT_EQ(server_->session_count(), 1u);
  EXPECT_EQ(http_request(server_->port(), verb::post, "/session", json{{"task", 7}}.dump()).status, 400);
  EXPECT_EQ(http_request(server_->port(), verb::post, "/session", "[1,2]").status, 400);
  EXPECT_EQ(http_request(server_->port(), verb::get, "/ws/nope").status, 404);
  EXPECT_EQ(http_request(server_->port(), verb::get, "/ws/" + r.body["session"].get<std::string>()).status, 426);
}

TEST_F(GatewayServerTest, UnknownSessionGetsErrorThenClose) {
  WsClient client(server_->port(), "/ws/missing");
  const auto m = client.receive();
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ((*m)["type"], "error");
  EXPECT_EQ((*m)["message"], "unknown session 'missing'");
  EXPECT_FALSE(client.receive().has_value());
  EXPECT_EQ(client.close_reason().code, testutil::websocket::close_code::policy_error);
}

TEST_F(GatewayServerTest, WebSocketRoundTrip) {
  const std::string id = new_session(json{{"task", 2}, {"seed", 4}});
  WsClient client(server_->port(), "/ws/" + id);
  const auto hello = client.receive();
  ASSERT_TRUE(hello.has_value());
  EXPECT_EQ((*hello)["type"], "hello");
  EXPECT_EQ((*hello)["session"], id);
  EXPECT_EQ((*hello)["recording_enabled"], true);

  client.send({{"type", "hello"}, {"seq", 1}, {"protocol", kProtocolVersion}});
  auto ack = client.receive_type("ack");
  ASSERT_TRUE(ack.has_value());
  EXPECT_EQ((*ack)["seq"], 1);

  client.send({{"type", "jog"}, {"seq", 2}, {"deltas", {0.05, 0, 0, 0, 0, 0}}});
  int frames = 0;
  bool acked = false;
  bool state = false;
  while (!(acked && frames == 2 && state)) {
    const auto m = client.receive();
    ASSERT_TRUE(m.has_value());
    const std::string type = (*m)["type"];
    if (type == "frame") ++frames;
    if (type == "state_update") state = true;
    if (type == "ack") {
      EXPECT_EQ((*m)["seq"], 2);
      acked = true;
    }
  }

  client.send({{"type", "jog"}, {"seq", 2}, {"deltas", {0, 0, 0, 0, 0, 0}}});
  const auto err = client.receive_type("error");
  ASSERT_TRUE(err.has_value());
  EXPECT_EQ((*err)["seq"], 2);

  client.send({{"type", "start_recording"}, {"seq", 3}, {"episode_id", "ws"}});
  ASSERT_EQ((*client.receive_type("ack"))["episode_id"], "ws");
  client.send({{"type", "gripper"}, {"seq", 4}, {"aperture", 0.5}});
  ASSERT_TRUE(client.receive_type("ack").has_value());
  client.send({{"type", "mark_done"}, {"seq", 5}});
  ASSERT_TRUE(client.receive_type("ack").has_value());
  client.send({{"type", "stop_recording"}, {"seq", 6}});
  const auto stop = client.receive_type("ack");
  ASSERT_TRUE(stop.has_value());
  EXPECT_EQ((*stop)["frames"], 1);
  EXPECT_EQ(read_episode(dir_.path() / "episode_ws").frames.size(), 1u);
}

TEST_F(GatewayServerTest, TwoClientsShareSession) {
  const std::string id = new_session();
  WsClient a(server_->port(), "/ws/" + id);
  WsClient b(server_->port(), "/ws/" + id);
  ASSERT_EQ((*a.receive())["type"], "hello");
  ASSERT_EQ((*b.receive())["type"], "hello");
  a.send({{"type", "jog"}, {"seq", 1}, {"deltas", {0.05, 0, 0, 0, 0, 0}}});
  ASSERT_TRUE(a.receive_type("ack").has_value());
  const auto seen = b.receive_type("state_update");
  ASSERT_TRUE(seen.has_value());
  EXPECT_EQ((*seen)["seq"], 1);
}

TEST(GatewayServer, BindFailures) {
  GatewayServer first({});
  first.start("127.0.0.1", 0);
  GatewayServer second({});
  try {
    second.start("127.0.0.1", first.port());
    // Some kernels allow the rebind with SO_REUSEADDR; nothing to check then.
    second.stop();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNetwork);
  }
  GatewayServer bad({});
  EXPECT_THROW(bad.start("not-an-address", 0), Error);
  first.stop();
}
