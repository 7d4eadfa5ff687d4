#include <gtest/gtest.h>

#include <map>

#include "test_util.hpp"
#include "thermoact/grounding.hpp"
#include "thermoact/orchestrator.hpp"
#include "thermoact/policy.hpp"
#include "stub_http.hpp"

using namespace thermoact;
using testutil::code_of;
using testutil::StubServer;

namespace {

struct Rollout {
  int cycles = 0;
  bool done = false;
};

/// Drives `policy` on one prompt at 10 Hz until it reports done or the budget runs out.
Rollout run_prompt(Scene& scene, Policy& policy, Condition condition, const std::string& prompt,
                   int budget = kDefaultBudget) {
  Rollout r;
  for (; r.cycles < budget; ++r.cycles) {
    const Observation obs(scene, condition, prompt);
    const Action a = policy.act(obs);
    a.validate();
    if (a.done >= kDoneThreshold) {
      r.done = true;
      break;
    }
    for (int k = 0; k < kSimStepsPerControl; ++k) scene.step(kSimDt, a);
  }
  return r;
}

std::string warm_cup_id(const Scene& s) {
  std::string best;
  double t = -1e9;
  for (const auto& o : s.objects()) {
    if (o.cls == ObjectClass::kCup && o.temperature > t) {
      t = o.temperature;
      best = o.id;
    }
  }
  return best;
}

}  // namespace

TEST(Action, FlattenAndFromValues) {
  Action a;
  a.joint_targets.q = {0.1, -0.2, 0.3, -0.4, 0.5, -0.6};
  a.gripper = 0.25;
  a.done = 1.0;
  const auto v = a.flatten();
  EXPECT_EQ(v, (std::array<double, 8>{0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.25, 1.0}));
  EXPECT_EQ(Action::from_values(v), a);
  const std::vector<double> seven(7, 0.0);
  EXPECT_EQ(code_of([&] { Action::from_values(seven); }), ErrorCode::kDimension);
  EXPECT_NO_THROW(a.validate());
}

TEST(Action, ValidateRejectsOutOfRange) {
  Action a;
  a.joint_targets.q[2] = 3.0;
  EXPECT_EQ(code_of([&] { a.validate(); }), ErrorCode::kInvalidInput);
  Action b;
  b.gripper = 1.5;
  EXPECT_EQ(code_of([&] { b.validate(); }), ErrorCode::kInvalidInput);
  Action c;
  c.done = -0.1;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidInput);
}

TEST(Condition, ParseVariants) {
  EXPECT_EQ(parse_condition("RGBT"), Condition::kRgbt);
  EXPECT_EQ(parse_condition("rgb-rgb"), Condition::kRgbRgb);
  EXPECT_EQ(parse_condition("RGB_RGB"), Condition::kRgbRgb);
  EXPECT_EQ(parse_condition("Flat"), Condition::kFlat);
  EXPECT_FALSE(parse_condition("thermal").has_value());
  for (Condition c : {Condition::kRgbt, Condition::kRgbRgb, Condition::kFlat}) {
    EXPECT_EQ(parse_condition(to_string(c)), c);
  }
}

TEST(SubTaskQueue, AdvancesOnDoneThreshold) {
  SubTaskQueue q;
  q.subtasks = {SubTask::pick_up("coke", "floor"), SubTask::place("coke", Relation::kOn, "plate")};
  Action a;
  a.done = 0.4;
  advance_if_done(q, a);
  EXPECT_EQ(q.position, 0u);
  a.done = 0.6;
  advance_if_done(q, a);
  EXPECT_EQ(q.position, 1u);
  EXPECT_FALSE(q.terminated);
  EXPECT_EQ(q.current_prompt(), "place [coke] on the [plate]");
  a.done = 1.0;
  advance_if_done(q, a);
  EXPECT_TRUE(q.terminated);
  EXPECT_EQ(q.position, 1u);

  SubTaskQueue empty;
  EXPECT_EQ(code_of([&] { advance_if_done(empty, a); }), ErrorCode::kState);
}

TEST(Observation, ImageSizesByCondition) {
  const Scene s = scene_from_task(1, 3);
  const Observation rgbt(s, Condition::kRgbt, "pick up [an apple] from [fruit plate]");
  EXPECT_TRUE(rgbt.thermal_visible());
  EXPECT_EQ(rgbt.external_image().width(), 256);
  EXPECT_EQ(rgbt.external_image().height(), 256);
  EXPECT_EQ(rgbt.wrist_image_raw().width(), 640);
  EXPECT_EQ(rgbt.wrist_image().width(), 256);
  EXPECT_EQ(rgbt.wrist_image().height(), 256);
  EXPECT_EQ(rgbt.state(), s.state());

  const Observation rgb(s, Condition::kRgbRgb, "x");
  EXPECT_FALSE(rgb.thermal_visible());
  EXPECT_EQ(rgb.external_image().width(), 640);
  EXPECT_EQ(rgb.external_image().height(), 480);

  const auto j = rgbt.to_json();
  EXPECT_EQ(j["prompt"], "pick up [an apple] from [fruit plate]");
  EXPECT_EQ(j["state"].size(), 7u);
  EXPECT_EQ(png_dimensions(base64_decode(j["external_image"].get<std::string>())), (ImageSize{256, 256}));
}

TEST(ScriptedPolicy, PicksUpWarmCup) {
  Scene s = scene_from_task(1, 5);
  ScriptedPolicy p(5);
  const std::string prompt = "pick up [warm water] from [floor]";
  const Rollout r = run_prompt(s, p, Condition::kRgbt, prompt);
  ASSERT_TRUE(r.done);
  EXPECT_EQ(p.resolved_object(), warm_cup_id(s));
  const SceneObject* held = s.attached_object();
  ASSERT_NE(held, nullptr);
  EXPECT_EQ(held->id, warm_cup_id(s));
  EXPECT_GT(held->position.z(), 0.05 + kLiftMin);
}

TEST(ScriptedPolicy, Deterministic) {
  auto trace = [] {
    Scene s = scene_from_task(2, 4);
    ScriptedPolicy p(9);
    std::vector<Action> actions;
    for (int i = 0; i < 60; ++i) {
      const Action a = p.act(Observation(s, Condition::kRgbt, "pick up [coke] from [floor]"));
      actions.push_back(a);
      for (int k = 0; k < kSimStepsPerControl; ++k) s.step(kSimDt, a);
    }
    return actions;
  };
  EXPECT_EQ(trace(), trace());
}

TEST(ScriptedPolicy, DoneStaysRaisedAfterFinish) {
  Scene s = scene_from_task(5, 2);
  ScriptedPolicy p(2);
  const std::string prompt = "turn off [hair straightener]";
  ASSERT_TRUE(run_prompt(s, p, Condition::kRgbt, prompt).done);
  EXPECT_FALSE(s.find("straightener_1")->powered);
  EXPECT_GE(p.act(Observation(s, Condition::kRgbt, prompt)).done, kDoneThreshold);
}

TEST(ScriptedPolicy, BadPromptsThrow) {
  const Scene s = scene_from_task(1, 0);
  ScriptedPolicy p(0);
  EXPECT_EQ(code_of([&] { p.act(Observation(s, Condition::kRgbt, "pick up [banana] from [floor]")); }),
            ErrorCode::kResolution);
  EXPECT_EQ(code_of([&] { p.act(Observation(s, Condition::kRgbt, "fetch the banana")); }), ErrorCode::kPolicy);
}

TEST(ScriptedPolicy, BlindObserverGuessesUniformly) {
  const Scene s = scene_from_task(1, 11);
  const std::string warm = warm_cup_id(s);
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 600; ++seed) {
    ScriptedPolicy p(seed);
    p.act(Observation(s, Condition::kRgbRgb, "pick up [warm water] from [floor]"));
    hits += p.resolved_object() == warm ? 1 : 0;
  }
  EXPECT_NEAR(hits, 200, 35);
}

TEST(ScriptedPolicy, ThermalObserverAlwaysFindsWarmCup) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = scene_from_task(1, seed);
    ScriptedPolicy p(seed);
    p.act(Observation(s, Condition::kRgbt, "pick up [warm water] from [floor]"));
    EXPECT_EQ(p.resolved_object(), warm_cup_id(s)) << seed;
  }
}

TEST(FlatPolicy, ZeroDriftPicksBatteryLikeScripted) {
  Scene s = scene_from_task(4, 1);
  const std::string prompt(task_instruction(4));
  FlatPolicy flat({SubTask::pick_up("overheated battery")}, 0.0, 1);
  EXPECT_EQ(flat.num_subtasks(), 1u);
  ASSERT_TRUE(run_prompt(s, flat, Condition::kFlat, prompt).done);
  const SceneObject* held = s.attached_object();
  ASSERT_NE(held, nullptr);
  EXPECT_GT(held->temperature, s.ambient() + 10.0);
}

TEST(FlatPolicy, WalksThroughSubtasks) {
  Scene s = scene_from_task(5, 0);
  FlatPolicy flat(mock_plan(s, task_instruction(5)).subtasks, 0.0, 0);
  ASSERT_EQ(flat.num_subtasks(), 3u);
  std::size_t highest = 0;
  for (int i = 0; i < 3 * kDefaultBudget; ++i) {
    const Action a = flat.act(Observation(s, Condition::kFlat, std::string(task_instruction(5))));
    highest = std::max(highest, flat.current_subtask());
    if (a.done >= kDoneThreshold) break;
    for (int k = 0; k < kSimStepsPerControl; ++k) s.step(kSimDt, a);
  }
  EXPECT_EQ(highest, 2u);
}

TEST(FlatPolicy, RejectsBadConstruction) {
  EXPECT_EQ(code_of([] { FlatPolicy({}, 0.0, 0); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([] { FlatPolicy({SubTask::turn_off("x")}, -1.0, 0); }), ErrorCode::kInvalidInput);
}

TEST(RemotePolicy, ReturnsServedAction) {
  StubServer stub([](const nlohmann::json&, int) {
    return nlohmann::json{{"action", {0.0, 0.1, 0.2, 0.3, 0.0, 0.0, 0.5, 0.0}}}.dump();
  });
  RemotePolicy policy(stub.url("/v1/act"), 5.0);
  const Scene s = scene_from_task(2, 0);
  const Action a = policy.act(Observation(s, Condition::kRgbt, "pick up [coke] from [floor]"));
  EXPECT_DOUBLE_EQ(a.joint_targets[3], 0.3);
  EXPECT_DOUBLE_EQ(a.gripper, 0.5);
  const auto reqs = stub.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0]["observation"]["prompt"], "pick up [coke] from [floor]");
  EXPECT_TRUE(reqs[0]["observation"].contains("wrist_image"));
}

TEST(RemotePolicy, Errors) {
  StubServer seven([](const nlohmann::json&, int) {
    return nlohmann::json{{"action", std::vector<double>(7, 0.0)}}.dump();
  });
  StubServer slow([](const nlohmann::json&, int) { return R"({"action":[0,0,0,0,0,0,1,0]})"; },
                  std::chrono::milliseconds(300));
  const Scene s = scene_from_task(2, 0);
  const Observation obs(s, Condition::kRgbt, "pick up [coke] from [floor]");
  EXPECT_EQ(code_of([&] { RemotePolicy(seven.url(), 5.0).act(obs); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([&] { RemotePolicy(slow.url(), 0.001).act(obs); }), ErrorCode::kTimeout);
  EXPECT_EQ(code_of([&] { RemotePolicy(testutil::kRefusedUrl, 1.0).act(obs); }), ErrorCode::kNetwork);
  EXPECT_EQ(code_of([] { RemotePolicy("", 1.0); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([] { RemotePolicy("http://127.0.0.1:9/", 0.0); }), ErrorCode::kConfig);
}
