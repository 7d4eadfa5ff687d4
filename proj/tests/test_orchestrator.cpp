#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "thermoact/orchestrator.hpp"

using namespace thermoact;
using testutil::code_of;
using testutil::TempDir;

namespace {

SuccessTable table_of(int task, Condition c, const std::vector<double>& rates) {
  SuccessTable t;
  t.task_id = task;
  t.condition = c;
  t.trials = 10;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    t.rows.push_back({"row " + std::to_string(i), static_cast<int>(rates[i] / 10.0), 10});
  }
  return t;
}

/// A scene whose cup is held by the gripper, as judged by attachment.
Scene holding(Scene s, const std::string& id) {
  s.find_mutable(id)->grasp_offset = Eigen::Vector3d::Zero();
  return s;
}

}  // namespace

TEST(Aggregate, MatchesOracle) {
  const std::vector<std::vector<double>> rows = {
      {90, 90, 70, 70}, {90, 80, 80, 60, 60}, {100, 60}, {80}, {90, 60, 60}, {40, 100, 70, 80}, {80, 90, 80}};
  for (const auto& r : rows) {
    const MeanSd got = aggregate(r);
    const auto want = oracle::sample_mean_sd(r);
    EXPECT_NEAR(got.mean, want.mean, 1e-12);
    EXPECT_NEAR(got.sd, want.sd, 1e-12);
  }
  const MeanSd overall = aggregate({80, 74, 80, 80, 70});
  EXPECT_NEAR(overall.mean, 76.8, 0.05);
  EXPECT_NEAR(overall.sd, 4.6, 0.05);
  const MeanSd blind = aggregate({40, 100, 70, 80});
  EXPECT_NEAR(blind.mean, 72.5, 0.05);
  EXPECT_NEAR(blind.sd, 25.0, 0.05);
  EXPECT_EQ(aggregate({80}).sd, 0.0);
  EXPECT_EQ(code_of([] { aggregate({}); }), ErrorCode::kInvalidInput);
}

TEST(JudgeSubtask, PickUpNeedsLiftAndRightObject) {
  const Scene before = scene_from_task(4, 0);
  std::string hot;
  for (const auto& o : before.objects()) {
    if (o.cls == ObjectClass::kBattery && o.temperature > before.ambient() + 10.0) hot = o.id;
  }
  ASSERT_FALSE(hot.empty());
  const SubTask pick = SubTask::pick_up("overheated battery");

  Scene lifted = holding(before, hot);
  lifted.find_mutable(hot)->position.z() += 0.12;
  EXPECT_TRUE(judge_subtask(before, lifted, pick));

  Scene low = holding(before, hot);
  low.find_mutable(hot)->position.z() += 0.08;
  EXPECT_FALSE(judge_subtask(before, low, pick));

  const std::string cold = hot == "battery_1" ? "battery_2" : "battery_1";
  Scene wrong = holding(before, cold);
  wrong.find_mutable(cold)->position.z() += 0.12;
  EXPECT_FALSE(judge_subtask(before, wrong, pick));
  EXPECT_FALSE(judge_subtask(before, before, pick));
}

TEST(JudgeSubtask, PlaceWithinTolerance) {
  const Scene base = scene_from_task(2, 0);
  const Scene before = holding(base, "coke_1");
  const SubTask place = SubTask::place("coke", Relation::kRightSide, "empty plate");
  const Eigen::Vector3d plate = base.find("plate_empty")->position;

  Scene near = base;
  near.find_mutable("coke_1")->position = plate + Eigen::Vector3d(0.12 + 0.03, 0.0, 0.0);
  EXPECT_TRUE(judge_subtask(before, near, place));

  Scene far = base;
  far.find_mutable("coke_1")->position = plate + Eigen::Vector3d(0.12 + 0.08, 0.0, 0.0);
  EXPECT_FALSE(judge_subtask(before, far, place));

  EXPECT_FALSE(judge_subtask(before, before, place));
  EXPECT_FALSE(judge_subtask(base, near, place));
}

TEST(JudgeSubtask, TurnOffAndPress) {
  const Scene before = scene_from_task(5, 0);
  Scene off = before;
  off.find_mutable("straightener_1")->powered = false;
  EXPECT_TRUE(judge_subtask(before, off, SubTask::turn_off("hair straightener")));
  EXPECT_FALSE(judge_subtask(before, before, SubTask::turn_off("hair straightener")));

  const Scene ice = scene_from_task(2, 1);
  Scene pressed = ice;
  ++pressed.find_mutable("ice_maker_1")->event_count;
  EXPECT_TRUE(judge_subtask(ice, pressed, SubTask::press("the button", "ice maker")));
  EXPECT_FALSE(judge_subtask(ice, ice, SubTask::press("the button", "ice maker")));
}

TEST(RunTrial, Task4SucceedsUnderThermal) {
  const TrialResult r = run_trial(4, Condition::kRgbt, 0);
  EXPECT_TRUE(r.planning_error.empty());
  ASSERT_EQ(r.subtasks.size(), 1u);
  EXPECT_TRUE(r.subtasks[0].success) << r.subtasks[0].note;
  EXPECT_TRUE(r.end_to_end());
  EXPECT_GT(r.sim_seconds, 0.0);
  EXPECT_EQ(r.to_json()["end_to_end"], true);
}

TEST(RunTrial, EveryTaskCompletesUnderThermal) {
  for (int task = 1; task <= kNumTasks; ++task) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const TrialResult r = run_trial(task, Condition::kRgbt, seed);
      EXPECT_TRUE(r.end_to_end()) << r.to_json().dump();
    }
  }
}

TEST(RunTrial, PlanningFailureIsRecorded) {
  TrialOptions opts;
  opts.planner = [](const Scene& scene, std::string_view instruction) {
    Scene tepid = scene;
    for (const char* id : {"cup_1", "cup_2", "cup_3"}) tepid.find_mutable(id)->temperature = tepid.ambient();
    return mock_plan(tepid, instruction);
  };
  const TrialResult r = run_trial(1, Condition::kRgbt, 0, opts);
  EXPECT_EQ(r.planning_error, "no warm cup");
  EXPECT_TRUE(r.subtasks.empty());
  EXPECT_FALSE(r.end_to_end());
  EXPECT_EQ(tabulate(1, Condition::kRgbt, {r}).planning_failures, 1);
}

TEST(RunTrial, BudgetExhaustionMovesOn) {
  TrialOptions opts;
  opts.budget = 5;
  const TrialResult r = run_trial(2, Condition::kRgbt, 0, opts);
  ASSERT_EQ(r.subtasks.size(), 2u);
  for (const auto& s : r.subtasks) {
    EXPECT_FALSE(s.success);
    EXPECT_LE(s.steps, 5);
  }
  EXPECT_EQ(r.subtasks[0].note, "step budget exhausted");
  opts.budget = 0;
  EXPECT_EQ(code_of([&] { run_trial(2, Condition::kRgbt, 0, opts); }), ErrorCode::kConfig);
}

TEST(RunTrial, Deterministic) {
  for (Condition c : {Condition::kRgbt, Condition::kRgbRgb, Condition::kFlat}) {
    EXPECT_EQ(run_trial(1, c, 12), run_trial(1, c, 12));
  }
}

TEST(RunTrial, FlatReportsEverySubtask) {
  const TrialResult r = run_trial(5, Condition::kFlat, 3);
  ASSERT_EQ(r.subtasks.size(), 3u);
  EXPECT_EQ(r.subtasks[0].subtask, "turn off [hair straightener]");
}

TEST(Tabulate, CountsRowsInPlanOrder) {
  std::vector<TrialResult> trials(3);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    trials[i].task_id = 2;
    trials[i].subtasks = {{"a", true, 1, {}}, {"b", i != 0, 1, {}}};
  }
  trials[2].subtasks.push_back({"c", false, 1, {}});
  const SuccessTable t = tabulate(2, Condition::kRgbt, trials);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[0], (TableRow{"a", 3, 3}));
  EXPECT_EQ(t.rows[1], (TableRow{"b", 2, 3}));
  EXPECT_EQ(t.rows[2], (TableRow{"c", 0, 1}));
  EXPECT_EQ(t.end_to_end_successes, 1);
  EXPECT_NEAR(t.end_to_end_rate(), 100.0 / 3.0, 1e-9);
  const MeanSd avg = t.task_average();
  const auto want = oracle::sample_mean_sd({100.0, 200.0 / 3.0, 0.0});
  EXPECT_NEAR(avg.mean, want.mean, 1e-9);
  EXPECT_NEAR(avg.sd, want.sd, 1e-9);
}

TEST(RunExperiment, SeedsAreConsecutive) {
  const SuccessTable t = run_experiment(4, Condition::kRgbt, 3, 100);
  EXPECT_EQ(t.trials, 3);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0].attempts, 3);
  EXPECT_EQ(code_of([] { run_experiment(4, Condition::kRgbt, 0, 0); }), ErrorCode::kInvalidInput);
}

TEST(RenderReport, ColumnsAndAverages) {
  const std::vector<SuccessTable> tables = {table_of(1, Condition::kRgbt, {90, 90, 70, 70}),
                                            table_of(1, Condition::kRgbRgb, {40, 100, 70, 80}),
                                            table_of(4, Condition::kRgbt, {80})};
  const Report r = render_report(tables);
  EXPECT_EQ(r.markdown.rfind("| Task | Sub-task | FLAT | RGB_RGB | RGBT |", 0), 0u);
  EXPECT_NE(r.markdown.find("| row 0 | - | 40.0 | 90.0 |"), std::string::npos) << r.markdown;
  EXPECT_NE(r.markdown.find("**Task 1 average** | - | 72.5 ± 25.0 | 80.0 ± 11.5 |"), std::string::npos)
      << r.markdown;
  EXPECT_NE(r.markdown.find("**Task 4 average** | - | - | 80.0 ± 0.0 |"), std::string::npos);
  EXPECT_NE(r.markdown.find("**Overall average** | - | 72.5 ± 0.0 | 80.0 ± 0.0 |"), std::string::npos);
  EXPECT_NE(r.csv.find("1,row 1,rgb-rgb,10,10,100.0\n"), std::string::npos) << r.csv;
  EXPECT_EQ(code_of([] { render_report({}); }), ErrorCode::kInvalidInput);
}

TEST(RecordDemonstration, SpansFollowSubtasks) {
  TempDir dir;
  const Episode e = record_demonstration(4, 2, dir.path());
  ASSERT_EQ(e.spans.size(), 1u);
  EXPECT_EQ(e.spans[0].subtask, "pick up [overheated battery]");
  EXPECT_EQ(e.frames.back().action.back(), 1.0);
  for (std::size_t i = 0; i + 1 < e.frames.size(); ++i) EXPECT_EQ(e.frames[i].action.back(), 0.0);
  const Episode back = read_episode(e.dir);
  EXPECT_EQ(back, e);
  EXPECT_TRUE(validate_episode(back).empty());
  EXPECT_EQ(back.meta.extra["trial"]["end_to_end"], true);
}

TEST(RecordDemonstration, MultiStepTaskMarksEachSpan) {
  TempDir dir;
  const Episode e = record_demonstration(2, 0, dir.path());
  ASSERT_EQ(e.spans.size(), 2u);
  for (const auto& s : e.spans) EXPECT_EQ(e.frames[s.last].action.back(), 1.0) << s.subtask;
  EXPECT_EQ(e.spans[0].subtask, "pick up [coke] from [floor]");
  EXPECT_TRUE(validate_episode(read_episode(e.dir)).empty());
}
