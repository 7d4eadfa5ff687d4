#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoact/control.hpp"
#include "thermoact/dataset.hpp"
#include "thermoact/plan.hpp"
#include "thermoact/planner.hpp"
#include "thermoact/policy.hpp"
#include "thermoact/scene.hpp"

namespace thermoact {

inline constexpr double kSimDt = 1.0 / 30.0;
inline constexpr int kSimStepsPerControl = 3;  // 10 Hz control
inline constexpr int kSimStepsPerRecord = 2;   // 15 Hz recording
inline constexpr int kDefaultBudget = 300;
inline constexpr double kDefaultFlatDrift = 0.01;

// Success criteria.
inline constexpr double kLiftMin = 0.10;
inline constexpr double kPlaceTolerance = 0.05;

struct SubtaskOutcome {
  std::string subtask;
  bool success = false;
  int steps = 0;
  std::string note;

  friend bool operator==(const SubtaskOutcome&, const SubtaskOutcome&) = default;
};

struct TrialResult {
  int task_id = 0;
  Condition condition = Condition::kRgbt;
  std::uint64_t seed = 0;
  std::vector<SubtaskOutcome> subtasks;
  double sim_seconds = 0.0;
  /// Set when planning failed; the trial then has no sub-tasks.
  std::string planning_error;

  bool end_to_end() const;
  nlohmann::json to_json() const;
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>(std::uint64_t seed)>;

struct TrialOptions {
  int budget = kDefaultBudget;  // control steps per sub-task
  SceneConfig scene;
  /// Defaults to the mock planner.
  PlanningFunction planner;
  /// Defaults to the scripted oracle; ignored under FLAT.
  PolicyFactory policy;
  double flat_drift_sigma = kDefaultFlatDrift;
  /// When set, frames are streamed here at 15 Hz.
  EpisodeRecorder* recorder = nullptr;
};

/// Whether `subtask` was achieved between the two snapshots, judged on true
/// temperatures (any object in the ground-truth tie set counts). Place and
/// pour are judged on the object held at `before`.
bool judge_subtask(const Scene& before, const Scene& after, const SubTask& subtask);

/// Plans, executes each sub-task until done or budget, judges it, and moves
/// on regardless of the outcome.
TrialResult run_trial(int task_id, Condition condition, std::uint64_t seed,
                      const TrialOptions& options = {});

struct TableRow {
  std::string subtask;
  int successes = 0;
  int attempts = 0;

  double rate() const { return attempts == 0 ? 0.0 : 100.0 * successes / attempts; }
  friend bool operator==(const TableRow&, const TableRow&) = default;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

/// Mean and sample (n-1) standard deviation; a singleton has sd 0. Throws
/// kInvalidInput for an empty list.
MeanSd aggregate(const std::vector<double>& rates);

struct SuccessTable {
  int task_id = 0;
  Condition condition = Condition::kRgbt;
  int trials = 0;
  int end_to_end_successes = 0;
  int planning_failures = 0;
  /// In first-seen order, which follows the plan order.
  std::vector<TableRow> rows;

  MeanSd task_average() const;
  double end_to_end_rate() const { return trials == 0 ? 0.0 : 100.0 * end_to_end_successes / trials; }
  nlohmann::json to_json() const;
};

SuccessTable tabulate(int task_id, Condition condition, const std::vector<TrialResult>& trials);

/// Seeds seed0 .. seed0 + n - 1.
SuccessTable run_experiment(int task_id, Condition condition, int n_trials, std::uint64_t seed0,
                            const TrialOptions& options = {});

struct Report {
  std::string markdown;
  std::string csv;
};

/// Condition columns in the order FLAT, RGB_RGB, RGBT; missing cells show "-".
/// Throws kInvalidInput for empty input.
Report render_report(const std::vector<SuccessTable>& tables);

/// Runs one trial while recording it; the last frame of each sub-task carries
/// done = 1.
Episode record_demonstration(int task_id, std::uint64_t seed, const std::filesystem::path& out_dir,
                             Condition condition = Condition::kRgbt, TrialOptions options = {});

}  // namespace thermoact
