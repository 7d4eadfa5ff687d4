#include "thermoact/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thermoact/error.hpp"
#include "thermoact/grounding.hpp"

namespace thermoact {
namespace {

double horizontal_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

bool contains(const std::vector<std::string>& ids, const std::string& id) {
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

// Ground-truth candidates; an empty list when nothing matches.
std::vector<std::string> truth(const Scene& scene, const std::string& slot) {
  try {
    return tie_set(scene, slot, true);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kResolution) return {};
    throw;
  }
}

/// Advances the simulation for one control period and streams frames.
class Stepper {
 public:
  Stepper(Scene& scene, Condition condition, EpisodeRecorder* recorder)
      : scene_(scene), condition_(condition), recorder_(recorder) {}

  void control(const Action& action, const std::string& prompt) {
    Action held = action;
    held.done = 0.0;
    for (int i = 0; i < kSimStepsPerControl; ++i) {
      if (recorder_ != nullptr && scene_.step_count() % kSimStepsPerRecord == 0) record(held, prompt);
      scene_.step(kSimDt, action);
    }
  }

  /// Marks the end of a sub-task on the newest frame, recording one first if
  /// the sub-task produced none.
  void mark_done(const Action& action, const std::string& prompt) {
    if (recorder_ == nullptr) return;
    if (frames_in_span_ == 0) {
      Action hold = action;
      hold.done = 0.0;
      while (frames_in_span_ == 0) control(hold, prompt);
    }
    recorder_->set_last_done(1.0);
    frames_in_span_ = 0;
  }

  void begin_span() { frames_in_span_ = 0; }

 private:
  void record(const Action& action, const std::string& prompt) {
    const Observation obs(scene_, condition_, prompt);
    FrameRecord frame;
    frame.t = scene_.clock();
    frame.state.assign(obs.state().begin(), obs.state().end());
    const auto flat = action.flatten();
    frame.action.assign(flat.begin(), flat.end());
    frame.prompt = prompt;
    recorder_->append(std::move(frame), obs.external_image(), obs.wrist_image_raw());
    ++frames_in_span_;
  }

  Scene& scene_;
  Condition condition_;
  EpisodeRecorder* recorder_;
  int frames_in_span_ = 0;
};

void run_hierarchical(Scene& scene, const Plan& plan, Condition condition, std::uint64_t seed,
                      const TrialOptions& options, TrialResult& result) {
  std::unique_ptr<Policy> policy =
      options.policy ? options.policy(seed) : std::make_unique<ScriptedPolicy>(seed);
  Stepper stepper(scene, condition, options.recorder);
  SubTaskQueue queue{plan.subtasks, 0, false};

  while (!queue.terminated) {
    const std::size_t index = queue.position;
    const std::string prompt = queue.current_prompt();
    const Scene before = scene;
    SubtaskOutcome outcome;
    outcome.subtask = prompt;
    stepper.begin_span();
    bool done = false;
    try {
      while (outcome.steps < options.budget) {
        const Observation obs(scene, condition, prompt);
        const Action action = policy->act(obs);
        ++outcome.steps;
        if (action.done >= kDoneThreshold) {
          stepper.mark_done(action, prompt);
          advance_if_done(queue, action);
          done = true;
          break;
        }
        stepper.control(action, prompt);
      }
    } catch (const Error& e) {
      outcome.note = e.message();
    }
    if (outcome.note.empty()) {
      outcome.success = judge_subtask(before, scene, plan.subtasks[index]);
      if (!done) outcome.note = "step budget exhausted";
    }
    result.subtasks.push_back(std::move(outcome));
    // A stalled sub-task still hands over to the next one.
    if (!done) {
      Action forced;
      forced.done = 1.0;
      advance_if_done(queue, forced);
    }
  }
}

void run_flat(Scene& scene, const Plan& plan, const std::string& instruction, std::uint64_t seed,
              const TrialOptions& options, TrialResult& result) {
  FlatPolicy policy(plan.subtasks, options.flat_drift_sigma, seed);
  Stepper stepper(scene, Condition::kFlat, options.recorder);
  const std::size_t n = plan.subtasks.size();
  std::vector<Scene> starts{scene};
  for (const auto& t : plan.subtasks) result.subtasks.push_back({format_subtask(t), false, 0, {}});

  std::size_t current = 0;
  std::string failure;
  const auto close_through = [&](std::size_t upto) {
    while (current < upto && current < n) {
      result.subtasks[current].success = judge_subtask(starts[current], scene, plan.subtasks[current]);
      ++current;
      starts.push_back(scene);
    }
  };

  try {
    while (current < n) {
      const Observation obs(scene, Condition::kFlat, instruction);
      const Action action = policy.act(obs);
      close_through(policy.current_subtask());
      if (action.done >= kDoneThreshold) {
        stepper.mark_done(action, instruction);
        close_through(n);
        break;
      }
      SubtaskOutcome& outcome = result.subtasks[current];
      if (outcome.steps >= options.budget) {
        failure = "step budget exhausted";
        break;
      }
      ++outcome.steps;
      stepper.control(action, instruction);
    }
  } catch (const Error& e) {
    failure = e.message();
  }
  if (current < n) {
    result.subtasks[current].note = failure;
    close_through(n);
  }
}

}  // namespace

bool TrialResult::end_to_end() const {
  return planning_error.empty() && !subtasks.empty() &&
         std::all_of(subtasks.begin(), subtasks.end(), [](const auto& s) { return s.success; });
}

nlohmann::json TrialResult::to_json() const {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : subtasks) {
    subs.push_back({{"subtask", s.subtask}, {"success", s.success}, {"steps", s.steps}, {"note", s.note}});
  }
  nlohmann::json j = {{"task_id", task_id},     {"condition", to_string(condition)},
                      {"seed", seed},           {"subtasks", std::move(subs)},
                      {"sim_seconds", sim_seconds}, {"end_to_end", end_to_end()}};
  if (!planning_error.empty()) j["planning_error"] = planning_error;
  return j;
}

bool judge_subtask(const Scene& before, const Scene& after, const SubTask& t) {
  switch (t.verb) {
    case Verb::kPickUp: {
      const SceneObject* held = after.attached_object();
      if (held == nullptr || !contains(truth(before, t.object), held->id)) return false;
      const SceneObject* start = before.find(held->id);
      return start != nullptr && held->position.z() >= start->position.z() + kLiftMin - 1e-9;
    }
    case Verb::kPlace: {
      const SceneObject* held = before.attached_object();
      if (held == nullptr) return false;
      const SceneObject* now = after.find(held->id);
      if (now == nullptr || now->attached()) return false;
      const auto refs = truth(before, t.target);
      return std::any_of(refs.begin(), refs.end(), [&](const std::string& id) {
        Eigen::Vector3d dest = before.find(id)->position;
        if (t.relation == Relation::kRightSide) dest.x() += 0.12;
        return horizontal_distance(now->position, dest) <= kPlaceTolerance;
      });
    }
    case Verb::kPress: {
      std::vector<std::string> appliances = truth(before, t.target);
      for (const auto& id : truth(before, t.object)) {
        const SceneObject* button = before.find(id);
        if (!button->parent.empty()) appliances.push_back(button->parent);
      }
      return std::any_of(appliances.begin(), appliances.end(), [&](const std::string& id) {
        const SceneObject* a = after.find(id);
        return a != nullptr && a->event_count > before.find(id)->event_count;
      });
    }
    case Verb::kPour: {
      const SceneObject* held = before.attached_object();
      if (held == nullptr || held->contents.empty()) return false;
      std::vector<std::string> cups;
      try {
        cups = tie_set(before, t.target, true);
      } catch (const Error&) {
        return false;
      }
      return std::any_of(cups.begin(), cups.end(), [&](const std::string& id) {
        const SceneObject* c = after.find(id);
        return c != nullptr && c->contents == held->contents && before.find(id)->contents != held->contents;
      });
    }
    case Verb::kTurnOff: {
      const auto ids = truth(before, t.object);
      return std::any_of(ids.begin(), ids.end(), [&](const std::string& id) {
        const SceneObject* o = after.find(id);
        return o != nullptr && !o->powered;
      });
    }
  }
  throw Error(ErrorCode::kInvalidInput, "unknown verb");
}

TrialResult run_trial(int task_id, Condition condition, std::uint64_t seed, const TrialOptions& options) {
  if (options.budget <= 0) throw Error(ErrorCode::kConfig, "step budget must be positive");
  TrialResult result;
  result.task_id = task_id;
  result.condition = condition;
  result.seed = seed;

  Scene scene = scene_from_task(task_id, seed, options.scene);
  const std::string instruction(task_instruction(task_id));
  const PlanningFunction planner =
      options.planner ? options.planner : select_backend(PlannerConfig{});
  Plan plan;
  try {
    plan = planner(scene, instruction);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kPlanning && e.code() != ErrorCode::kPlannerOutput &&
        e.code() != ErrorCode::kNetwork && e.code() != ErrorCode::kTimeout) {
      throw;
    }
    result.planning_error = e.message();
    return result;
  }

  if (condition == Condition::kFlat) {
    run_flat(scene, plan, instruction, seed, options, result);
  } else {
    run_hierarchical(scene, plan, condition, seed, options, result);
  }
  result.sim_seconds = scene.clock();
  return result;
}

MeanSd aggregate(const std::vector<double>& rates) {
  if (rates.empty()) throw Error(ErrorCode::kInvalidInput, "cannot aggregate an empty list");
  const double n = static_cast<double>(rates.size());
  const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / n;
  if (rates.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double r : rates) ss += (r - mean) * (r - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

MeanSd SuccessTable::task_average() const {
  std::vector<double> rates;
  for (const auto& r : rows) rates.push_back(r.rate());
  return aggregate(rates);
}

nlohmann::json SuccessTable::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows) {
    rs.push_back({{"subtask", r.subtask}, {"successes", r.successes}, {"attempts", r.attempts}, {"rate", r.rate()}});
  }
  nlohmann::json j = {{"task_id", task_id},
                      {"condition", to_string(condition)},
                      {"trials", trials},
                      {"end_to_end_rate", end_to_end_rate()},
                      {"planning_failures", planning_failures},
                      {"rows", std::move(rs)}};
  if (!rows.empty()) {
    const MeanSd avg = task_average();
    j["task_average"] = avg.mean;
    j["task_sd"] = avg.sd;
  }
  return j;
}

SuccessTable tabulate(int task_id, Condition condition, const std::vector<TrialResult>& trials) {
  SuccessTable table;
  table.task_id = task_id;
  table.condition = condition;
  table.trials = static_cast<int>(trials.size());
  for (const auto& trial : trials) {
    if (!trial.planning_error.empty()) ++table.planning_failures;
    if (trial.end_to_end()) ++table.end_to_end_successes;
    for (const auto& s : trial.subtasks) {
      auto it = std::find_if(table.rows.begin(), table.rows.end(),
                             [&](const TableRow& r) { return r.subtask == s.subtask; });
      if (it == table.rows.end()) {
        table.rows.push_back({s.subtask, 0, 0});
        it = std::prev(table.rows.end());
      }
      ++it->attempts;
      if (s.success) ++it->successes;
    }
  }
  return table;
}

SuccessTable run_experiment(int task_id, Condition condition, int n_trials, std::uint64_t seed0,
                            const TrialOptions& options) {
  if (n_trials <= 0) throw Error(ErrorCode::kInvalidInput, "need at least one trial");
  std::vector<TrialResult> trials;
  trials.reserve(static_cast<std::size_t>(n_trials));
  for (int i = 0; i < n_trials; ++i) {
    trials.push_back(run_trial(task_id, condition, seed0 + static_cast<std::uint64_t>(i), options));
  }
  return tabulate(task_id, condition, trials);
}

Episode record_demonstration(int task_id, std::uint64_t seed, const std::filesystem::path& out_dir,
                             Condition condition, TrialOptions options) {
  EpisodeMeta meta;
  meta.id = "t" + std::to_string(task_id) + "_s" + std::to_string(seed) + "_" + std::string(to_string(condition));
  meta.task_id = task_id;
  meta.condition = condition;
  meta.seed = seed;
  EpisodeRecorder recorder(out_dir, meta);
  options.recorder = &recorder;
  const TrialResult result = run_trial(task_id, condition, seed, options);
  if (!result.planning_error.empty()) {
    throw Error(ErrorCode::kPlanning, "demonstration not recorded: " + result.planning_error);
  }
  // The trial summary rides along in meta.json.
  recorder.set_extra({{"trial", result.to_json()}});
  recorder.finalize();
  return recorder.episode();
}

}  // namespace thermoact
