#pragma once

#include <array>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoact/control.hpp"
#include "thermoact/plan.hpp"
#include "thermoact/scene.hpp"

namespace thermoact {

inline constexpr double kControlDt = 0.1;
inline constexpr double kDoneThreshold = 0.5;
inline constexpr int kModelImageSize = 256;

/// What the executor sees at one control cycle. Images are rendered on first
/// access and cached, so policies that never look at pixels cost nothing.
class Observation {
 public:
  Observation(const Scene& scene, Condition condition, std::string task_prompt);

  const Scene& scene() const noexcept { return *scene_; }
  Condition condition() const noexcept { return condition_; }
  const std::array<double, 7>& state() const noexcept { return state_; }
  const std::string& task_prompt() const noexcept { return prompt_; }
  /// Whether the external view carries temperature (false under RGB_RGB).
  bool thermal_visible() const noexcept { return condition_ != Condition::kRgbRgb; }

  /// 256x256 pseudocolor, or the 640x480 RGB render under RGB_RGB.
  const RgbImage& external_image() const;
  /// Wrist RGB at capture resolution, 640x480.
  const RgbImage& wrist_image_raw() const;
  /// Wrist RGB downscaled to the 256x256 model input.
  const RgbImage& wrist_image() const;

  /// Images as base64 PNG, state and prompt.
  nlohmann::json to_json() const;

 private:
  const Scene* scene_;
  Condition condition_;
  std::array<double, 7> state_;
  std::string prompt_;
  mutable std::optional<RgbImage> external_;
  mutable std::optional<RgbImage> wrist_raw_;
  mutable std::optional<RgbImage> wrist_;
};

class Policy {
 public:
  virtual ~Policy() = default;
  /// One 10 Hz control cycle.
  virtual Action act(const Observation& obs) = 0;
};

/// Waypoint oracle for single sub-tasks. The prompt selects the sub-task;
/// a new prompt restarts the state machine with freshly located targets.
class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::uint64_t seed);
  ~ScriptedPolicy() override;

  Action act(const Observation& obs) override;

  /// Id of the object the current sub-task acts on, once resolved.
  const std::string& resolved_object() const noexcept;

 private:
  struct Program;
  std::mt19937_64 rng_;
  std::string prompt_;
  std::unique_ptr<Program> program_;
};

/// One monolithic program for the whole task: every target is located once
/// at the first cycle, grasp offsets are assumed zero, the prompt is never
/// switched, and joint targets accumulate a random-walk drift of
/// `drift_sigma` rad per cycle.
class FlatPolicy : public Policy {
 public:
  FlatPolicy(std::vector<SubTask> subtasks, double drift_sigma, std::uint64_t seed);
  ~FlatPolicy() override;

  Action act(const Observation& obs) override;

  /// Index of the sub-task whose phases are currently running.
  std::size_t current_subtask() const noexcept;
  std::size_t num_subtasks() const noexcept { return subtasks_.size(); }

 private:
  struct Program;
  std::vector<SubTask> subtasks_;
  double drift_sigma_;
  std::mt19937_64 rng_;
  std::array<double, kNumJoints> drift_{};
  std::unique_ptr<Program> program_;
};

/// Posts observations to an inference service; see docs/remote_policy.md.
class RemotePolicy : public Policy {
 public:
  RemotePolicy(std::string endpoint, double timeout_s);
  Action act(const Observation& obs) override;

 private:
  std::string endpoint_;
  double timeout_s_;
};

/// Position in a plan during execution.
struct SubTaskQueue {
  std::vector<SubTask> subtasks;
  std::size_t position = 0;
  bool terminated = false;

  const SubTask& current() const;
  std::string current_prompt() const { return format_subtask(current()); }
};

/// Moves to the next sub-task when `action.done` reaches the threshold;
/// terminates after the last one.
void advance_if_done(SubTaskQueue& queue, const Action& action);

}  // namespace thermoact
