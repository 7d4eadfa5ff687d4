#include "thermoact/policy.hpp"

#include <algorithm>
#include <cmath>

#include "thermoact/error.hpp"
#include "thermoact/grounding.hpp"

namespace thermoact {

// ---------------------------------------------------------------------------
// Observation

Observation::Observation(const Scene& scene, Condition condition, std::string task_prompt)
    : scene_(&scene), condition_(condition), state_(scene.state()), prompt_(std::move(task_prompt)) {}

const RgbImage& Observation::external_image() const {
  if (!external_) {
    if (condition_ == Condition::kRgbRgb) {
      external_ = render_rgb(*scene_, scene_->camera(CameraKind::kExternal, false));
    } else {
      external_ = thermal_to_pseudocolor(
          render_thermal(*scene_, scene_->camera(CameraKind::kExternal, true)));
    }
  }
  return *external_;
}

const RgbImage& Observation::wrist_image_raw() const {
  if (!wrist_raw_) wrist_raw_ = render_rgb(*scene_, scene_->camera(CameraKind::kWrist, false));
  return *wrist_raw_;
}

const RgbImage& Observation::wrist_image() const {
  if (!wrist_) wrist_ = resize_bilinear(wrist_image_raw(), kModelImageSize, kModelImageSize);
  return *wrist_;
}

nlohmann::json Observation::to_json() const {
  return {
      {"external_image", base64_encode(encode_png(external_image()))},
      {"wrist_image", base64_encode(encode_png(wrist_image()))},
      {"state", state_},
      {"prompt", prompt_},
      {"condition", to_string(condition_)},
  };
}

// ---------------------------------------------------------------------------
// Waypoint programs

namespace {

constexpr double kSettled = 0.01;      // rad, joint-space arrival threshold
constexpr double kTrackingLead = 0.2;  // s, aim ahead of moving targets
constexpr double kApproach = 0.10;
constexpr double kLift = 0.15;
constexpr double kPressApproach = 0.06;
constexpr double kPressDepth = 0.005;
constexpr double kPourApproach = 0.05;
constexpr double kReleaseGap = 0.005;
constexpr double kRightSideOffset = 0.12;
constexpr int kPourDwellTicks = 12;

struct Waypoint {
  enum class Kind { kMove, kMoveRelative, kGrip, kDwell };
  Kind kind = Kind::kMove;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  double gripper = 1.0;
  int ticks = 0;
  std::size_t subtask = 0;
};

Waypoint move(const Eigen::Vector3d& p, double gripper, std::size_t subtask,
              const Eigen::Vector3d& velocity = Eigen::Vector3d::Zero()) {
  return {Waypoint::Kind::kMove, p, velocity, gripper, 0, subtask};
}
Waypoint move_by(const Eigen::Vector3d& d, double gripper, std::size_t subtask) {
  return {Waypoint::Kind::kMoveRelative, d, Eigen::Vector3d::Zero(), gripper, 0, subtask};
}
Waypoint grip(double gripper, std::size_t subtask) {
  return {Waypoint::Kind::kGrip, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), gripper, 0, subtask};
}
Waypoint dwell(int ticks, double gripper, std::size_t subtask) {
  return {Waypoint::Kind::kDwell, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), gripper, ticks, subtask};
}

JointVector joints_of(const std::array<double, 7>& state) {
  JointVector q;
  std::copy_n(state.begin(), kNumJoints, q.q.begin());
  return q;
}

double max_abs_diff(const JointVector& a, const JointVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < kNumJoints; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Executes a waypoint list one control cycle at a time. Time is measured in
/// cycles since the program was built.
class WaypointRunner {
 public:
  std::vector<Waypoint> steps;

  bool finished() const { return index_ >= steps.size(); }
  std::size_t current_subtask() const {
    if (steps.empty()) return 0;
    return finished() ? steps.back().subtask : steps[index_].subtask;
  }

  /// `offset` is added to the commanded joints (flat drift); arrival is
  /// judged against what was actually commanded.
  Action tick(const Observation& obs, const std::array<double, kNumJoints>& offset) {
    const ArmModel& arm = obs.scene().arm();
    const JointVector q = joints_of(obs.state());
    const double aperture = obs.state()[6];
    if (!started_) {
      q_cmd_ = q;
      gripper_cmd_ = aperture >= 0.5 ? 1.0 : 0.0;
      started_ = true;
    }
    ++clock_;

    while (!finished()) {
      const Waypoint& w = steps[index_];
      if (w.kind == Waypoint::Kind::kGrip) {
        gripper_cmd_ = w.gripper;
        const bool reached = w.gripper < 0.5 ? aperture < 0.05 : aperture > 0.95;
        if (reached) {
          next();
          continue;
        }
        return command(arm, offset, 0.0);
      }
      if (w.kind == Waypoint::Kind::kDwell) {
        gripper_cmd_ = w.gripper;
        if (in_step_ >= w.ticks) {
          next();
          continue;
        }
        ++in_step_;
        return command(arm, offset, 0.0);
      }

      if (in_step_ == 0 && w.kind == Waypoint::Kind::kMoveRelative) {
        anchor_ = forward_kinematics(arm, q);
      }
      const Eigen::Vector3d goal =
          w.kind == Waypoint::Kind::kMoveRelative
              ? Eigen::Vector3d(anchor_ + w.point)
              : Eigen::Vector3d(w.point + w.velocity * ((clock_ - 1) * kControlDt + kTrackingLead));
      JointVector q_goal = q_cmd_;
      try {
        q_goal = solve_ik_detailed(arm, goal, q_cmd_).q;
      } catch (const Error&) {
        // Unreachable goal: hold and let the step budget decide.
      }
      const JointVector commanded = apply(arm, q_goal, offset);
      if (max_abs_diff(q, commanded) < kSettled) {
        q_cmd_ = q_goal;
        next();
        continue;
      }
      q_cmd_ = q_goal;
      gripper_cmd_ = w.gripper;
      ++in_step_;
      return command(arm, offset, 0.0);
    }
    return command(arm, offset, 1.0);
  }

 private:
  void next() {
    ++index_;
    in_step_ = 0;
  }

  static JointVector apply(const ArmModel& arm, const JointVector& q,
                           const std::array<double, kNumJoints>& offset) {
    JointVector out = q;
    for (std::size_t i = 0; i < kNumJoints; ++i) out[i] += offset[i];
    return arm.clamp(out);
  }

  Action command(const ArmModel& arm, const std::array<double, kNumJoints>& offset, double done) const {
    Action a;
    a.joint_targets = apply(arm, q_cmd_, offset);
    a.gripper = gripper_cmd_;
    a.done = done;
    return a;
  }

  std::size_t index_ = 0;
  int in_step_ = 0;
  long clock_ = 0;
  bool started_ = false;
  JointVector q_cmd_{};
  double gripper_cmd_ = 1.0;
  Eigen::Vector3d anchor_ = Eigen::Vector3d::Zero();
};

// Objects a scene will create later, located where they will appear.
std::optional<SceneObject> anticipate(const Scene& scene, std::string_view slot_text) {
  if (parse_query(slot_text).noun != "ice cup") return std::nullopt;
  for (const auto& o : scene.objects()) {
    if (o.cls != ObjectClass::kIceMaker) continue;
    SceneObject cup;
    cup.id = "ice_cup_1";
    cup.cls = ObjectClass::kIceCup;
    cup.shape = Shape::cylinder(0.035, 0.05);
    cup.position = o.position + Eigen::Vector3d(0.0, -0.15, 0.0);
    cup.position.z() = cup.shape.half_height();
    return cup;
  }
  return std::nullopt;
}

/// Locates the targets of one sub-task in `scene` and appends its phases.
class ProgramBuilder {
 public:
  ProgramBuilder(const Scene& scene, bool thermal_visible, std::mt19937_64& rng, bool use_grasp_offset)
      : scene_(scene), thermal_(thermal_visible), rng_(rng), use_grasp_offset_(use_grasp_offset) {}

  /// Id of the object acted on (empty when it does not exist yet).
  std::string append(std::vector<Waypoint>& steps, const SubTask& t, std::size_t index) {
    const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
    switch (t.verb) {
      case Verb::kPickUp: {
        const SceneObject obj = locate(t.object);
        steps.push_back(move(obj.position + kApproach * up, 1.0, index, obj.velocity));
        steps.push_back(move(obj.position, 1.0, index, obj.velocity));
        steps.push_back(grip(0.0, index));
        steps.push_back(move_by(kLift * up, 0.0, index));
        return obj.id;
      }
      case Verb::kPlace: {
        const SceneObject* held = scene_.attached_object();
        const SceneObject obj = held ? *held : locate(t.object);
        const SceneObject ref = locate(t.target);
        Eigen::Vector3d dest = ref.position;
        if (t.relation == Relation::kRightSide) {
          dest.x() += kRightSideOffset;
          dest.z() = obj.shape.half_height() + kReleaseGap;
        } else {
          dest.z() = ref.top_z() + obj.shape.half_height() + kReleaseGap;
        }
        Eigen::Vector3d offset = Eigen::Vector3d::Zero();
        if (use_grasp_offset_ && obj.grasp_offset) offset = *obj.grasp_offset;
        const Eigen::Vector3d goal = dest - offset;
        steps.push_back(move(goal + kApproach * up, 0.0, index));
        steps.push_back(move(goal, 0.0, index));
        steps.push_back(grip(1.0, index));
        steps.push_back(move_by(kApproach * up, 1.0, index));
        return obj.id;
      }
      case Verb::kPress:
      case Verb::kTurnOff: {
        const SceneObject obj = locate(t.object);
        const Eigen::Vector3d point = obj.interaction_point().value_or(obj.position);
        steps.push_back(move(point + kPressApproach * up, 1.0, index));
        steps.push_back(move(point - kPressDepth * up, 1.0, index));
        steps.push_back(move_by(kPressApproach * up, 1.0, index));
        return obj.id;
      }
      case Verb::kPour: {
        const SceneObject* held = scene_.attached_object();
        const SceneObject obj = held ? *held : locate(t.object);
        const SceneObject dest = locate(t.target);
        const Eigen::Vector3d point = dest.interaction_point().value_or(dest.position);
        steps.push_back(move(point + kPourApproach * up, 0.0, index));
        steps.push_back(move(point, 0.0, index));
        steps.push_back(dwell(kPourDwellTicks, 0.0, index));
        steps.push_back(move_by(kApproach * up, 0.0, index));
        return obj.id;
      }
    }
    return {};
  }

 private:
  SceneObject locate(const std::string& slot_text) {
    try {
      return *scene_.find(resolve_object(scene_, slot_text, thermal_, rng_));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kResolution) throw;
      if (auto later = anticipate(scene_, slot_text)) return *later;
      throw;
    }
  }

  const Scene& scene_;
  bool thermal_;
  std::mt19937_64& rng_;
  bool use_grasp_offset_;
};

std::uint64_t policy_seed(std::uint64_t seed) { return seed * 0xD1B54A32D192ED03ull + 0x5851F42D4C957F2Dull; }

}  // namespace

// ---------------------------------------------------------------------------
// ScriptedPolicy

struct ScriptedPolicy::Program {
  WaypointRunner runner;
  std::string object_id;
};

ScriptedPolicy::ScriptedPolicy(std::uint64_t seed) : rng_(policy_seed(seed)) {}
ScriptedPolicy::~ScriptedPolicy() = default;

const std::string& ScriptedPolicy::resolved_object() const noexcept {
  static const std::string kNone;
  return program_ ? program_->object_id : kNone;
}

Action ScriptedPolicy::act(const Observation& obs) {
  if (!program_ || obs.task_prompt() != prompt_) {
    SubTask task;
    try {
      task = parse_subtask(obs.task_prompt());
    } catch (const ParseError& e) {
      throw Error(ErrorCode::kPolicy, std::string("cannot follow prompt: ") + e.message());
    }
    auto program = std::make_unique<Program>();
    ProgramBuilder builder(obs.scene(), obs.thermal_visible(), rng_, true);
    program->object_id = builder.append(program->runner.steps, task, 0);
    program_ = std::move(program);
    prompt_ = obs.task_prompt();
  }
  return program_->runner.tick(obs, {});
}

// ---------------------------------------------------------------------------
// FlatPolicy

struct FlatPolicy::Program {
  WaypointRunner runner;
};

FlatPolicy::FlatPolicy(std::vector<SubTask> subtasks, double drift_sigma, std::uint64_t seed)
    : subtasks_(std::move(subtasks)), drift_sigma_(drift_sigma), rng_(policy_seed(seed)) {
  if (subtasks_.empty()) throw Error(ErrorCode::kInvalidInput, "flat policy needs a task");
  if (!(drift_sigma_ >= 0.0)) throw Error(ErrorCode::kInvalidInput, "drift sigma must be >= 0");
}
FlatPolicy::~FlatPolicy() = default;

std::size_t FlatPolicy::current_subtask() const noexcept {
  return program_ ? program_->runner.current_subtask() : 0;
}

Action FlatPolicy::act(const Observation& obs) {
  if (!program_) {
    auto program = std::make_unique<Program>();
    ProgramBuilder builder(obs.scene(), obs.thermal_visible(), rng_, false);
    for (std::size_t i = 0; i < subtasks_.size(); ++i) {
      builder.append(program->runner.steps, subtasks_[i], i);
    }
    program_ = std::move(program);
  }
  if (drift_sigma_ > 0.0) {
    std::normal_distribution<double> step(0.0, drift_sigma_);
    for (double& d : drift_) d += step(rng_);
  }
  return program_->runner.tick(obs, drift_);
}

// ---------------------------------------------------------------------------
// Queue

const SubTask& SubTaskQueue::current() const {
  if (subtasks.empty()) throw Error(ErrorCode::kState, "empty sub-task queue");
  return subtasks[std::min(position, subtasks.size() - 1)];
}

void advance_if_done(SubTaskQueue& queue, const Action& action) {
  if (queue.subtasks.empty()) throw Error(ErrorCode::kState, "empty sub-task queue");
  if (queue.terminated || action.done < kDoneThreshold) return;
  if (queue.position + 1 >= queue.subtasks.size()) {
    queue.terminated = true;
    return;
  }
  ++queue.position;
}

}  // namespace thermoact
