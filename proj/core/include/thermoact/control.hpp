#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "thermoact/kinematics.hpp"

namespace thermoact {

/// Executor output per control cycle: six absolute joint targets, gripper
/// aperture target and the sub-task done flag.
struct Action {
  JointVector joint_targets;
  double gripper = 1.0;
  double done = 0.0;

  static constexpr std::size_t kSize = 8;

  std::array<double, kSize> flatten() const;
  /// Throws kDimension unless exactly 8 values.
  static Action from_values(std::span<const double> values);

  /// Throws kInvalidInput on out-of-range components.
  void validate(const ArmModel& model = ArmModel::standard()) const;

  friend bool operator==(const Action&, const Action&) = default;
};

/// Input-modality configuration under test.
enum class Condition {
  kRgbt,    // external camera = pseudocolored thermal
  kRgbRgb,  // external camera = RGB
  kFlat,    // thermal images, no sub-task decomposition
};

std::string_view to_string(Condition c);
/// Accepts "rgbt", "rgb-rgb", "rgb_rgb", "flat" (case-insensitive).
std::optional<Condition> parse_condition(std::string_view text);

}  // namespace thermoact
