#include "thermoact/control.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "thermoact/error.hpp"

namespace thermoact {

std::array<double, Action::kSize> Action::flatten() const {
  std::array<double, kSize> out{};
  std::copy(joint_targets.q.begin(), joint_targets.q.end(), out.begin());
  out[6] = gripper;
  out[7] = done;
  return out;
}

Action Action::from_values(std::span<const double> values) {
  if (values.size() != kSize) {
    throw Error(ErrorCode::kDimension,
                "action vector must have 8 values, got " + std::to_string(values.size()));
  }
  Action a;
  std::copy(values.begin(), values.begin() + 6, a.joint_targets.q.begin());
  a.gripper = values[6];
  a.done = values[7];
  return a;
}

void Action::validate(const ArmModel& model) const {
  if (!model.within_limits(joint_targets)) {
    throw Error(ErrorCode::kInvalidInput, "joint targets outside limits");
  }
  if (!(gripper >= 0.0 && gripper <= 1.0) || !(done >= 0.0 && done <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "gripper and done must lie in [0, 1]");
  }
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kRgbt: return "rgbt";
    case Condition::kRgbRgb: return "rgb-rgb";
    case Condition::kFlat: return "flat";
  }
  return "rgbt";
}

std::optional<Condition> parse_condition(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return ch == '_' ? '-' : std::tolower(ch); });
  if (s == "rgbt" || s == "rgb-t") return Condition::kRgbt;
  if (s == "rgb-rgb") return Condition::kRgbRgb;
  if (s == "flat") return Condition::kFlat;
  return std::nullopt;
}

}  // namespace thermoact
