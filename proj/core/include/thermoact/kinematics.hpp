#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace thermoact {

inline constexpr std::size_t kNumJoints = 6;

/// Six joint angles in radians.
struct JointVector {
  std::array<double, kNumJoints> q{};

  static JointVector zeros() { return {}; }
  static JointVector from_eigen(const Eigen::Matrix<double, 6, 1>& v);
  Eigen::Matrix<double, 6, 1> to_eigen() const;

  double& operator[](std::size_t i) { return q[i]; }
  double operator[](std::size_t i) const { return q[i]; }

  friend bool operator==(const JointVector&, const JointVector&) = default;
};

enum class JointAxis { kX, kY, kZ };

/// Fixed 6-joint serial chain: base yaw, three pitch joints, wrist roll and a
/// final pitch, with the tool point at the end of the last link.
class ArmModel {
 public:
  ArmModel();

  static const ArmModel& standard();

  /// Base-to-shoulder, upper arm, forearm, wrist-to-tool, in meters.
  const std::array<double, 4>& link_lengths() const noexcept { return links_; }
  const std::array<JointAxis, kNumJoints>& axes() const noexcept { return axes_; }
  double lower_limit(std::size_t joint) const noexcept { return lower_[joint]; }
  double upper_limit(std::size_t joint) const noexcept { return upper_[joint]; }
  double max_joint_speed() const noexcept { return max_speed_; }

  /// Distance the tool point can reach from the shoulder joint.
  double reach() const noexcept { return links_[1] + links_[2] + links_[3]; }
  Eigen::Vector3d shoulder() const noexcept { return {0.0, 0.0, links_[0]}; }

  bool within_limits(const JointVector& q) const noexcept;
  JointVector clamp(const JointVector& q) const noexcept;

 private:
  std::array<double, 4> links_;
  std::array<JointAxis, kNumJoints> axes_;
  std::array<double, kNumJoints> lower_;
  std::array<double, kNumJoints> upper_;
  double max_speed_;
};

/// Full tool frame; the tool's local +z is the approach direction of the last link.
Eigen::Isometry3d forward_pose(const ArmModel& model, const JointVector& q);

/// Tool point position. Throws kDomain when q violates joint limits.
Eigen::Vector3d forward_kinematics(const ArmModel& model, const JointVector& q);

using Jacobian = Eigen::Matrix<double, 3, 6>;

/// Analytic positional Jacobian (m/rad).
Jacobian jacobian(const ArmModel& model, const JointVector& q);

struct IkOptions {
  double damping = 0.05;
  double max_step = 0.2;
  double tolerance = 1e-4;
  double accept_residual = 1e-3;
  int max_iterations = 200;
};

struct IkSolution {
  JointVector q;
  int iterations = 0;
  double residual = 0.0;
};

/// Damped least squares, position only. Throws kDomain for targets beyond
/// reach or an out-of-limit seed, kUnreachable when it does not converge.
IkSolution solve_ik_detailed(const ArmModel& model, const Eigen::Vector3d& target,
                             const JointVector& seed, const IkOptions& options = {});

JointVector solve_ik(const ArmModel& model, const Eigen::Vector3d& target, const JointVector& seed,
                     const IkOptions& options = {});

}  // namespace thermoact
