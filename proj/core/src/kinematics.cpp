#include "thermoact/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "thermoact/error.hpp"

namespace thermoact {
namespace {

Eigen::Vector3d unit_axis(JointAxis axis) {
  switch (axis) {
    case JointAxis::kX: return Eigen::Vector3d::UnitX();
    case JointAxis::kY: return Eigen::Vector3d::UnitY();
    case JointAxis::kZ: return Eigen::Vector3d::UnitZ();
  }
  return Eigen::Vector3d::UnitZ();
}

struct ChainFrames {
  std::array<Eigen::Vector3d, kNumJoints> origins;
  std::array<Eigen::Vector3d, kNumJoints> axes;
  Eigen::Isometry3d tool = Eigen::Isometry3d::Identity();
};

// Translation along local z that follows each joint; joints 4..6 share the
// wrist center, so only joint 1, 2, 3 and 6 carry a link.
std::array<double, kNumJoints> link_after_joint(const ArmModel& model) {
  const auto& l = model.link_lengths();
  return {l[0], l[1], l[2], 0.0, 0.0, l[3]};
}

ChainFrames chain(const ArmModel& model, const JointVector& q) {
  ChainFrames frames;
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  const auto links = link_after_joint(model);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const Eigen::Vector3d local_axis = unit_axis(model.axes()[i]);
    frames.origins[i] = t.translation();
    frames.axes[i] = t.linear() * local_axis;
    t.rotate(Eigen::AngleAxisd(q[i], local_axis));
    t.translate(Eigen::Vector3d(0.0, 0.0, links[i]));
  }
  frames.tool = t;
  return frames;
}

void require_limits(const ArmModel& model, const JointVector& q) {
  if (!model.within_limits(q)) {
    throw Error(ErrorCode::kDomain, "joint vector outside joint limits");
  }
}

}  // namespace

JointVector JointVector::from_eigen(const Eigen::Matrix<double, 6, 1>& v) {
  JointVector out;
  for (std::size_t i = 0; i < kNumJoints; ++i) out.q[i] = v(static_cast<Eigen::Index>(i));
  return out;
}

Eigen::Matrix<double, 6, 1> JointVector::to_eigen() const {
  Eigen::Matrix<double, 6, 1> v;
  for (std::size_t i = 0; i < kNumJoints; ++i) v(static_cast<Eigen::Index>(i)) = q[i];
  return v;
}

ArmModel::ArmModel()
    : links_{0.13, 0.28, 0.28, 0.13},
      axes_{JointAxis::kZ, JointAxis::kY, JointAxis::kY, JointAxis::kY, JointAxis::kX,
            JointAxis::kY},
      max_speed_(1.5) {
  lower_.fill(-2.6);
  upper_.fill(2.6);
}

const ArmModel& ArmModel::standard() {
  static const ArmModel model;
  return model;
}

bool ArmModel::within_limits(const JointVector& q) const noexcept {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (!std::isfinite(q[i]) || q[i] < lower_[i] || q[i] > upper_[i]) return false;
  }
  return true;
}

JointVector ArmModel::clamp(const JointVector& q) const noexcept {
  JointVector out = q;
  for (std::size_t i = 0; i < kNumJoints; ++i) out[i] = std::clamp(q[i], lower_[i], upper_[i]);
  return out;
}

Eigen::Isometry3d forward_pose(const ArmModel& model, const JointVector& q) {
  require_limits(model, q);
  return chain(model, q).tool;
}

Eigen::Vector3d forward_kinematics(const ArmModel& model, const JointVector& q) {
  return forward_pose(model, q).translation();
}

Jacobian jacobian(const ArmModel& model, const JointVector& q) {
  require_limits(model, q);
  const ChainFrames f = chain(model, q);
  const Eigen::Vector3d tip = f.tool.translation();
  Jacobian j;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    j.col(static_cast<Eigen::Index>(i)) = f.axes[i].cross(tip - f.origins[i]);
  }
  return j;
}

IkSolution solve_ik_detailed(const ArmModel& model, const Eigen::Vector3d& target,
                             const JointVector& seed, const IkOptions& options) {
  require_limits(model, seed);
  if (!target.allFinite()) {
    throw Error(ErrorCode::kDomain, "non-finite IK target");
  }
  if ((target - model.shoulder()).norm() > model.reach()) {
    throw Error(ErrorCode::kDomain, "IK target beyond reach");
  }

  const double lambda2 = options.damping * options.damping;
  JointVector q = seed;
  Eigen::Vector3d error = target - chain(model, q).tool.translation();
  int iter = 0;
  for (; iter < options.max_iterations && error.norm() >= options.tolerance; ++iter) {
    const Jacobian j = jacobian(model, q);
    const Eigen::Matrix3d jjt = j * j.transpose() + lambda2 * Eigen::Matrix3d::Identity();
    Eigen::Matrix<double, 6, 1> dq = j.transpose() * jjt.ldlt().solve(error);
    const double largest = dq.cwiseAbs().maxCoeff();
    if (largest > options.max_step) dq *= options.max_step / largest;
    q = model.clamp(JointVector::from_eigen(q.to_eigen() + dq));
    error = target - chain(model, q).tool.translation();
  }

  const double residual = error.norm();
  if (residual >= options.tolerance && residual >= options.accept_residual) {
    throw Error(ErrorCode::kUnreachable, "IK did not converge in " +
                                             std::to_string(options.max_iterations) +
                                             " iterations (residual " + std::to_string(residual) +
                                             " m)");
  }
  return {q, iter, residual};
}

JointVector solve_ik(const ArmModel& model, const Eigen::Vector3d& target, const JointVector& seed,
                     const IkOptions& options) {
  return solve_ik_detailed(model, target, seed, options).q;
}

}  // namespace thermoact
