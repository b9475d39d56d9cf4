#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace skillref {

using JointVector = Eigen::VectorXd;
using Vector3d = Eigen::Vector3d;
using Quaterniond = Eigen::Quaterniond;

/// Rigid transform as translation + unit quaternion (scalar-first convention
/// (w, x, y, z) everywhere, Hamilton product, rotation acts as q v q^-1).
struct RigidTransform {
  Vector3d translation{Vector3d::Zero()};
  Quaterniond rotation{Quaterniond::Identity()};

  RigidTransform operator*(const RigidTransform& other) const {
    return {translation + rotation._transformVector(other.translation),
            rotation * other.rotation};
  }

  Vector3d apply(const Vector3d& point) const {
    return translation + rotation._transformVector(point);
  }
};

/// End-effector pose: position in meters, orientation as unit quaternion.
/// A pose and its orientation-negated twin denote the same rotation.
struct Pose {
  Vector3d position{Vector3d::Zero()};
  Quaterniond orientation{Quaterniond::Identity()};
};

inline void validate_pose(const Pose& p, const char* what = "pose") {
  if (!p.position.allFinite() || !p.orientation.coeffs().allFinite())
    throw std::invalid_argument(std::string(what) + ": non-finite values");
  if (std::abs(p.orientation.squaredNorm() - 1.0) > 2e-6)
    throw std::invalid_argument(std::string(what) + ": orientation not unit");
}

/// One revolute joint: fixed transform from the parent frame to the joint
/// frame, rotation axis in the joint frame, and angle limits in radians.
struct JointDescriptor {
  RigidTransform origin;
  Vector3d axis{Vector3d::UnitZ()};
  double lower{-M_PI};
  double upper{M_PI};
};

/// Ordered revolute chain plus a fixed end-effector transform. Immutable
/// after construction; all member functions are const and thread-safe.
class KinematicChain {
 public:
  KinematicChain(std::vector<JointDescriptor> joints, RigidTransform ee)
      : joints_(std::move(joints)), ee_(std::move(ee)) {
    if (joints_.empty())
      throw std::invalid_argument("KinematicChain: needs at least one joint");
    for (std::size_t i = 0; i < joints_.size(); ++i) {
      const JointDescriptor& j = joints_[i];
      if (!(j.lower < j.upper))
        throw std::invalid_argument("KinematicChain: joint " +
                                    std::to_string(i) + ": lower >= upper");
      if (std::abs(j.axis.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("KinematicChain: joint " +
                                    std::to_string(i) + ": axis not unit");
      if (!j.origin.translation.allFinite() ||
          !j.origin.rotation.coeffs().allFinite())
        throw std::invalid_argument("KinematicChain: joint " +
                                    std::to_string(i) +
                                    ": non-finite transform");
    }
  }

  std::size_t size() const { return joints_.size(); }
  const std::vector<JointDescriptor>& joints() const { return joints_; }
  const RigidTransform& end_effector() const { return ee_; }

  JointVector lower_limits() const {
    JointVector lo(joints_.size());
    for (std::size_t i = 0; i < joints_.size(); ++i) lo[i] = joints_[i].lower;
    return lo;
  }

  JointVector upper_limits() const {
    JointVector hi(joints_.size());
    for (std::size_t i = 0; i < joints_.size(); ++i) hi[i] = joints_[i].upper;
    return hi;
  }

  bool within_limits(const JointVector& q) const {
    if (q.size() != static_cast<Eigen::Index>(joints_.size())) return false;
    for (std::size_t i = 0; i < joints_.size(); ++i)
      if (q[i] < joints_[i].lower || q[i] > joints_[i].upper) return false;
    return true;
  }

  JointVector clamp_to_limits(JointVector q) const {
    check_dimension(q);
    for (std::size_t i = 0; i < joints_.size(); ++i)
      q[i] = std::clamp(q[i], joints_[i].lower, joints_[i].upper);
    return q;
  }

  void check_dimension(const JointVector& q) const {
    if (q.size() != static_cast<Eigen::Index>(joints_.size()))
      throw std::invalid_argument(
          "joint vector has " + std::to_string(q.size()) + " entries, chain has " +
          std::to_string(joints_.size()) + " joints");
  }

 private:
  std::vector<JointDescriptor> joints_;
  RigidTransform ee_;
};

/// End-effector pose for joint angles q. Joint limits are not enforced here.
inline Pose forward_kinematics(const KinematicChain& chain,
                               const JointVector& q) {
  chain.check_dimension(q);
  RigidTransform t;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const JointDescriptor& j = chain.joints()[i];
    t = t * j.origin;
    t.rotation = t.rotation * Quaterniond(Eigen::AngleAxisd(q[i], j.axis));
  }
  t = t * chain.end_effector();
  t.rotation.normalize();
  return {t.translation, t.rotation};
}

/// Geometric Jacobian in the base frame: rows 0-2 linear, rows 3-5 angular
/// velocity per unit joint rate. Column i is (z_i x (p_ee - p_i); z_i).
inline Eigen::Matrix<double, 6, Eigen::Dynamic> geometric_jacobian(
    const KinematicChain& chain, const JointVector& q) {
  chain.check_dimension(q);
  const std::size_t n = chain.size();
  Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, n);
  std::vector<Vector3d> origins(n), axes(n);
  RigidTransform t;
  for (std::size_t i = 0; i < n; ++i) {
    const JointDescriptor& j = chain.joints()[i];
    t = t * j.origin;
    origins[i] = t.translation;
    axes[i] = t.rotation._transformVector(j.axis);
    t.rotation = t.rotation * Quaterniond(Eigen::AngleAxisd(q[i], j.axis));
  }
  t = t * chain.end_effector();
  for (std::size_t i = 0; i < n; ++i) {
    jac.col(i).head<3>() = axes[i].cross(t.translation - origins[i]);
    jac.col(i).tail<3>() = axes[i];
  }
  return jac;
}

/// Pose and Jacobian in one pass (shared by the IK solvers).
inline void fk_with_jacobian(const KinematicChain& chain, const JointVector& q,
                             Pose& pose,
                             Eigen::Matrix<double, 6, Eigen::Dynamic>& jac) {
  chain.check_dimension(q);
  const std::size_t n = chain.size();
  jac.resize(6, n);
  std::vector<Vector3d> origins(n), axes(n);
  RigidTransform t;
  for (std::size_t i = 0; i < n; ++i) {
    const JointDescriptor& j = chain.joints()[i];
    t = t * j.origin;
    origins[i] = t.translation;
    axes[i] = t.rotation._transformVector(j.axis);
    t.rotation = t.rotation * Quaterniond(Eigen::AngleAxisd(q[i], j.axis));
  }
  t = t * chain.end_effector();
  t.rotation.normalize();
  for (std::size_t i = 0; i < n; ++i) {
    jac.col(i).head<3>() = axes[i].cross(t.translation - origins[i]);
    jac.col(i).tail<3>() = axes[i];
  }
  pose = {t.translation, t.rotation};
}

/// Quaternion logarithm, principal branch. For q = (cos(h), u sin(h)) with
/// half angle h = theta/2 in [0, pi], returns u * h. No sign canonicalization:
/// log(-q) != log(q); the double cover is resolved by the metric, not here.
/// Uses a series expansion below sin-half-angle 1e-8; the antipodal identity
/// (-1, 0, 0, 0) has no distinguished axis and maps to (pi, 0, 0).
inline Vector3d quaternion_log(const Quaterniond& q) {
  if (std::abs(q.squaredNorm() - 1.0) > 2e-6)
    throw std::invalid_argument("quaternion_log: input not unit norm");
  const Vector3d v = q.vec();
  const double s = v.norm();  // sin of half angle, >= 0
  const double c = q.w();     // cos of half angle
  if (s < 1e-8) {
    if (c < 0.0) return Vector3d(M_PI, 0.0, 0.0);
    // atan2(s, c)/s = 1/c - s^2/(3 c^3) + O(s^4)
    return v * (1.0 / c - s * s / (3.0 * c * c * c));
  }
  return v * (std::atan2(s, c) / s);
}

/// Inverse of quaternion_log on vectors of norm < pi.
inline Quaterniond quaternion_exp(const Vector3d& v) {
  const double h = v.norm();
  Quaterniond q;
  if (h < 1e-8) {
    // sin(h)/h = 1 - h^2/6 + O(h^4)
    const double scale = 1.0 - h * h / 6.0;
    q = Quaterniond(std::cos(h), scale * v.x(), scale * v.y(), scale * v.z());
  } else {
    const double scale = std::sin(h) / h;
    q = Quaterniond(std::cos(h), scale * v.x(), scale * v.y(), scale * v.z());
  }
  return q;
}

/// Nonnegative weights of the pose metric, in 1/m^2 and 1/rad^2.
struct MetricWeights {
  double position{1.0};
  double rotation{1.0};

  void validate() const {
    if (!(position >= 0.0) || !(rotation >= 0.0) ||
        !(position + rotation > 0.0))
      throw std::invalid_argument(
          "MetricWeights: weights must be nonnegative with positive sum");
  }
};

/// Geodesic half-angle between two orientations, in [0, pi/2]. The relative
/// quaternion is canonicalized to w >= 0 so both quaternion signs of either
/// argument give the same value (double cover).
inline double rotation_log_distance(const Quaterniond& q1,
                                    const Quaterniond& q2) {
  Quaterniond rel = q1 * q2.conjugate();
  if (rel.w() < 0.0) rel.coeffs() = -rel.coeffs();
  const double angle = quaternion_log(rel).norm();
  return std::min(angle, 2.0 * M_PI - angle);
}

/// Weighted squared pose distance:
///   w_pos * ||pos1 - pos2||^2 + w_rot * min(l, 2 pi - l)^2
/// with l the norm of the relative quaternion log. Symmetric, zero iff the
/// poses coincide up to quaternion sign.
inline double pose_distance(const Pose& p1, const Pose& p2,
                            const MetricWeights& w) {
  validate_pose(p1, "pose_distance: p1");
  validate_pose(p2, "pose_distance: p2");
  const double dpos = (p1.position - p2.position).squaredNorm();
  const double drot = rotation_log_distance(p1.orientation, p2.orientation);
  return w.position * dpos + w.rotation * drot * drot;
}

}  // namespace skillref
