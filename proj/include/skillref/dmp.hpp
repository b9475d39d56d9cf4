#pragma once

#include "ik.hpp"
#include "kinematics.hpp"

#include <optional>

namespace skillref::dmp {

/// Phase variable x(t) = exp(-alpha_x t / tau), sampled at `steps` points
/// over [0, tau]. With the default alpha_x = ln(100), x decays to exactly
/// 0.01 at the final sample.
struct CanonicalSystem {
  double alpha_x{std::log(100.0)};
  double execution_time{1.0};
  int steps{101};

  double dt() const { return execution_time / (steps - 1); }

  double phase(int step) const {
    return std::exp(-alpha_x * static_cast<double>(step) / (steps - 1));
  }

  void validate() const {
    if (steps < 2 || !(execution_time > 0.0) || !(alpha_x > 0.0))
      throw std::invalid_argument("CanonicalSystem: invalid parameters");
    if (phase(steps - 1) > 0.01 * (1.0 + 1e-12))
      throw std::invalid_argument(
          "CanonicalSystem: phase must decay to <= 0.01");
  }
};

/// Goal-attractor gains; beta_y = alpha_y / 4 is critical damping.
struct Gains {
  double alpha_y{25.0};
  double beta_y{6.25};

  void validate() const {
    if (!(alpha_y > 0.0) || std::abs(beta_y - alpha_y / 4.0) > 1e-12)
      throw std::invalid_argument("Gains: beta_y must equal alpha_y / 4");
  }
};

/// Gaussian basis in phase space. Centers sit at equal time spacing mapped
/// through the canonical system; widths make adjacent kernels intersect at
/// about half activation. Activations at or below 1e-10 are truncated to
/// zero so a weight has strictly local influence in time.
class BasisSet {
 public:
  static constexpr double kActivationCutoff = 1e-10;

  BasisSet(const CanonicalSystem& canonical, int count) {
    if (count < 2) throw std::invalid_argument("BasisSet: count must be >= 2");
    centers_.resize(count);
    inv_widths_.resize(count);
    for (int i = 0; i < count; ++i)
      centers_[i] =
          std::exp(-canonical.alpha_x * static_cast<double>(i) / (count - 1));
    for (int i = 0; i + 1 < count; ++i) {
      const double gap = centers_[i] - centers_[i + 1];
      inv_widths_[i] = 4.0 * std::log(2.0) / (gap * gap);
    }
    inv_widths_[count - 1] = inv_widths_[count - 2];
  }

  int count() const { return static_cast<int>(centers_.size()); }
  const Eigen::VectorXd& centers() const { return centers_; }

  void activations(double x, Eigen::VectorXd& psi) const {
    psi.resize(count());
    for (int i = 0; i < count(); ++i) {
      const double d = x - centers_[i];
      const double value = std::exp(-inv_widths_[i] * d * d);
      psi[i] = value > kActivationCutoff ? value : 0.0;
    }
  }

  /// Forcing term x * sum_i(psi_i w_i) / sum_i(psi_i) for one dimension.
  double forcing(double x, const Eigen::VectorXd& psi,
                 const Eigen::Ref<const Eigen::RowVectorXd>& weights) const {
    const double den = psi.sum();
    if (den <= 0.0) return 0.0;
    return x * weights.dot(psi) / den;
  }

 private:
  Eigen::VectorXd centers_;
  Eigen::VectorXd inv_widths_;
};

enum class Space { joint, cartesian };

/// Joint trajectory with integrator (or finite-difference) velocity and
/// acceleration samples; rows are time steps.
struct JointTrajectory {
  Eigen::MatrixXd positions;
  Eigen::MatrixXd velocities;
  Eigen::MatrixXd accelerations;

  Eigen::Index steps() const { return positions.rows(); }
  Eigen::Index dims() const { return positions.cols(); }
  bool all_finite() const {
    return positions.allFinite() && velocities.allFinite() &&
           accelerations.allFinite();
  }
};

/// End-effector pose trajectory; the scalar blocks are the position DMP
/// states, the angular blocks the quaternion DMP states (base frame).
struct PoseTrajectory {
  std::vector<Pose> poses;
  Eigen::MatrixXd linear_velocities;
  Eigen::MatrixXd linear_accelerations;
  Eigen::MatrixXd angular_velocities;
  Eigen::MatrixXd angular_accelerations;

  bool all_finite() const {
    for (const Pose& p : poses)
      if (!p.position.allFinite() || !p.orientation.coeffs().allFinite())
        return false;
    return linear_velocities.allFinite() && linear_accelerations.allFinite() &&
           angular_velocities.allFinite() && angular_accelerations.allFinite();
  }
};

/// Movement primitive in joint space (n scalar dimensions) or Cartesian
/// space (3 position dimensions plus 3 orientation forcing dimensions).
/// The weight matrix rows follow that dimension order; the flat genome
/// layout is dimension-major.
struct DmpPolicy {
  Space space{Space::joint};
  CanonicalSystem canonical{};
  Gains gains{};
  int basis_count{50};
  Eigen::MatrixXd weights;  // dims x basis_count

  // joint-space endpoints
  JointVector start_joints;
  JointVector goal_joints;

  // cartesian endpoints; start_joints doubles as the IK warm start
  Pose start_pose;
  Pose goal_pose;

  static DmpPolicy joint_space(JointVector start, JointVector goal,
                               CanonicalSystem canonical = {},
                               int basis_count = 50, Gains gains = {}) {
    DmpPolicy p;
    p.space = Space::joint;
    p.canonical = canonical;
    p.gains = gains;
    p.basis_count = basis_count;
    p.start_joints = std::move(start);
    p.goal_joints = std::move(goal);
    p.weights = Eigen::MatrixXd::Zero(p.start_joints.size(), basis_count);
    p.validate();
    return p;
  }

  static DmpPolicy cartesian(Pose start, Pose goal, JointVector start_joints,
                             CanonicalSystem canonical = {},
                             int basis_count = 50, Gains gains = {}) {
    DmpPolicy p;
    p.space = Space::cartesian;
    p.canonical = canonical;
    p.gains = gains;
    p.basis_count = basis_count;
    p.start_pose = std::move(start);
    p.goal_pose = std::move(goal);
    p.start_joints = std::move(start_joints);
    p.weights = Eigen::MatrixXd::Zero(6, basis_count);
    p.validate();
    return p;
  }

  Eigen::Index dims() const {
    return space == Space::joint ? start_joints.size() : 6;
  }

  void validate() const {
    canonical.validate();
    gains.validate();
    if (weights.rows() != dims() || weights.cols() != basis_count)
      throw std::invalid_argument("DmpPolicy: weight matrix shape mismatch");
    if (space == Space::joint) {
      if (start_joints.size() == 0 ||
          start_joints.size() != goal_joints.size())
        throw std::invalid_argument("DmpPolicy: joint endpoint mismatch");
    } else {
      validate_pose(start_pose, "DmpPolicy: start pose");
      validate_pose(goal_pose, "DmpPolicy: goal pose");
    }
  }

  Eigen::Index genome_size() const { return dims() * basis_count; }

  /// Genome layout: all weights of dimension 0, then dimension 1, ...
  void set_weights_flat(const Eigen::Ref<const Eigen::VectorXd>& genome) {
    if (genome.size() != genome_size())
      throw std::invalid_argument("DmpPolicy: genome length mismatch");
    for (Eigen::Index d = 0; d < weights.rows(); ++d)
      weights.row(d) = genome.segment(d * basis_count, basis_count);
  }

  Eigen::VectorXd weights_flat() const {
    Eigen::VectorXd genome(genome_size());
    for (Eigen::Index d = 0; d < weights.rows(); ++d)
      genome.segment(d * basis_count, basis_count) = weights.row(d);
    return genome;
  }
};

namespace detail {

/// Explicit-Euler rollout of tau^2 ydd = alpha(beta(g - y) - tau yd) + f(x)
/// for a block of scalar dimensions, starting at rest.
inline void rollout_scalar_block(
    const Eigen::VectorXd& start, const Eigen::VectorXd& goal,
    const Eigen::Ref<const Eigen::MatrixXd>& weights, const BasisSet& basis,
    const CanonicalSystem& canonical, const Gains& gains,
    Eigen::MatrixXd& positions, Eigen::MatrixXd& velocities,
    Eigen::MatrixXd& accelerations) {
  const Eigen::Index dims = start.size();
  const int steps = canonical.steps;
  const double tau = canonical.execution_time;
  const double dt = canonical.dt();

  positions.resize(steps, dims);
  velocities.resize(steps, dims);
  accelerations.resize(steps, dims);

  Eigen::VectorXd y = start;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dims);
  Eigen::VectorXd psi;
  for (int t = 0; t < steps; ++t) {
    const double x = canonical.phase(t);
    basis.activations(x, psi);
    Eigen::VectorXd a(dims);
    for (Eigen::Index d = 0; d < dims; ++d) {
      const double f = basis.forcing(x, psi, weights.row(d));
      a[d] = (gains.alpha_y * (gains.beta_y * (goal[d] - y[d]) - tau * v[d]) +
              f) /
             (tau * tau);
    }
    positions.row(t) = y;
    velocities.row(t) = v;
    accelerations.row(t) = a;
    if (t + 1 < steps) {
      y += dt * v;
      v += dt * a;
    }
  }
}

inline Quaterniond aligned(const Quaterniond& q, const Quaterniond& reference) {
  return q.dot(reference) < 0.0 ? Quaterniond(-q.w(), -q.x(), -q.y(), -q.z())
                                : q;
}

}  // namespace detail

/// Rollout of the scalar dimensions: all joints for a joint-space policy,
/// the position block for a Cartesian one.
inline JointTrajectory rollout_scalar(const DmpPolicy& policy) {
  policy.validate();
  const BasisSet basis(policy.canonical, policy.basis_count);
  JointTrajectory traj;
  if (policy.space == Space::joint) {
    detail::rollout_scalar_block(policy.start_joints, policy.goal_joints,
                                 policy.weights, basis, policy.canonical,
                                 policy.gains, traj.positions, traj.velocities,
                                 traj.accelerations);
  } else {
    detail::rollout_scalar_block(
        policy.start_pose.position, policy.goal_pose.position,
        policy.weights.topRows<3>(), basis, policy.canonical, policy.gains,
        traj.positions, traj.velocities, traj.accelerations);
  }
  return traj;
}

/// Quaternion DMP rollout (orientation part of a Cartesian policy):
///   tau etad = alpha(beta 2 log(g * conj(q)) - eta) + f(x)
///   q <- exp(dt / (2 tau) eta) * q
/// The goal-attractor error always takes the shortest arc, and every
/// intermediate orientation is renormalized.
inline PoseTrajectory rollout_quaternion(const DmpPolicy& policy) {
  policy.validate();
  if (policy.space != Space::cartesian)
    throw std::invalid_argument("rollout_quaternion: needs a cartesian policy");

  const BasisSet basis(policy.canonical, policy.basis_count);
  const int steps = policy.canonical.steps;
  const double tau = policy.canonical.execution_time;
  const double dt = policy.canonical.dt();

  PoseTrajectory traj;
  traj.poses.resize(steps);
  traj.angular_velocities.resize(steps, 3);
  traj.angular_accelerations.resize(steps, 3);
  traj.linear_velocities.resize(steps, 3);
  traj.linear_accelerations.resize(steps, 3);
  traj.linear_velocities.setZero();
  traj.linear_accelerations.setZero();

  Quaterniond q = policy.start_pose.orientation.normalized();
  const Quaterniond goal = policy.goal_pose.orientation.normalized();
  Vector3d eta = Vector3d::Zero();
  Eigen::VectorXd psi;
  for (int t = 0; t < steps; ++t) {
    const double x = policy.canonical.phase(t);
    basis.activations(x, psi);

    Quaterniond rel = goal * q.conjugate();
    if (rel.w() < 0.0) rel.coeffs() = -rel.coeffs();
    const Vector3d error = 2.0 * quaternion_log(rel);

    Vector3d forcing;
    for (int d = 0; d < 3; ++d)
      forcing[d] = basis.forcing(x, psi, policy.weights.row(3 + d));

    const Vector3d eta_dot =
        (policy.gains.alpha_y * (policy.gains.beta_y * error - eta) +
         forcing) /
        tau;

    traj.poses[t].orientation = q;
    traj.angular_velocities.row(t) = (eta / tau).transpose();
    traj.angular_accelerations.row(t) = (eta_dot / tau).transpose();

    if (t + 1 < steps) {
      q = quaternion_exp((dt / (2.0 * tau)) * eta) * q;
      q.normalize();
      eta += dt * eta_dot;
    }
  }
  return traj;
}

/// Full Cartesian rollout: position block plus quaternion block.
inline PoseTrajectory rollout_pose(const DmpPolicy& policy) {
  if (policy.space != Space::cartesian)
    throw std::invalid_argument("rollout_pose: needs a cartesian policy");
  PoseTrajectory traj = rollout_quaternion(policy);
  const JointTrajectory pos = rollout_scalar(policy);
  for (int t = 0; t < policy.canonical.steps; ++t)
    traj.poses[t].position = pos.positions.row(t).transpose();
  traj.linear_velocities = pos.velocities;
  traj.linear_accelerations = pos.accelerations;
  return traj;
}

struct Metaparameters {
  CanonicalSystem canonical{};
  Gains gains{};
  int basis_count{50};
};

namespace detail {

/// Least-squares fit of the forcing weights for one block of scalar
/// dimensions given target forcing values per step.
inline Eigen::MatrixXd fit_forcing_weights(const Eigen::MatrixXd& targets,
                                           const BasisSet& basis,
                                           const CanonicalSystem& canonical) {
  const int steps = canonical.steps;
  Eigen::MatrixXd design(steps, basis.count());
  Eigen::VectorXd psi;
  for (int t = 0; t < steps; ++t) {
    const double x = canonical.phase(t);
    basis.activations(x, psi);
    const double den = psi.sum();
    if (den > 0.0)
      design.row(t) = (x / den) * psi.transpose();
    else
      design.row(t).setZero();
  }
  if (targets.cwiseAbs().maxCoeff() == 0.0)
    return Eigen::MatrixXd::Zero(targets.cols(), basis.count());
  const auto qr = design.colPivHouseholderQr();
  Eigen::MatrixXd weights(targets.cols(), basis.count());
  for (Eigen::Index d = 0; d < targets.cols(); ++d)
    weights.row(d) = qr.solve(targets.col(d)).transpose();
  return weights;
}

inline void finite_difference_rows(const Eigen::MatrixXd& positions, double dt,
                                   Eigen::MatrixXd& velocities,
                                   Eigen::MatrixXd& accelerations) {
  const Eigen::Index steps = positions.rows();
  velocities.resizeLike(positions);
  accelerations.resizeLike(positions);
  for (Eigen::Index t = 0; t < steps; ++t) {
    if (t == 0)
      velocities.row(t) = (positions.row(1) - positions.row(0)) / dt;
    else if (t + 1 == steps)
      velocities.row(t) = (positions.row(t) - positions.row(t - 1)) / dt;
    else
      velocities.row(t) = (positions.row(t + 1) - positions.row(t - 1)) /
                          (2.0 * dt);
  }
  for (Eigen::Index t = 0; t < steps; ++t) {
    if (t == 0)
      accelerations.row(t).setZero();
    else if (t + 1 == steps)
      accelerations.row(t) = (velocities.row(t) - velocities.row(t - 1)) / dt;
    else
      accelerations.row(t) = (positions.row(t + 1) - 2.0 * positions.row(t) +
                              positions.row(t - 1)) /
                             (dt * dt);
  }
}

}  // namespace detail

/// Fit a joint-space policy reproducing a demonstration. If the demo carries
/// velocity/acceleration samples they are used directly (a rollout is then a
/// fixed point of imitation); otherwise finite differences fill them in.
inline DmpPolicy imitate(const JointTrajectory& demo,
                         const Metaparameters& meta) {
  if (demo.steps() < 3)
    throw std::invalid_argument("imitate: demo needs at least 3 samples");
  CanonicalSystem canonical = meta.canonical;
  canonical.steps = static_cast<int>(demo.steps());
  canonical.validate();
  meta.gains.validate();

  Eigen::MatrixXd velocities = demo.velocities;
  Eigen::MatrixXd accelerations = demo.accelerations;
  if (velocities.rows() != demo.steps() ||
      accelerations.rows() != demo.steps())
    detail::finite_difference_rows(demo.positions, canonical.dt(), velocities,
                                   accelerations);

  const double tau = canonical.execution_time;
  const Eigen::RowVectorXd goal = demo.positions.row(demo.steps() - 1);
  Eigen::MatrixXd targets(demo.steps(), demo.dims());
  for (Eigen::Index t = 0; t < demo.steps(); ++t)
    targets.row(t) =
        tau * tau * accelerations.row(t) -
        meta.gains.alpha_y * (meta.gains.beta_y *
                                  (goal - demo.positions.row(t)) -
                              tau * velocities.row(t));

  const BasisSet basis(canonical, meta.basis_count);
  DmpPolicy policy = DmpPolicy::joint_space(
      demo.positions.row(0).transpose(),
      demo.positions.row(demo.steps() - 1).transpose(), canonical,
      meta.basis_count, meta.gains);
  policy.weights = detail::fit_forcing_weights(targets, basis, canonical);
  return policy;
}

/// Fit a Cartesian policy from a pose demonstration. Quaternions are
/// sign-aligned for shortest-arc continuity before the log map is applied.
inline DmpPolicy imitate_pose(const PoseTrajectory& demo,
                              const JointVector& start_joints,
                              const Metaparameters& meta) {
  const Eigen::Index steps = static_cast<Eigen::Index>(demo.poses.size());
  if (steps < 3)
    throw std::invalid_argument("imitate_pose: demo needs at least 3 samples");
  CanonicalSystem canonical = meta.canonical;
  canonical.steps = static_cast<int>(steps);
  canonical.validate();

  std::vector<Quaterniond> qs(steps);
  qs[0] = demo.poses[0].orientation.normalized();
  for (Eigen::Index t = 1; t < steps; ++t)
    qs[t] = detail::aligned(demo.poses[t].orientation.normalized(), qs[t - 1]);

  const double tau = canonical.execution_time;
  const double dt = canonical.dt();

  // position block: reuse the scalar fit
  JointTrajectory pos_demo;
  pos_demo.positions.resize(steps, 3);
  for (Eigen::Index t = 0; t < steps; ++t)
    pos_demo.positions.row(t) = demo.poses[t].position.transpose();
  if (demo.linear_velocities.rows() == steps &&
      demo.linear_accelerations.rows() == steps) {
    pos_demo.velocities = demo.linear_velocities;
    pos_demo.accelerations = demo.linear_accelerations;
  }
  const DmpPolicy pos_policy = imitate(pos_demo, meta);

  // orientation block: scaled angular velocity eta = tau * omega
  Eigen::MatrixXd omega(steps, 3), omega_dot(steps, 3);
  if (demo.angular_velocities.rows() == steps &&
      demo.angular_accelerations.rows() == steps) {
    omega = demo.angular_velocities;
    omega_dot = demo.angular_accelerations;
  } else {
    for (Eigen::Index t = 0; t + 1 < steps; ++t) {
      Quaterniond rel = qs[t + 1] * qs[t].conjugate();
      if (rel.w() < 0.0) rel.coeffs() = -rel.coeffs();
      omega.row(t) = (2.0 * quaternion_log(rel) / dt).transpose();
    }
    omega.row(steps - 1).setZero();
    Eigen::MatrixXd second_derivative(steps, 3);
    detail::finite_difference_rows(omega, dt, omega_dot, second_derivative);
  }

  const Quaterniond goal = qs[steps - 1];
  Eigen::MatrixXd targets(steps, 3);
  for (Eigen::Index t = 0; t < steps; ++t) {
    Quaterniond rel = goal * qs[t].conjugate();
    if (rel.w() < 0.0) rel.coeffs() = -rel.coeffs();
    const Vector3d error = 2.0 * quaternion_log(rel);
    const Vector3d eta = tau * omega.row(t).transpose();
    const Vector3d eta_dot = tau * omega_dot.row(t).transpose();
    targets.row(t) =
        (tau * eta_dot -
         meta.gains.alpha_y * (meta.gains.beta_y * error - eta))
            .transpose();
  }
  const BasisSet basis(canonical, meta.basis_count);
  const Eigen::MatrixXd rot_weights =
      detail::fit_forcing_weights(targets, basis, canonical);

  Pose start = demo.poses[0];
  start.orientation = qs[0];
  Pose goal_pose = demo.poses[steps - 1];
  goal_pose.orientation = goal;
  DmpPolicy policy = DmpPolicy::cartesian(start, goal_pose, start_joints,
                                          canonical, meta.basis_count,
                                          meta.gains);
  policy.weights.topRows<3>() = pos_policy.weights;
  policy.weights.bottomRows<3>() = rot_weights;
  return policy;
}

/// Execute a policy on a chain. Joint policies roll out directly with the
/// positions clamped to the joint limits; Cartesian policies roll out a pose
/// trajectory and track it with the chosen IK solver (velocities and
/// accelerations of the executed joints then come from backward
/// differences). A non-finite rollout yields a NaN-filled trajectory that
/// callers can detect with all_finite().
inline JointTrajectory execute_policy(const DmpPolicy& policy,
                                      const KinematicChain& chain,
                                      const ik::IkSettings& settings,
                                      ik::Solver solver) {
  policy.validate();
  const int steps = policy.canonical.steps;
  const Eigen::Index n = static_cast<Eigen::Index>(chain.size());

  if (policy.space == Space::joint) {
    if (policy.start_joints.size() != n)
      throw std::invalid_argument("execute_policy: policy dims != chain dofs");
    JointTrajectory traj = rollout_scalar(policy);
    for (Eigen::Index t = 0; t < traj.steps(); ++t)
      for (Eigen::Index j = 0; j < n; ++j)
        traj.positions(t, j) = std::clamp(traj.positions(t, j),
                                          chain.joints()[j].lower,
                                          chain.joints()[j].upper);
    return traj;
  }

  if (policy.start_joints.size() != n)
    throw std::invalid_argument(
        "execute_policy: cartesian policy needs a start joint vector "
        "matching the chain");

  JointTrajectory traj;
  traj.positions = Eigen::MatrixXd::Constant(
      steps, n, std::numeric_limits<double>::quiet_NaN());
  traj.velocities = Eigen::MatrixXd::Zero(steps, n);
  traj.accelerations = Eigen::MatrixXd::Zero(steps, n);

  const PoseTrajectory pose_traj = rollout_pose(policy);
  if (!pose_traj.all_finite()) return traj;

  const std::vector<JointVector> qs = ik::solve_trajectory(
      chain, pose_traj.poses, policy.start_joints, settings, solver);
  for (int t = 0; t < steps; ++t) traj.positions.row(t) = qs[t].transpose();

  const double dt = policy.canonical.dt();
  for (int t = 1; t < steps; ++t)
    traj.velocities.row(t) =
        (traj.positions.row(t) - traj.positions.row(t - 1)) / dt;
  for (int t = 1; t < steps; ++t)
    traj.accelerations.row(t) =
        (traj.velocities.row(t) - traj.velocities.row(t - 1)) / dt;
  return traj;
}

}  // namespace skillref::dmp
