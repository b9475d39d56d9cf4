#pragma once

#include "kinematics.hpp"

#include <atomic>
#include <cstdint>
#include <random>
#include <vector>

namespace skillref::ik {

struct IkSettings {
  MetricWeights metric{};
  int max_iterations{100};         // approx solver outer iterations
  int exact_max_iterations{200};   // pseudoinverse iterations
  double position_tolerance{1e-4}; // m, convergence on position residual
  double rotation_tolerance{1e-3}; // rad, convergence on rotation residual
  double gradient_tolerance{1e-8}; // approx solver, projected-gradient inf norm
  double step_tolerance{1e-12};    // approx solver, step inf norm
  double damping{1e-2};            // exact solver lambda
  double smoothness{0.0};          // weight pulling toward the warm start
  int restarts{0};                 // extra random starts for standalone queries
  unsigned restart_seed{0};

  void validate() const {
    metric.validate();
    if (max_iterations < 1 || exact_max_iterations < 1)
      throw std::invalid_argument("IkSettings: iteration counts must be >= 1");
    if (!(position_tolerance > 0.0) || !(rotation_tolerance > 0.0) ||
        !(gradient_tolerance > 0.0) || !(step_tolerance > 0.0))
      throw std::invalid_argument("IkSettings: tolerances must be > 0");
    if (!(damping >= 0.0) || !(smoothness >= 0.0) || restarts < 0)
      throw std::invalid_argument("IkSettings: damping/smoothness/restarts < 0");
  }
};

struct IkResult {
  JointVector q;
  Pose achieved;
  double residual{0.0};  // pose_distance(achieved, target, settings.metric)
  bool converged{false};
  int iterations{0};
};

enum class Solver { exact, approx };

/// Per-process solver invocation counters (test instrumentation).
struct CallCounters {
  std::atomic<std::uint64_t> exact_solves{0};
  std::atomic<std::uint64_t> approx_solves{0};
};

inline CallCounters& counters() {
  static CallCounters c;
  return c;
}

inline void reset_counters() {
  counters().exact_solves = 0;
  counters().approx_solves = 0;
}

namespace detail {

/// Rotation-vector error (full angle, base frame) from current to target,
/// shortest arc.
inline Vector3d rotation_error(const Quaterniond& target,
                               const Quaterniond& current) {
  Quaterniond rel = target * current.conjugate();
  if (rel.w() < 0.0) rel.coeffs() = -rel.coeffs();
  return 2.0 * quaternion_log(rel);
}

struct ApproxObjective {
  const KinematicChain& chain;
  const Pose& target;
  const JointVector& anchor;  // warm start, smoothness pulls here
  const IkSettings& settings;

  double value(const JointVector& q) const {
    const Pose pose = forward_kinematics(chain, q);
    double f = pose_distance(pose, target, settings.metric);
    if (settings.smoothness > 0.0)
      f += settings.smoothness * (q - anchor).squaredNorm();
    return f;
  }

  // Analytic gradient through the geometric Jacobian. Position term:
  // 2 w_pos Jv^T dp. Rotation term: the squared half-angle differentiates to
  // w_rot Jw^T log(rel) with rel the sign-canonicalized relative quaternion.
  double value_and_gradient(const JointVector& q, JointVector& grad) const {
    Pose pose;
    Eigen::Matrix<double, 6, Eigen::Dynamic> jac;
    fk_with_jacobian(chain, q, pose, jac);

    const Vector3d dp = pose.position - target.position;
    Quaterniond rel = pose.orientation * target.orientation.conjugate();
    if (rel.w() < 0.0) rel.coeffs() = -rel.coeffs();
    const Vector3d logrel = quaternion_log(rel);

    grad = 2.0 * settings.metric.position * (jac.topRows<3>().transpose() * dp) +
           settings.metric.rotation * (jac.bottomRows<3>().transpose() * logrel);
    double f = settings.metric.position * dp.squaredNorm() +
               settings.metric.rotation * logrel.squaredNorm();
    if (settings.smoothness > 0.0) {
      grad += 2.0 * settings.smoothness * (q - anchor);
      f += settings.smoothness * (q - anchor).squaredNorm();
    }
    return f;
  }
};

/// Projected quasi-Newton descent with box constraints: BFGS inverse-Hessian
/// updates on backtracked Armijo steps, reset whenever the active set changes.
inline std::pair<JointVector, double> minimize_boxed(
    const ApproxObjective& objective, const JointVector& start,
    const JointVector& lo, const JointVector& hi, const IkSettings& settings,
    int& iterations_out) {
  const Eigen::Index n = start.size();
  JointVector x = start;
  JointVector grad(n);
  double f = objective.value_and_gradient(x, grad);

  JointVector best_x = x;
  double best_f = f;

  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  int iterations = 0;

  for (int it = 0; it < settings.max_iterations; ++it) {
    double pg_norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool blocked = (x[i] <= lo[i] && grad[i] > 0.0) ||
                           (x[i] >= hi[i] && grad[i] < 0.0);
      if (!blocked) pg_norm = std::max(pg_norm, std::abs(grad[i]));
    }
    if (pg_norm < settings.gradient_tolerance) break;

    JointVector dir = -(hinv * grad);
    if (dir.dot(grad) >= 0.0) {
      hinv.setIdentity();
      dir = -grad;
    }

    double alpha = 1.0;
    JointVector x_new = x;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 48; ++ls) {
      JointVector cand = (x + alpha * dir).cwiseMax(lo).cwiseMin(hi);
      if ((cand - x).cwiseAbs().maxCoeff() == 0.0) {
        alpha *= 0.5;
        continue;
      }
      const double fc = objective.value(cand);
      if (fc <= f + 1e-4 * grad.dot(cand - x)) {
        x_new = std::move(cand);
        f_new = fc;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++iterations;
    if (!accepted) break;

    const JointVector step = x_new - x;
    if (step.cwiseAbs().maxCoeff() < settings.step_tolerance) {
      x = x_new;
      f = f_new;
      if (f < best_f) {
        best_f = f;
        best_x = x;
      }
      break;
    }

    JointVector grad_new(n);
    const double f_check = objective.value_and_gradient(x_new, grad_new);
    f_new = f_check;

    bool active_set_changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool was = (x[i] <= lo[i] || x[i] >= hi[i]);
      const bool now = (x_new[i] <= lo[i] || x_new[i] >= hi[i]);
      if (was != now) active_set_changed = true;
    }
    if (active_set_changed) {
      hinv.setIdentity();
    } else {
      const JointVector y = grad_new - grad;
      const double sy = step.dot(y);
      if (sy > 1e-12) {
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd outer =
            Eigen::MatrixXd::Identity(n, n) - rho * step * y.transpose();
        hinv = outer * hinv * outer.transpose() +
               rho * step * step.transpose();
      }
    }

    x = std::move(x_new);
    f = f_new;
    grad = std::move(grad_new);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }

  iterations_out = iterations;
  return {best_x, best_f};
}

}  // namespace detail

/// Conventional damped-pseudoinverse IK. Iterates
///   dq = J^T (J J^T + lambda^2 I)^-1 e
/// with e the stacked position / rotation-vector error, clamping every
/// iterate to the joint limits. If no iterate meets both tolerances the
/// end-effector does not move: the result carries q_prev unchanged.
inline IkResult solve_exact(const KinematicChain& chain, const Pose& target,
                            const JointVector& q_prev,
                            const IkSettings& settings) {
  counters().exact_solves.fetch_add(1, std::memory_order_relaxed);
  settings.validate();
  validate_pose(target, "solve_exact: target");
  chain.check_dimension(q_prev);
  if (!chain.within_limits(q_prev))
    throw std::invalid_argument("solve_exact: q_prev outside joint limits");

  const double lambda_sq = settings.damping * settings.damping;
  JointVector q = q_prev;
  Pose pose;
  Eigen::Matrix<double, 6, Eigen::Dynamic> jac;
  fk_with_jacobian(chain, q, pose, jac);

  double previous_error = std::numeric_limits<double>::infinity();
  int stalled = 0;

  for (int it = 0; it <= settings.exact_max_iterations; ++it) {
    const Vector3d e_pos = target.position - pose.position;
    const Vector3d e_rot = detail::rotation_error(target.orientation,
                                                  pose.orientation);
    if (e_pos.norm() < settings.position_tolerance &&
        e_rot.norm() < settings.rotation_tolerance) {
      const Pose achieved = forward_kinematics(chain, q);
      return {q, achieved, pose_distance(achieved, target, settings.metric),
              true, it};
    }
    if (it == settings.exact_max_iterations) break;

    // give up early once the error has stopped shrinking (typically an
    // unreachable target pinning the iterate to the workspace boundary)
    const double error_measure = e_pos.squaredNorm() + e_rot.squaredNorm();
    if (error_measure > previous_error - 1e-10 * previous_error) {
      if (++stalled >= 8) break;
    } else {
      stalled = 0;
    }
    previous_error = std::min(previous_error, error_measure);

    Eigen::Matrix<double, 6, 1> err;
    err << e_pos, e_rot;
    Eigen::Matrix<double, 6, 6> gram = jac * jac.transpose();
    gram.diagonal().array() += lambda_sq;
    const JointVector dq = jac.transpose() * gram.ldlt().solve(err);
    q = chain.clamp_to_limits(q + dq);
    fk_with_jacobian(chain, q, pose, jac);
  }

  const Pose achieved = forward_kinematics(chain, q_prev);
  return {q_prev, achieved, pose_distance(achieved, target, settings.metric),
          false, settings.exact_max_iterations};
}

/// Approximate IK: locally minimizes
///   pose_distance(f(q), target) + smoothness ||q - q_prev||^2
/// over the joint-limit box, warm-started at q_prev. Always returns the best
/// iterate found, so unreachable targets yield the closest reachable pose
/// under the configured metric instead of a failure.
inline IkResult solve_approx(const KinematicChain& chain, const Pose& target,
                             const JointVector& q_prev,
                             const IkSettings& settings) {
  counters().approx_solves.fetch_add(1, std::memory_order_relaxed);
  settings.validate();
  validate_pose(target, "solve_approx: target");
  chain.check_dimension(q_prev);
  if (!chain.within_limits(q_prev))
    throw std::invalid_argument("solve_approx: q_prev outside joint limits");

  const JointVector lo = chain.lower_limits();
  const JointVector hi = chain.upper_limits();
  const detail::ApproxObjective objective{chain, target, q_prev, settings};

  int iterations = 0;
  auto [best_q, best_f] =
      detail::minimize_boxed(objective, q_prev, lo, hi, settings, iterations);

  if (settings.restarts > 0) {
    std::mt19937 rng(settings.restart_seed);
    for (int r = 0; r < settings.restarts; ++r) {
      JointVector start(q_prev.size());
      for (Eigen::Index i = 0; i < start.size(); ++i) {
        std::uniform_real_distribution<double> dist(lo[i], hi[i]);
        start[i] = dist(rng);
      }
      int extra_iterations = 0;
      auto [q_r, f_r] = detail::minimize_boxed(objective, start, lo, hi,
                                               settings, extra_iterations);
      iterations += extra_iterations;
      if (f_r < best_f) {
        best_f = f_r;
        best_q = q_r;
      }
    }
  }

  const Pose achieved = forward_kinematics(chain, best_q);
  const double residual = pose_distance(achieved, target, settings.metric);
  const bool converged =
      (achieved.position - target.position).norm() <
          settings.position_tolerance &&
      detail::rotation_error(target.orientation, achieved.orientation).norm() <
          settings.rotation_tolerance;
  return {best_q, achieved, residual, converged, iterations};
}

/// Solve a pose sequence stepwise, warm-starting every query with the
/// previous solution. With the exact solver, steps whose targets fail keep
/// the previous joints.
inline std::vector<JointVector> solve_trajectory(
    const KinematicChain& chain, const std::vector<Pose>& targets,
    const JointVector& q0, const IkSettings& settings, Solver solver) {
  if (targets.empty())
    throw std::invalid_argument("solve_trajectory: empty target sequence");
  std::vector<JointVector> out;
  out.reserve(targets.size());
  JointVector q = q0;
  for (const Pose& target : targets) {
    const IkResult res = solver == Solver::exact
                             ? solve_exact(chain, target, q, settings)
                             : solve_approx(chain, target, q, settings);
    q = res.q;
    out.push_back(q);
  }
  return out;
}

}  // namespace skillref::ik
