#pragma once

#include "dmp.hpp"
#include "ik.hpp"
#include "kinematics.hpp"

#include <atomic>

namespace skillref::envs {

/// Reward returned when a policy produces a non-finite trajectory.
inline constexpr double kSentinelReward = -1e12;

/// Count of sentinel rewards handed out by episode objectives.
inline std::atomic<long>& sentinel_counter() {
  static std::atomic<long> counter{0};
  return counter;
}
inline long sentinel_count() { return sentinel_counter().load(); }
inline void reset_sentinel_count() { sentinel_counter().store(0); }

struct Viapoint {
  int step{1};  // 1-based sample index in [1, trajectory_steps]
  Vector3d position{Vector3d::Zero()};
};

/// Pass through Cartesian points at fixed steps while keeping joint
/// velocities and accelerations small:
///   R = -c_dist sum_v ||f(q_{t_v}) - v|| - c_vel sum|qd| - c_acc sum|qdd|
struct ViapointTask {
  std::vector<Viapoint> viapoints;
  double c_dist{10.0};
  double c_vel{1e-3};
  double c_acc{1e-5};
  int trajectory_steps{101};

  void validate() const {
    if (viapoints.empty())
      throw std::invalid_argument("ViapointTask: needs at least one viapoint");
    if (trajectory_steps < 1)
      throw std::invalid_argument("ViapointTask: invalid step count");
    for (const Viapoint& v : viapoints) {
      if (v.step < 1 || v.step > trajectory_steps)
        throw std::invalid_argument(
            "ViapointTask: viapoint step outside [1, T]");
      if (!v.position.allFinite())
        throw std::invalid_argument("ViapointTask: non-finite viapoint");
    }
  }
};

/// Piecewise-linear sphere penalty: 1 at the center, 0 from `radius` out.
inline double obstacle_penalty(double distance, double radius) {
  return std::max(0.0, 1.0 - distance / radius);
}

/// Reach a goal position while staying away from spherical obstacles:
///   R = -c_obs sum_o p(min_t ||f(q_t) - o||) - c_goal ||f(q_T) - g||
///       - c_vel sum|qd| - c_acc sum|qdd|
/// Each obstacle is penalized once, by the closest approach over the whole
/// trajectory; only the end-effector point is checked.
struct ObstacleTask {
  std::vector<Vector3d> obstacles;
  Vector3d goal{Vector3d::Zero()};
  double influence_radius{0.17};
  double c_obs{10.0};
  double c_goal{100.0};
  double c_vel{1e-2};
  double c_acc{1e-5};
  int trajectory_steps{101};

  void validate() const {
    if (!(influence_radius > 0.0))
      throw std::invalid_argument("ObstacleTask: radius must be > 0");
    if (trajectory_steps < 1)
      throw std::invalid_argument("ObstacleTask: invalid step count");
    if (!goal.allFinite())
      throw std::invalid_argument("ObstacleTask: non-finite goal");
    for (const Vector3d& o : obstacles)
      if (!o.allFinite())
        throw std::invalid_argument("ObstacleTask: non-finite obstacle");
  }
};

namespace detail {

inline void check_shapes(const Eigen::MatrixXd& ee_positions,
                         const Eigen::MatrixXd& velocities,
                         const Eigen::MatrixXd& accelerations, int steps) {
  if (ee_positions.rows() != steps || ee_positions.cols() != 3)
    throw std::invalid_argument("reward: end-effector positions must be Tx3");
  if (velocities.rows() != steps || accelerations.rows() != steps ||
      velocities.cols() != accelerations.cols())
    throw std::invalid_argument(
        "reward: velocities/accelerations must cover all T steps");
}

inline Eigen::MatrixXd fk_positions(const KinematicChain& chain,
                                    const dmp::JointTrajectory& trajectory) {
  Eigen::MatrixXd positions(trajectory.steps(), 3);
  for (Eigen::Index t = 0; t < trajectory.steps(); ++t)
    positions.row(t) =
        forward_kinematics(chain, trajectory.positions.row(t).transpose())
            .position.transpose();
  return positions;
}

}  // namespace detail

/// End-effector-positions overload: the caller supplies f(q_t) directly.
inline double viapoint_reward(const ViapointTask& task,
                              const Eigen::MatrixXd& ee_positions,
                              const Eigen::MatrixXd& velocities,
                              const Eigen::MatrixXd& accelerations) {
  task.validate();
  detail::check_shapes(ee_positions, velocities, accelerations,
                       task.trajectory_steps);
  double distance_term = 0.0;
  for (const Viapoint& v : task.viapoints)
    distance_term +=
        (ee_positions.row(v.step - 1).transpose() - v.position).norm();
  return -task.c_dist * distance_term -
         task.c_vel * velocities.cwiseAbs().sum() -
         task.c_acc * accelerations.cwiseAbs().sum();
}

inline double viapoint_reward(const ViapointTask& task,
                              const dmp::JointTrajectory& trajectory,
                              const KinematicChain& chain) {
  return viapoint_reward(task, detail::fk_positions(chain, trajectory),
                         trajectory.velocities, trajectory.accelerations);
}

inline double obstacle_reward(const ObstacleTask& task,
                              const Eigen::MatrixXd& ee_positions,
                              const Eigen::MatrixXd& velocities,
                              const Eigen::MatrixXd& accelerations) {
  task.validate();
  detail::check_shapes(ee_positions, velocities, accelerations,
                       task.trajectory_steps);
  double obstacle_term = 0.0;
  for (const Vector3d& obstacle : task.obstacles) {
    double closest = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < ee_positions.rows(); ++t)
      closest = std::min(
          closest, (ee_positions.row(t).transpose() - obstacle).norm());
    obstacle_term += obstacle_penalty(closest, task.influence_radius);
  }
  const double goal_distance =
      (ee_positions.row(task.trajectory_steps - 1).transpose() - task.goal)
          .norm();
  return -task.c_obs * obstacle_term - task.c_goal * goal_distance -
         task.c_vel * velocities.cwiseAbs().sum() -
         task.c_acc * accelerations.cwiseAbs().sum();
}

inline double obstacle_reward(const ObstacleTask& task,
                              const dmp::JointTrajectory& trajectory,
                              const KinematicChain& chain) {
  return obstacle_reward(task, detail::fk_positions(chain, trajectory),
                         trajectory.velocities, trajectory.accelerations);
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

template <typename Task, typename RewardFn>
Objective make_objective(Task task, KinematicChain chain,
                         dmp::DmpPolicy policy_template, dmp::Space space,
                         ik::Solver solver, ik::IkSettings settings,
                         RewardFn reward) {
  task.validate();
  policy_template.validate();
  settings.validate();
  if (policy_template.space != space)
    throw std::invalid_argument(
        "make_episode_objective: policy template space mismatch");
  if (policy_template.canonical.steps != task.trajectory_steps)
    throw std::invalid_argument(
        "make_episode_objective: policy steps != task steps");

  return [task = std::move(task), chain = std::move(chain),
          policy_template = std::move(policy_template), solver, settings,
          reward](const Eigen::VectorXd& genome) -> double {
    dmp::DmpPolicy policy = policy_template;
    policy.set_weights_flat(genome);  // rejects mismatched genome length
    const dmp::JointTrajectory trajectory =
        dmp::execute_policy(policy, chain, settings, solver);
    if (!trajectory.all_finite()) {
      ++sentinel_counter();
      return kSentinelReward;
    }
    return reward(task, trajectory, chain);
  };
}

}  // namespace detail

/// Builds a pure objective genome -> reward. The genome is decoded
/// dimension-major into the template's weights, executed on the chain, and
/// scored by the task. Non-finite trajectories score kSentinelReward and
/// bump sentinel_count().
inline Objective make_episode_objective(const ViapointTask& task,
                                        const KinematicChain& chain,
                                        const dmp::DmpPolicy& policy_template,
                                        dmp::Space space, ik::Solver solver,
                                        const ik::IkSettings& settings) {
  return detail::make_objective(
      task, chain, policy_template, space, solver, settings,
      [](const ViapointTask& t, const dmp::JointTrajectory& traj,
         const KinematicChain& c) { return viapoint_reward(t, traj, c); });
}

inline Objective make_episode_objective(const ObstacleTask& task,
                                        const KinematicChain& chain,
                                        const dmp::DmpPolicy& policy_template,
                                        dmp::Space space, ik::Solver solver,
                                        const ik::IkSettings& settings) {
  return detail::make_objective(
      task, chain, policy_template, space, solver, settings,
      [](const ObstacleTask& t, const dmp::JointTrajectory& traj,
         const KinematicChain& c) { return obstacle_reward(t, traj, c); });
}

}  // namespace skillref::envs
