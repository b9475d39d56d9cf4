// Tour of the library: kinematics, the two IK solvers, DMP rollouts and a
// small CMA-ES policy search, all on the bundled 7-DOF chain.
#include <skillref/cmaes.hpp>
#include <skillref/default_chain.hpp>
#include <skillref/dmp.hpp>
#include <skillref/envs.hpp>
#include <skillref/ik.hpp>

#include <cstdio>

using namespace skillref;

int main() {
  const KinematicChain chain = iiwa_like_chain();
  std::printf("chain: %zu joints\n\n", chain.size());

  // Forward kinematics of a bent-elbow posture.
  JointVector q(7);
  q << 0.4, 0.35, 0.1, 0.35, 0.0, 0.2, 0.0;
  const Pose pose = forward_kinematics(chain, q);
  std::printf("FK position: %.4f %.4f %.4f\n", pose.position.x(),
              pose.position.y(), pose.position.z());

  // A reachable target: both solvers find it.
  ik::IkSettings settings;
  const ik::IkResult hit = ik::solve_approx(chain, pose, JointVector::Zero(7),
                                            settings);
  std::printf("approx IK on a reachable pose: converged=%d residual=%.2e\n",
              hit.converged, hit.residual);

  // An unreachable target (outside the 0.9 m workspace ball): the exact
  // solver refuses to move, the approximate solver returns the best
  // reachable compromise.
  Pose far = pose;
  far.position = Vector3d(1.2, 0.0, 0.3);
  const ik::IkResult frozen = ik::solve_exact(chain, far, q, settings);
  const ik::IkResult best = ik::solve_approx(chain, far, q, settings);
  std::printf("exact IK on an unreachable pose: converged=%d, moved=%s\n",
              frozen.converged, frozen.q == q ? "no" : "yes");
  std::printf("approx IK on the same pose: position error %.3f m "
              "(distance outside the workspace: %.3f m)\n\n",
              (best.achieved.position - far.position).norm(),
              (far.position - Vector3d(0, 0, 0.3)).norm() - 0.9);

  // A Cartesian DMP from the posture above to a second posture; zero
  // weights give the nominal start-to-goal motion.
  JointVector q_goal(7);
  q_goal << -0.5, 0.30, 0.1, 0.10, 0.0, 0.05, 0.0;
  dmp::CanonicalSystem canonical;
  const dmp::DmpPolicy policy = dmp::DmpPolicy::cartesian(
      pose, forward_kinematics(chain, q_goal), q, canonical);
  const dmp::JointTrajectory traj =
      dmp::execute_policy(policy, chain, settings, ik::Solver::approx);
  const Pose reached = forward_kinematics(
      chain, JointVector(traj.positions.bottomRows(1).transpose()));
  std::printf("cartesian DMP rollout: %ld steps, final position error %.2e m\n",
              static_cast<long>(traj.steps()),
              (reached.position - forward_kinematics(chain, q_goal).position)
                  .norm());

  // Policy search on a one-viapoint task: CMA-ES shapes the DMP weights so
  // the end-effector passes through a point off the nominal path.
  envs::ViapointTask task;
  task.viapoints.push_back(
      {50, Vector3d(0.55, 0.25, 0.75)});
  const envs::Objective objective = envs::make_episode_objective(
      task, chain, policy, dmp::Space::cartesian, ik::Solver::approx,
      settings);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(policy.genome_size());
  std::printf("\nviapoint reward before learning: %.4f\n", objective(zero));
  const cmaes::OptimizeResult learned =
      cmaes::optimize(objective, zero, 30.0, 400, 1u);
  std::printf("after 400 episodes of CMA-ES:     %.4f\n",
              learned.best_fitness);
  return 0;
}
