#include <catch2/catch_amalgamated.hpp>

#include <skillref/config_io.hpp>
#include <skillref/default_chain.hpp>

#include "test_helpers.hpp"

#include <filesystem>
#include <fstream>
#include <random>

using namespace skillref;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "skillref_config";
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_file(const std::string& name,
                                 const std::string& text) {
  const auto path = scratch_dir() / name;
  std::ofstream out(path);
  out << text;
  return path;
}

std::string error_message(const std::function<void()>& action) {
  try {
    action();
  } catch (const config::ConfigError& e) {
    return e.what();
  }
  FAIL("expected ConfigError");
  return {};
}

const std::string kPlanarChainYaml = R"(joints:
  - translation: [0.0, 0.0, 0.1]
    rotation: [1.0, 0.0, 0.0, 0.0]
    axis: [0.0, 0.0, 1.0]
    limits: [-3.0, 3.0]
  - translation: [0.5, 0.0, 0.0]
    rotation: [1.0, 0.0, 0.0, 0.0]
    axis: [0.0, 0.0, 1.0]
    limits: [-3.0, 3.0]
end_effector:
  translation: [0.5, 0.0, 0.0]
  rotation: [1.0, 0.0, 0.0, 0.0]
)";

const std::string kViapointTaskYaml = R"(type: viapoint
viapoints:
  - step: 50
    position: [0.8, 0.3, 0.1]
  - step: 101
    position: [0.5, 0.5, 0.1]
start_joints: [0.0, 0.0]
goal_joints: [1.0, -0.5]
)";

}  // namespace

TEST_CASE("bundled chain file matches the built-in default") {
  const KinematicChain parsed =
      config::load_chain(SKILLREF_CONFIG_DIR "/chain_iiwa_like.yaml");
  const KinematicChain builtin = iiwa_like_chain();

  REQUIRE(parsed.size() == builtin.size());
  REQUIRE(parsed.lower_limits() == builtin.lower_limits());
  REQUIRE(parsed.upper_limits() == builtin.upper_limits());

  std::mt19937 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const JointVector q = test::random_in_limits(builtin, rng);
    const Pose a = forward_kinematics(parsed, q);
    const Pose b = forward_kinematics(builtin, q);
    // Identical descriptors compose identically, so this is exact.
    REQUIRE(a.position == b.position);
    REQUIRE(a.orientation.coeffs() == b.orientation.coeffs());
  }
}

TEST_CASE("chain loader reports missing fields with file and line") {
  const auto path = write_file("chain_missing_axis.yaml",
                               R"(joints:
  - translation: [0.0, 0.0, 0.1]
    rotation: [1.0, 0.0, 0.0, 0.0]
    axis: [0.0, 0.0, 1.0]
    limits: [-1.0, 1.0]
  - translation: [0.0, 0.0, 0.2]
    rotation: [1.0, 0.0, 0.0, 0.0]
    limits: [-1.0, 1.0]
end_effector:
  translation: [0.0, 0.0, 0.0]
  rotation: [1.0, 0.0, 0.0, 0.0]
)");
  const std::string msg =
      error_message([&] { config::load_chain(path.string()); });
  CHECK(msg.find("missing field 'axis'") != std::string::npos);
  CHECK(msg.find(path.string() + ":6:") != std::string::npos);
}

TEST_CASE("chain loader rejects malformed values") {
  SECTION("non-numeric limit") {
    const auto path = write_file("chain_bad_limit.yaml",
                                 R"(joints:
  - translation: [0.0, 0.0, 0.1]
    rotation: [1.0, 0.0, 0.0, 0.0]
    axis: [0.0, 0.0, 1.0]
    limits: [-1.0, high]
end_effector:
  translation: [0.0, 0.0, 0.0]
  rotation: [1.0, 0.0, 0.0, 0.0]
)");
    const std::string msg =
        error_message([&] { config::load_chain(path.string()); });
    CHECK(msg.find("invalid value for joint limits") != std::string::npos);
  }
  SECTION("wrong-arity vector") {
    const auto path = write_file("chain_short_axis.yaml",
                                 R"(joints:
  - translation: [0.0, 0.0, 0.1]
    rotation: [1.0, 0.0, 0.0, 0.0]
    axis: [0.0, 1.0]
    limits: [-1.0, 1.0]
end_effector:
  translation: [0.0, 0.0, 0.0]
  rotation: [1.0, 0.0, 0.0, 0.0]
)");
    const std::string msg =
        error_message([&] { config::load_chain(path.string()); });
    CHECK(msg.find("must have 3 entries") != std::string::npos);
  }
  SECTION("inverted limits surface the chain validation") {
    const auto path = write_file("chain_inverted.yaml",
                                 R"(joints:
  - translation: [0.0, 0.0, 0.1]
    rotation: [1.0, 0.0, 0.0, 0.0]
    axis: [0.0, 0.0, 1.0]
    limits: [1.0, -1.0]
end_effector:
  translation: [0.0, 0.0, 0.0]
  rotation: [1.0, 0.0, 0.0, 0.0]
)");
    CHECK_THROWS_AS(config::load_chain(path.string()), config::ConfigError);
  }
  SECTION("unreadable file") {
    CHECK_THROWS_AS(config::load_chain(
                        (scratch_dir() / "does_not_exist.yaml").string()),
                    config::ConfigError);
  }
}

TEST_CASE("viapoint task parsing applies documented defaults") {
  const auto path = write_file("task_viapoint.yaml", kViapointTaskYaml);
  const config::TaskConfig cfg = config::load_task(path.string());

  REQUIRE(cfg.is_viapoint());
  const envs::ViapointTask& task = cfg.viapoint();
  REQUIRE(task.viapoints.size() == 2);
  CHECK(task.viapoints[0].step == 50);
  CHECK(task.viapoints[0].position == Vector3d(0.8, 0.3, 0.1));
  CHECK(task.viapoints[1].step == 101);
  CHECK(task.c_dist == 10.0);
  CHECK(task.c_vel == 1e-3);
  CHECK(task.c_acc == 1e-5);
  CHECK(task.trajectory_steps == 101);
  CHECK(cfg.start_joints == JointVector::Zero(2));
  CHECK(cfg.goal_joints[0] == 1.0);
  CHECK(cfg.goal_joints[1] == -0.5);
}

TEST_CASE("viapoint task parsing honors overrides and validates") {
  SECTION("weight and step overrides") {
    const auto path = write_file("task_viapoint_custom.yaml",
                                 R"(type: viapoint
viapoints:
  - step: 10
    position: [0.1, 0.2, 0.3]
weights:
  distance: 5.0
  velocity: 0.25
  acceleration: 0.125
steps: 51
start_joints: [0.0, 0.0]
goal_joints: [0.5, 0.5]
)");
    const config::TaskConfig cfg = config::load_task(path.string());
    CHECK(cfg.viapoint().c_dist == 5.0);
    CHECK(cfg.viapoint().c_vel == 0.25);
    CHECK(cfg.viapoint().c_acc == 0.125);
    CHECK(cfg.trajectory_steps() == 51);
  }
  SECTION("viapoint step outside the horizon") {
    const auto path = write_file("task_viapoint_bad_step.yaml",
                                 R"(type: viapoint
viapoints:
  - step: 102
    position: [0.1, 0.2, 0.3]
start_joints: [0.0, 0.0]
goal_joints: [0.5, 0.5]
)");
    CHECK_THROWS_AS(config::load_task(path.string()), config::ConfigError);
  }
  SECTION("missing start_joints") {
    const auto path = write_file("task_viapoint_no_start.yaml",
                                 R"(type: viapoint
viapoints:
  - step: 10
    position: [0.1, 0.2, 0.3]
goal_joints: [0.5, 0.5]
)");
    const std::string msg =
        error_message([&] { config::load_task(path.string()); });
    CHECK(msg.find("missing field 'start_joints'") != std::string::npos);
  }
  SECTION("start and goal lengths differ") {
    const auto path = write_file("task_viapoint_ragged.yaml",
                                 R"(type: viapoint
viapoints:
  - step: 10
    position: [0.1, 0.2, 0.3]
start_joints: [0.0, 0.0, 0.0]
goal_joints: [0.5, 0.5]
)");
    const std::string msg =
        error_message([&] { config::load_task(path.string()); });
    CHECK(msg.find("lengths differ") != std::string::npos);
  }
  SECTION("unknown task type names the valid options") {
    const auto path = write_file("task_unknown.yaml",
                                 R"(type: maze
start_joints: [0.0]
goal_joints: [0.0]
)");
    const std::string msg =
        error_message([&] { config::load_task(path.string()); });
    CHECK(msg.find("viapoint") != std::string::npos);
    CHECK(msg.find("obstacle") != std::string::npos);
  }
}

TEST_CASE("obstacle task parsing applies documented defaults") {
  const auto path = write_file("task_obstacle.yaml",
                               R"(type: obstacle
goal: [0.6, 0.2, 0.1]
obstacles:
  - center: [0.4, 0.1, 0.1]
  - center: [0.5, -0.1, 0.1]
start_joints: [0.0, 0.0]
goal_joints: [1.0, -0.5]
)");
  const config::TaskConfig cfg = config::load_task(path.string());

  REQUIRE_FALSE(cfg.is_viapoint());
  const envs::ObstacleTask& task = cfg.obstacle();
  REQUIRE(task.obstacles.size() == 2);
  CHECK(task.obstacles[0] == Vector3d(0.4, 0.1, 0.1));
  CHECK(task.goal == Vector3d(0.6, 0.2, 0.1));
  CHECK(task.influence_radius == 0.17);
  CHECK(task.c_obs == 10.0);
  CHECK(task.c_goal == 100.0);
  CHECK(task.c_vel == 1e-2);
  CHECK(task.c_acc == 1e-5);
  CHECK(task.trajectory_steps == 101);
}

TEST_CASE("obstacle task parsing honors overrides") {
  const auto path = write_file("task_obstacle_custom.yaml",
                               R"(type: obstacle
goal: [0.6, 0.2, 0.1]
obstacles: []
influence_radius: 0.3
weights:
  obstacle: 2.0
  goal: 50.0
  velocity: 0.5
  acceleration: 0.25
start_joints: [0.0, 0.0]
goal_joints: [1.0, -0.5]
)");
  const config::TaskConfig cfg = config::load_task(path.string());
  const envs::ObstacleTask& task = cfg.obstacle();
  CHECK(task.obstacles.empty());
  CHECK(task.influence_radius == 0.3);
  CHECK(task.c_obs == 2.0);
  CHECK(task.c_goal == 50.0);
  CHECK(task.c_vel == 0.5);
  CHECK(task.c_acc == 0.25);
}

TEST_CASE("experiment parsing resolves paths and applies defaults") {
  write_file("chain_planar.yaml", kPlanarChainYaml);
  write_file("task_planar.yaml", kViapointTaskYaml);
  const auto path = write_file("experiment_defaults.yaml",
                               R"(chain: chain_planar.yaml
task: task_planar.yaml
space: joint
sigma: 0.5
)");
  const config::ExperimentConfig cfg =
      config::load_experiment(path.string());

  CHECK(cfg.chain_file == (scratch_dir() / "chain_planar.yaml").string());
  CHECK(cfg.task_file == (scratch_dir() / "task_planar.yaml").string());
  CHECK(cfg.space == dmp::Space::joint);
  CHECK(cfg.solver == ik::Solver::approx);
  CHECK(cfg.sigma == 0.5);
  CHECK(cfg.episodes == 1000);
  CHECK(cfg.runs == 30);
  CHECK(cfg.base_seed == 0u);
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.threads == 0);
  CHECK(cfg.metric.position == 1.0);
  CHECK(cfg.metric.rotation == 1.0);

  // The referenced files load through the recorded absolute paths.
  CHECK(config::load_chain(cfg.chain_file).size() == 2);
  CHECK(config::load_task(cfg.task_file).is_viapoint());
}

TEST_CASE("experiment parsing honors overrides and copies the metric") {
  write_file("chain_planar.yaml", kPlanarChainYaml);
  write_file("task_planar.yaml", kViapointTaskYaml);
  const auto path = write_file("experiment_custom.yaml",
                               R"(chain: chain_planar.yaml
task: task_planar.yaml
space: cartesian
ik: exact
sigma: 0.04
episodes: 120
runs: 3
base_seed: 11
output_dir: results/custom
threads: 2
metric:
  position: 2.0
  rotation: 0.5
ik_settings:
  smoothness: 0.01
  restarts: 2
  max_iterations: 60
  exact_max_iterations: 80
  position_tolerance: 1e-5
  rotation_tolerance: 1e-4
  damping: 0.05
)");
  const config::ExperimentConfig cfg =
      config::load_experiment(path.string());

  CHECK(cfg.space == dmp::Space::cartesian);
  CHECK(cfg.solver == ik::Solver::exact);
  CHECK(cfg.sigma == 0.04);
  CHECK(cfg.episodes == 120);
  CHECK(cfg.runs == 3);
  CHECK(cfg.base_seed == 11u);
  CHECK(cfg.output_dir == "results/custom");
  CHECK(cfg.threads == 2);
  CHECK(cfg.ik_settings.smoothness == 0.01);
  CHECK(cfg.ik_settings.restarts == 2);
  CHECK(cfg.ik_settings.max_iterations == 60);
  CHECK(cfg.ik_settings.exact_max_iterations == 80);
  CHECK(cfg.ik_settings.position_tolerance == 1e-5);
  CHECK(cfg.ik_settings.rotation_tolerance == 1e-4);
  CHECK(cfg.ik_settings.damping == 0.05);
  // The pose metric used by IK is the experiment metric.
  CHECK(cfg.ik_settings.metric.position == 2.0);
  CHECK(cfg.ik_settings.metric.rotation == 0.5);
}

TEST_CASE("experiment parsing rejects inconsistent configurations") {
  write_file("chain_planar.yaml", kPlanarChainYaml);
  write_file("task_planar.yaml", kViapointTaskYaml);

  SECTION("ik key with joint space") {
    const auto path = write_file("experiment_joint_ik.yaml",
                                 R"(chain: chain_planar.yaml
task: task_planar.yaml
space: joint
ik: approx
sigma: 0.5
)");
    const std::string msg =
        error_message([&] { config::load_experiment(path.string()); });
    CHECK(msg.find("must not set 'ik'") != std::string::npos);
    CHECK(msg.find(":4:") != std::string::npos);
  }
  SECTION("unknown space") {
    const auto path = write_file("experiment_bad_space.yaml",
                                 R"(chain: chain_planar.yaml
task: task_planar.yaml
space: task
sigma: 0.5
)");
    const std::string msg =
        error_message([&] { config::load_experiment(path.string()); });
    CHECK(msg.find("space must be 'joint' or 'cartesian'") !=
          std::string::npos);
  }
  SECTION("unknown solver") {
    const auto path = write_file("experiment_bad_ik.yaml",
                                 R"(chain: chain_planar.yaml
task: task_planar.yaml
space: cartesian
ik: fast
sigma: 0.5
)");
    const std::string msg =
        error_message([&] { config::load_experiment(path.string()); });
    CHECK(msg.find("ik must be 'exact' or 'approx'") != std::string::npos);
  }
  SECTION("missing sigma") {
    const auto path = write_file("experiment_no_sigma.yaml",
                                 R"(chain: chain_planar.yaml
task: task_planar.yaml
space: joint
)");
    const std::string msg =
        error_message([&] { config::load_experiment(path.string()); });
    CHECK(msg.find("missing field 'sigma'") != std::string::npos);
  }
  SECTION("non-positive sigma fails validation") {
    const auto path = write_file("experiment_neg_sigma.yaml",
                                 R"(chain: chain_planar.yaml
task: task_planar.yaml
space: joint
sigma: -0.5
)");
    CHECK_THROWS_AS(config::load_experiment(path.string()),
                    config::ConfigError);
  }
  SECTION("zero episodes fails validation") {
    const auto path = write_file("experiment_zero_episodes.yaml",
                                 R"(chain: chain_planar.yaml
task: task_planar.yaml
space: joint
sigma: 0.5
episodes: 0
)");
    CHECK_THROWS_AS(config::load_experiment(path.string()),
                    config::ConfigError);
  }
}
