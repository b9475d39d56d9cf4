#include <skillref/config_io.hpp>
#include <skillref/harness.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace skillref;

/// Flags shared by run/surface/wmap. Values parsed from the command line win
/// over the config file; CLI11's count() tells us which were given.
struct Overrides {
  std::string chain, task, space, ik, output_dir;
  double sigma{}, metric_position{}, metric_rotation{};
  double smoothness{}, position_tolerance{}, rotation_tolerance{}, damping{};
  int episodes{}, runs{}, threads{};
  int restarts{}, max_iterations{}, exact_max_iterations{};
  unsigned int base_seed{};
};

void add_experiment_flags(CLI::App* cmd, std::string& config_path,
                          Overrides& o) {
  cmd->add_option("-c,--config", config_path, "Experiment file (YAML)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--chain", o.chain, "Chain file (overrides config)");
  cmd->add_option("--task", o.task, "Task file (overrides config)");
  cmd->add_option("--space", o.space, "Policy space: joint|cartesian");
  cmd->add_option("--ik", o.ik, "IK solver: approx|exact (cartesian only)");
  cmd->add_option("--sigma", o.sigma, "Initial CMA-ES step size");
  cmd->add_option("--episodes", o.episodes, "Episodes per run");
  cmd->add_option("--runs", o.runs, "Independent runs");
  cmd->add_option("--base-seed", o.base_seed, "Seed of run 0; run i uses base+i");
  cmd->add_option("--output-dir", o.output_dir, "Directory for CSV/SVG output");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = hardware)");
  cmd->add_option("--metric-position", o.metric_position, "Pose metric w_pos");
  cmd->add_option("--metric-rotation", o.metric_rotation, "Pose metric w_rot");
  cmd->add_option("--smoothness", o.smoothness, "Approx IK warm-start weight");
  cmd->add_option("--restarts", o.restarts, "Approx IK random restarts");
  cmd->add_option("--max-iterations", o.max_iterations,
                  "Approx IK iteration cap");
  cmd->add_option("--exact-max-iterations", o.exact_max_iterations,
                  "Exact IK iteration cap");
  cmd->add_option("--position-tolerance", o.position_tolerance,
                  "IK position tolerance [m]");
  cmd->add_option("--rotation-tolerance", o.rotation_tolerance,
                  "IK rotation tolerance [rad]");
  cmd->add_option("--damping", o.damping, "Exact IK damping lambda");
}

config::ExperimentConfig load_with_overrides(const CLI::App* cmd,
                                             const std::string& config_path,
                                             const Overrides& o) {
  config::ExperimentConfig cfg = config::load_experiment(config_path);
  const auto given = [cmd](const std::string& flag) {
    return cmd->count(flag) > 0;
  };
  if (given("--chain")) cfg.chain_file = o.chain;
  if (given("--task")) cfg.task_file = o.task;
  if (given("--space"))
    cfg.space = config::parse_space(o.space, "--space", YAML::Node());
  if (given("--ik")) {
    if (cfg.space == dmp::Space::joint)
      throw config::ConfigError("--ik: joint-space configs must not set ik");
    cfg.solver = config::parse_solver(o.ik, "--ik", YAML::Node());
  }
  if (given("--sigma")) cfg.sigma = o.sigma;
  if (given("--episodes")) cfg.episodes = o.episodes;
  if (given("--runs")) cfg.runs = o.runs;
  if (given("--base-seed")) cfg.base_seed = o.base_seed;
  if (given("--output-dir")) cfg.output_dir = o.output_dir;
  if (given("--threads")) cfg.threads = o.threads;
  if (given("--metric-position")) cfg.metric.position = o.metric_position;
  if (given("--metric-rotation")) cfg.metric.rotation = o.metric_rotation;
  if (given("--smoothness")) cfg.ik_settings.smoothness = o.smoothness;
  if (given("--restarts")) cfg.ik_settings.restarts = o.restarts;
  if (given("--max-iterations"))
    cfg.ik_settings.max_iterations = o.max_iterations;
  if (given("--exact-max-iterations"))
    cfg.ik_settings.exact_max_iterations = o.exact_max_iterations;
  if (given("--position-tolerance"))
    cfg.ik_settings.position_tolerance = o.position_tolerance;
  if (given("--rotation-tolerance"))
    cfg.ik_settings.rotation_tolerance = o.rotation_tolerance;
  if (given("--damping")) cfg.ik_settings.damping = o.damping;
  cfg.ik_settings.metric = cfg.metric;
  cfg.validate();
  return cfg;
}

int cmd_run(const CLI::App* cmd, const std::string& config_path,
            const Overrides& o) {
  const config::ExperimentConfig cfg = load_with_overrides(cmd, config_path, o);
  const harness::ExperimentResult result = harness::run_experiment(cfg);
  std::printf("%s: %d runs x %d episodes\n",
              harness::config_label(cfg).c_str(), cfg.runs, cfg.episodes);
  std::printf("final mean best-so-far reward: %.6g +- %.6g\n",
              result.final_mean, result.final_standard_error);
  std::printf("wrote %s/{run_*.csv, aggregate.csv, curve.svg}\n",
              cfg.output_dir.c_str());
  return 0;
}

int cmd_surface(const CLI::App* cmd, const std::string& config_path,
                const Overrides& o, std::vector<double>& offsets,
                double span, int steps, int probe_index) {
  const config::ExperimentConfig cfg = load_with_overrides(cmd, config_path, o);
  if (offsets.empty()) {
    if (steps < 2 || !(span > 0.0))
      throw config::ConfigError(
          "surface: offset span must be > 0 and steps >= 2");
    for (int i = 0; i < steps; ++i)
      offsets.push_back(-span + 2.0 * span * i / (steps - 1));
  }
  const harness::SurfaceResult result =
      harness::reward_surface_projection(cfg, offsets, probe_index);
  std::printf("trained best reward: %.6g\n", result.trained_best);
  std::printf("probed weight %d over %zu offsets; wrote %s/surface.csv\n",
              probe_index, result.rows.size(), cfg.output_dir.c_str());
  return 0;
}

int cmd_wmap(const CLI::App* cmd, const std::string& config_path,
             const Overrides& o, int samples, unsigned int seed) {
  const config::ExperimentConfig cfg = load_with_overrides(cmd, config_path, o);
  const harness::WeightMapResult result =
      harness::weight_reward_map(cfg, samples, seed);
  std::printf("scored %zu genomes (row 0 = zero genome); wrote %s/wmap.csv\n",
              result.rewards.size(), cfg.output_dir.c_str());
  return 0;
}

int cmd_ik_check(const std::string& chain_path,
                 const std::vector<double>& position,
                 const std::vector<double>& orientation,
                 std::vector<double> start, const std::string& solver_name,
                 const ik::IkSettings& settings) {
  const KinematicChain chain = config::load_chain(chain_path);
  Pose target;
  target.position = Vector3d(position[0], position[1], position[2]);
  target.orientation = Quaterniond(orientation[0], orientation[1],
                                   orientation[2], orientation[3])
                           .normalized();
  if (start.empty()) start.assign(chain.size(), 0.0);
  const JointVector q0 =
      Eigen::Map<const Eigen::VectorXd>(start.data(), start.size());

  const ik::Solver solver =
      config::parse_solver(solver_name, "--ik", YAML::Node());
  const ik::IkResult result = solver == ik::Solver::exact
                                  ? ik::solve_exact(chain, target, q0, settings)
                                  : ik::solve_approx(chain, target, q0, settings);

  std::printf("solver: %s\n", solver == ik::Solver::exact ? "exact" : "approx");
  std::printf("converged: %s  iterations: %d  residual: %.6g\n",
              result.converged ? "yes" : "no", result.iterations,
              result.residual);
  std::printf("q:");
  for (Eigen::Index i = 0; i < result.q.size(); ++i)
    std::printf(" %.6g", result.q[i]);
  std::printf("\nachieved position: %.6g %.6g %.6g\n",
              result.achieved.position.x(), result.achieved.position.y(),
              result.achieved.position.z());
  std::printf("achieved orientation (w x y z): %.6g %.6g %.6g %.6g\n",
              result.achieved.orientation.w(), result.achieved.orientation.x(),
              result.achieved.orientation.y(), result.achieved.orientation.z());
  return result.converged ? 0 : 2;
}

int cmd_validate(const std::vector<std::string>& files) {
  int failures = 0;
  for (const std::string& file : files) {
    std::string kind = "unknown";
    try {
      YAML::Node root;
      try {
        root = YAML::LoadFile(file);
      } catch (const YAML::Exception& e) {
        throw config::ConfigError(file + ": " + e.what());
      }
      if (root["joints"]) {
        kind = "chain";
        config::load_chain(file);
      } else if (root["type"]) {
        kind = "task";
        config::load_task(file);
      } else if (root["space"]) {
        kind = "experiment";
        config::load_experiment(file);
      } else {
        throw config::ConfigError(
            file + ": cannot tell chain/task/experiment apart "
                   "(expected a 'joints', 'type' or 'space' field)");
      }
      std::printf("%s: OK (%s)\n", file.c_str(), kind.c_str());
    } catch (const config::ConfigError& e) {
      std::fprintf(stderr, "%s\n", e.what());
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy search for robot skills: joint space vs Cartesian "
               "space with approximate or exact IK"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides o;

  CLI::App* run = app.add_subcommand("run", "Run a learning experiment");
  add_experiment_flags(run, config_path, o);

  CLI::App* surface = app.add_subcommand(
      "surface", "Train once, then sweep one weight of the best policy");
  add_experiment_flags(surface, config_path, o);
  std::vector<double> offsets;
  double span = 50.0;
  int steps = 21, probe_index = 49;
  surface->add_option("--offsets", offsets,
                      "Explicit offset list (overrides span/steps)")
      ->delimiter(',');
  surface->add_option("--offset-span", span, "Symmetric grid half-width");
  surface->add_option("--offset-steps", steps, "Grid point count");
  surface->add_option("--probe-index", probe_index,
                      "Genome index to sweep (default: 50th weight)");

  CLI::App* wmap = app.add_subcommand(
      "wmap", "Score genomes sampled from the initial search distribution");
  add_experiment_flags(wmap, config_path, o);
  int samples = 100;
  unsigned int wmap_seed = 0;
  wmap->add_option("--samples", samples, "Sample count (row 0: zero genome)");
  wmap->add_option("--seed", wmap_seed, "Sampling seed");

  CLI::App* ik_check =
      app.add_subcommand("ik-check", "Solve a single IK query and print the "
                                     "result (exit 2 if not converged)");
  std::string chain_path, solver_name = "approx";
  std::vector<double> position, orientation{1.0, 0.0, 0.0, 0.0}, start;
  ik::IkSettings ik_settings;
  ik_check->add_option("--chain", chain_path, "Chain file (YAML)")
      ->required()
      ->check(CLI::ExistingFile);
  ik_check->add_option("--position", position, "Target position x,y,z")
      ->required()
      ->delimiter(',')
      ->expected(3);
  ik_check
      ->add_option("--orientation", orientation, "Target quaternion w,x,y,z")
      ->delimiter(',')
      ->expected(4);
  ik_check->add_option("--start", start, "Warm-start joints (default zeros)")
      ->delimiter(',');
  ik_check->add_option("--ik", solver_name, "Solver: approx|exact");
  ik_check->add_option("--metric-position", ik_settings.metric.position,
                       "Pose metric w_pos");
  ik_check->add_option("--metric-rotation", ik_settings.metric.rotation,
                       "Pose metric w_rot");
  ik_check->add_option("--smoothness", ik_settings.smoothness,
                       "Approx IK warm-start weight");
  ik_check->add_option("--restarts", ik_settings.restarts,
                       "Approx IK random restarts");
  ik_check->add_option("--max-iterations", ik_settings.max_iterations,
                       "Approx IK iteration cap");
  ik_check->add_option("--exact-max-iterations",
                       ik_settings.exact_max_iterations,
                       "Exact IK iteration cap");
  ik_check->add_option("--position-tolerance", ik_settings.position_tolerance,
                       "IK position tolerance [m]");
  ik_check->add_option("--rotation-tolerance", ik_settings.rotation_tolerance,
                       "IK rotation tolerance [rad]");
  ik_check->add_option("--damping", ik_settings.damping,
                       "Exact IK damping lambda");

  CLI::App* validate = app.add_subcommand(
      "validate", "Parse chain/task/experiment files and report problems");
  std::vector<std::string> files;
  validate->add_option("files", files, "Files to check")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run, config_path, o);
    if (surface->parsed())
      return cmd_surface(surface, config_path, o, offsets, span, steps,
                         probe_index);
    if (wmap->parsed()) return cmd_wmap(wmap, config_path, o, samples, wmap_seed);
    if (ik_check->parsed())
      return cmd_ik_check(chain_path, position, orientation, start,
                          solver_name, ik_settings);
    if (validate->parsed()) return cmd_validate(files);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 0;
}
