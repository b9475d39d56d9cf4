#pragma once

#include "cmaes.hpp"
#include "config_io.hpp"
#include "csv.hpp"
#include "dmp.hpp"
#include "envs.hpp"
#include "svg.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace skillref::harness {

struct ExperimentSetup {
  KinematicChain chain;
  config::TaskConfig task;
  dmp::DmpPolicy policy_template;
  envs::Objective objective;
  Eigen::Index genome_size{};
  int lambda{};
};

inline std::string config_label(const config::ExperimentConfig& cfg) {
  if (cfg.space == dmp::Space::joint) return "joint";
  return cfg.solver == ik::Solver::approx ? "cartesian-approx"
                                          : "cartesian-exact";
}

/// Loads the referenced files and builds the policy template and episode
/// objective. All configuration errors surface here, before any run starts.
inline ExperimentSetup assemble(const config::ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentSetup setup{.chain = config::load_chain(cfg.chain_file),
                        .task = config::load_task(cfg.task_file)};

  const Eigen::Index n = static_cast<Eigen::Index>(setup.chain.size());
  if (setup.task.start_joints.size() != n)
    throw config::ConfigError(cfg.task_file +
                              ": start_joints length != chain joints");
  if (!setup.chain.within_limits(setup.task.start_joints) ||
      !setup.chain.within_limits(setup.task.goal_joints))
    throw config::ConfigError(cfg.task_file +
                              ": start/goal joints outside the chain limits");

  dmp::CanonicalSystem canonical;
  canonical.steps = setup.task.trajectory_steps();
  if (cfg.space == dmp::Space::joint) {
    setup.policy_template = dmp::DmpPolicy::joint_space(
        setup.task.start_joints, setup.task.goal_joints, canonical);
  } else {
    setup.policy_template = dmp::DmpPolicy::cartesian(
        forward_kinematics(setup.chain, setup.task.start_joints),
        forward_kinematics(setup.chain, setup.task.goal_joints),
        setup.task.start_joints, canonical);
  }
  setup.genome_size = setup.policy_template.genome_size();
  setup.lambda =
      cmaes::StrategyConstants::defaults(setup.genome_size).lambda;

  if (setup.task.is_viapoint())
    setup.objective = envs::make_episode_objective(
        setup.task.viapoint(), setup.chain, setup.policy_template, cfg.space,
        cfg.solver, cfg.ik_settings);
  else
    setup.objective = envs::make_episode_objective(
        setup.task.obstacle(), setup.chain, setup.policy_template, cfg.space,
        cfg.solver, cfg.ik_settings);
  return setup;
}

struct RunHistory {
  std::vector<double> rewards;       // raw reward per episode
  std::vector<double> best_so_far;   // running maximum per episode
};

struct LearningCurve {
  std::vector<double> mean;          // of best_so_far across runs
  std::vector<double> standard_error;  // sample std / sqrt(runs); 0 if runs=1
  std::vector<RunHistory> runs;
};

struct ExperimentResult {
  LearningCurve curve;
  double final_mean{};
  double final_standard_error{};
};

namespace detail {

inline RunHistory single_run(const ExperimentSetup& setup, double sigma,
                             int episodes, unsigned int seed) {
  RunHistory history;
  history.rewards.reserve(episodes);
  const envs::Objective& objective = setup.objective;
  const auto recording = [&](const Eigen::VectorXd& genome) {
    try {
      const double reward = objective(genome);
      history.rewards.push_back(reward);
      return reward;
    } catch (...) {  // keep rewards aligned with the best-so-far history
      history.rewards.push_back(-std::numeric_limits<double>::infinity());
      throw;
    }
  };
  const cmaes::OptimizeResult result =
      cmaes::optimize(recording, Eigen::VectorXd::Zero(setup.genome_size),
                      sigma, episodes, seed);
  history.best_so_far = result.history;
  return history;
}

inline void aggregate(LearningCurve& curve, int episodes) {
  const size_t runs = curve.runs.size();
  curve.mean.assign(episodes, 0.0);
  curve.standard_error.assign(episodes, 0.0);
  for (int t = 0; t < episodes; ++t) {
    double sum = 0.0;
    for (const RunHistory& run : curve.runs) sum += run.best_so_far[t];
    const double mean = sum / static_cast<double>(runs);
    curve.mean[t] = mean;
    if (runs > 1) {
      double sq = 0.0;
      for (const RunHistory& run : curve.runs) {
        const double d = run.best_so_far[t] - mean;
        sq += d * d;
      }
      curve.standard_error[t] =
          std::sqrt(sq / static_cast<double>(runs - 1)) /
          std::sqrt(static_cast<double>(runs));
    }
  }
}

inline void for_each_run_threaded(int runs, int threads,
                                  const std::function<void(int)>& work) {
  const int worker_count = std::max(
      1, std::min(runs, threads > 0
                            ? threads
                            : static_cast<int>(
                                  std::thread::hardware_concurrency())));
  if (worker_count == 1) {
    for (int i = 0; i < runs; ++i) work(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(worker_count);
  for (int w = 0; w < worker_count; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < runs; i = next.fetch_add(1))
        work(i);
    });
  for (std::thread& t : pool) t.join();
}

}  // namespace detail

/// Runs `cfg.runs` seeded CMA-ES runs (seed = base_seed + i), writes one CSV
/// per run (episode, reward, best_so_far), an aggregate CSV
/// (episode, mean, stderr), and a learning-curve SVG. Byte-identical outputs
/// for identical (config, base_seed), regardless of thread count.
inline ExperimentResult run_experiment(const config::ExperimentConfig& cfg) {
  const ExperimentSetup setup = assemble(cfg);
  if (cfg.episodes < setup.lambda)
    throw config::ConfigError(
        "experiment: episodes must be >= one generation (" +
        std::to_string(setup.lambda) + ")");

  ExperimentResult result;
  result.curve.runs.resize(cfg.runs);
  detail::for_each_run_threaded(cfg.runs, cfg.threads, [&](int i) {
    result.curve.runs[i] = detail::single_run(
        setup, cfg.sigma, cfg.episodes, cfg.base_seed + i);
  });
  detail::aggregate(result.curve, cfg.episodes);
  result.final_mean = result.curve.mean.back();
  result.final_standard_error = result.curve.standard_error.back();

  const std::filesystem::path out_dir(cfg.output_dir);
  for (int i = 0; i < cfg.runs; ++i) {
    csv::Writer writer(out_dir / ("run_" + std::to_string(i) + ".csv"),
                       {"episode", "reward", "best_so_far"});
    const RunHistory& run = result.curve.runs[i];
    for (int t = 0; t < cfg.episodes; ++t)
      writer.row({static_cast<double>(t + 1), run.rewards[t],
                  run.best_so_far[t]});
  }
  csv::Writer aggregate_writer(out_dir / "aggregate.csv",
                               {"episode", "mean", "stderr"});
  for (int t = 0; t < cfg.episodes; ++t)
    aggregate_writer.row({static_cast<double>(t + 1), result.curve.mean[t],
                          result.curve.standard_error[t]});
  aggregate_writer.close();

  svg::Series series;
  series.label = config_label(cfg);
  series.y = result.curve.mean;
  series.band = result.curve.standard_error;
  series.x.resize(cfg.episodes);
  for (int t = 0; t < cfg.episodes; ++t) series.x[t] = t + 1;
  svg::write_line_chart(out_dir / "curve.svg",
                        "Learning curve (" + series.label + ")", "episode",
                        "mean best-so-far reward", {series});
  return result;
}

struct SurfaceResult {
  double trained_best{};
  std::vector<std::pair<double, double>> rows;  // (offset, reward)
};

/// Trains once, then sweeps one weight of the best genome over offsets and
/// re-scores it. Default probe: index 49, the 50th weight (last basis weight
/// of the first dimension).
inline SurfaceResult reward_surface_projection(
    const config::ExperimentConfig& cfg, const std::vector<double>& offsets,
    Eigen::Index probe_index = 49) {
  const ExperimentSetup setup = assemble(cfg);
  if (probe_index < 0 || probe_index >= setup.genome_size)
    throw config::ConfigError("surface: probe index outside the genome");

  const cmaes::OptimizeResult trained = cmaes::optimize(
      setup.objective, Eigen::VectorXd::Zero(setup.genome_size), cfg.sigma,
      cfg.episodes, cfg.base_seed);

  SurfaceResult result;
  result.trained_best = trained.best_fitness;
  csv::Writer writer(std::filesystem::path(cfg.output_dir) / "surface.csv",
                     {"offset", "reward"});
  for (const double offset : offsets) {
    Eigen::VectorXd genome = trained.best_genome;
    genome[probe_index] += offset;
    const double reward = setup.objective(genome);
    result.rows.emplace_back(offset, reward);
    writer.row({offset, reward});
  }
  return result;
}

struct WeightMapResult {
  std::vector<Eigen::VectorXd> genomes;
  std::vector<double> rewards;
};

/// Scores `samples` genomes from the initial search distribution
/// N(0, sigma^2 I). Row 0 is always the zero genome (the distribution mean).
inline WeightMapResult weight_reward_map(const config::ExperimentConfig& cfg,
                                         int samples, unsigned int seed) {
  if (samples < 1)
    throw config::ConfigError("wmap: samples must be >= 1");
  const ExperimentSetup setup = assemble(cfg);

  WeightMapResult result;
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd genome = Eigen::VectorXd::Zero(setup.genome_size);
    if (s > 0)
      for (Eigen::Index i = 0; i < setup.genome_size; ++i)
        genome[i] = cfg.sigma * normal(rng);
    result.rewards.push_back(setup.objective(genome));
    result.genomes.push_back(std::move(genome));
  }

  std::vector<std::string> columns;
  for (Eigen::Index i = 0; i < setup.genome_size; ++i)
    columns.push_back("w" + std::to_string(i));
  columns.push_back("reward");
  csv::Writer writer(std::filesystem::path(cfg.output_dir) / "wmap.csv",
                     columns);
  for (int s = 0; s < samples; ++s) {
    std::vector<double> row(result.genomes[s].data(),
                            result.genomes[s].data() + setup.genome_size);
    row.push_back(result.rewards[s]);
    writer.row(row);
  }
  return result;
}

}  // namespace skillref::harness
