#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace skillref::cmaes {

/// Standard strategy constants for dimension d:
///   lambda = 4 + floor(3 ln d)
///   mu     = floor(lambda / 2)
///   w_i    = (ln((lambda+1)/2) - ln(i+1)) / normalizer, i = 0..mu-1
///   mu_eff = 1 / sum_i w_i^2
///   c_sigma = (mu_eff + 2) / (d + mu_eff + 5)
///   d_sigma = 1 + 2 max(0, sqrt((mu_eff - 1)/(d + 1)) - 1) + c_sigma
///   c_c    = (4 + mu_eff/d) / (d + 4 + 2 mu_eff/d)
///   c_1    = 2 / ((d + 1.3)^2 + mu_eff)
///   c_mu   = min(1 - c_1, 2 (mu_eff - 2 + 1/mu_eff) / ((d + 2)^2 + mu_eff))
///   chi_n  = sqrt(d) (1 - 1/(4d) + 1/(21 d^2))
struct StrategyConstants {
  int lambda{};
  int mu{};
  Eigen::VectorXd weights;  // positive, non-increasing, sum to 1
  double mu_eff{};
  double c_sigma{};
  double d_sigma{};
  double c_c{};
  double c_1{};
  double c_mu{};
  double chi_n{};

  static StrategyConstants defaults(Eigen::Index dimension) {
    if (dimension < 1)
      throw std::invalid_argument("StrategyConstants: dimension must be >= 1");
    const double d = static_cast<double>(dimension);
    StrategyConstants k;
    k.lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(d)));
    k.mu = k.lambda / 2;
    k.weights.resize(k.mu);
    for (int i = 0; i < k.mu; ++i)
      k.weights[i] = std::log((k.lambda + 1) / 2.0) - std::log(i + 1.0);
    k.weights /= k.weights.sum();
    k.mu_eff = 1.0 / k.weights.squaredNorm();
    k.c_sigma = (k.mu_eff + 2.0) / (d + k.mu_eff + 5.0);
    k.d_sigma = 1.0 +
                2.0 * std::max(0.0, std::sqrt((k.mu_eff - 1.0) / (d + 1.0)) -
                                        1.0) +
                k.c_sigma;
    k.c_c = (4.0 + k.mu_eff / d) / (d + 4.0 + 2.0 * k.mu_eff / d);
    k.c_1 = 2.0 / ((d + 1.3) * (d + 1.3) + k.mu_eff);
    k.c_mu = std::min(1.0 - k.c_1, 2.0 * (k.mu_eff - 2.0 + 1.0 / k.mu_eff) /
                                       ((d + 2.0) * (d + 2.0) + k.mu_eff));
    k.chi_n = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));
    return k;
  }
};

/// Search-distribution state. Maximization convention: tell ranks higher
/// fitness first. The covariance is kept symmetric positive-definite by
/// symmetrization and eigenvalue flooring after every update.
class CmaesState {
 public:
  static constexpr double kSigmaFloor = 1e-20;
  static constexpr double kEigenvalueFloor = 1e-20;

  CmaesState(Eigen::VectorXd mean, double sigma0)
      : mean_(std::move(mean)),
        constants_(StrategyConstants::defaults(mean_.size())) {
    if (!(sigma0 >= 0.0) || !std::isfinite(sigma0))
      throw std::invalid_argument("CmaesState: sigma0 must be >= 0");
    if (!mean_.allFinite())
      throw std::invalid_argument("CmaesState: mean must be finite");
    sigma_ = std::max(sigma0, kSigmaFloor);
    const Eigen::Index d = mean_.size();
    covariance_ = Eigen::MatrixXd::Identity(d, d);
    p_sigma_ = Eigen::VectorXd::Zero(d);
    p_c_ = Eigen::VectorXd::Zero(d);
    refresh_decomposition();
  }

  Eigen::Index dimension() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  double sigma() const { return sigma_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::VectorXd& p_sigma() const { return p_sigma_; }
  const Eigen::VectorXd& p_c() const { return p_c_; }
  int generation() const { return generation_; }
  const StrategyConstants& constants() const { return constants_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Floored eigenvalues of the covariance used for sampling.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double condition_number() const {
    return eigenvalues_.maxCoeff() / eigenvalues_.minCoeff();
  }

  /// Samples lambda candidates x_i = mean + sigma * B * D * z_i.
  std::vector<Eigen::VectorXd> ask(std::mt19937& rng) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::VectorXd> candidates(constants_.lambda);
    Eigen::VectorXd z(dimension());
    for (auto& candidate : candidates) {
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
      candidate =
          mean_ + sigma_ * (eigenvectors_ * eigenroots_.cwiseProduct(z));
    }
    return candidates;
  }

  /// Rank-based update from one full generation. Non-finite fitnesses are
  /// ranked worst (a warning is recorded); ties break by candidate index.
  void tell(const std::vector<Eigen::VectorXd>& candidates,
            const std::vector<double>& fitnesses) {
    const int lambda = constants_.lambda;
    if (static_cast<int>(candidates.size()) != lambda ||
        static_cast<int>(fitnesses.size()) != lambda)
      throw std::invalid_argument("tell: need exactly lambda candidates");
    for (const auto& c : candidates)
      if (c.size() != dimension())
        throw std::invalid_argument("tell: candidate dimension mismatch");

    std::vector<double> ranked_fitness(fitnesses);
    for (int i = 0; i < lambda; ++i) {
      if (!std::isfinite(ranked_fitness[i])) {
        ranked_fitness[i] = -std::numeric_limits<double>::infinity();
        warnings_.push_back("non-finite fitness for candidate " +
                            std::to_string(i) + " ranked worst");
      }
    }
    std::vector<int> order(lambda);
    for (int i = 0; i < lambda; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return ranked_fitness[a] > ranked_fitness[b];
    });

    const auto& k = constants_;
    const double d = static_cast<double>(dimension());

    std::vector<Eigen::VectorXd> y(k.mu);
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(dimension());
    for (int i = 0; i < k.mu; ++i) {
      y[i] = (candidates[order[i]] - mean_) / sigma_;
      y_w += k.weights[i] * y[i];
    }
    mean_ += sigma_ * y_w;

    // p_sigma update in the isotropic coordinates C^(-1/2) y_w
    const Eigen::VectorXd iso =
        eigenvectors_ *
        (eigenvectors_.transpose() * y_w).cwiseQuotient(eigenroots_);
    p_sigma_ = (1.0 - k.c_sigma) * p_sigma_ +
               std::sqrt(k.c_sigma * (2.0 - k.c_sigma) * k.mu_eff) * iso;

    ++generation_;
    const double ps_norm = p_sigma_.norm();
    const double unbias =
        std::sqrt(1.0 - std::pow(1.0 - k.c_sigma, 2.0 * generation_));
    const bool h_sigma =
        ps_norm / unbias < (1.4 + 2.0 / (d + 1.0)) * k.chi_n;

    p_c_ = (1.0 - k.c_c) * p_c_ +
           (h_sigma ? 1.0 : 0.0) *
               std::sqrt(k.c_c * (2.0 - k.c_c) * k.mu_eff) * y_w;
    const double delta_h = h_sigma ? 0.0 : k.c_c * (2.0 - k.c_c);

    Eigen::MatrixXd rank_mu =
        Eigen::MatrixXd::Zero(dimension(), dimension());
    for (int i = 0; i < k.mu; ++i)
      rank_mu.noalias() += k.weights[i] * (y[i] * y[i].transpose());

    covariance_ = (1.0 - k.c_1 - k.c_mu) * covariance_ +
                  k.c_1 * (p_c_ * p_c_.transpose() + delta_h * covariance_) +
                  k.c_mu * rank_mu;
    covariance_ =
        (0.5 * (covariance_ + covariance_.transpose())).eval();

    const double factor =
        std::exp((k.c_sigma / k.d_sigma) * (ps_norm / k.chi_n - 1.0));
    sigma_ = std::isfinite(sigma_ * factor)
                 ? std::max(sigma_ * factor, kSigmaFloor)
                 : kSigmaFloor;

    refresh_decomposition();
  }

 private:
  void refresh_decomposition() {
    if (!covariance_.allFinite()) {
      warnings_.push_back("covariance became non-finite; reset to identity");
      covariance_ =
          Eigen::MatrixXd::Identity(dimension(), dimension());
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance_);
    if (solver.info() != Eigen::Success) {
      warnings_.push_back("covariance decomposition failed; reset to identity");
      covariance_ =
          Eigen::MatrixXd::Identity(dimension(), dimension());
      solver.compute(covariance_);
    }
    eigenvalues_ = solver.eigenvalues().cwiseMax(kEigenvalueFloor);
    eigenvectors_ = solver.eigenvectors();
    eigenroots_ = eigenvalues_.cwiseSqrt();
  }

  Eigen::VectorXd mean_;
  double sigma_{};
  StrategyConstants constants_;
  Eigen::MatrixXd covariance_;
  Eigen::VectorXd p_sigma_;
  Eigen::VectorXd p_c_;
  int generation_{0};

  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXd eigenroots_;

  std::vector<std::string> warnings_;
};

inline std::vector<Eigen::VectorXd> ask(const CmaesState& state,
                                        std::mt19937& rng) {
  return state.ask(rng);
}

inline void tell(CmaesState& state,
                 const std::vector<Eigen::VectorXd>& candidates,
                 const std::vector<double>& fitnesses) {
  state.tell(candidates, fitnesses);
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimizeResult {
  Eigen::VectorXd best_genome;
  double best_fitness{-std::numeric_limits<double>::infinity()};
  std::vector<double> history;  // running maximum, one entry per evaluation
  int exception_count{0};       // objective calls that threw
  int warning_count{0};         // warnings recorded by the state
};

/// Ask/tell loop until `budget` evaluations are consumed. An objective
/// exception counts as a worst-ranked evaluation; a trailing partial
/// generation is evaluated but not used for an update.
inline OptimizeResult optimize(const Objective& objective,
                               const Eigen::VectorXd& x0, double sigma0,
                               int budget, unsigned int seed) {
  if (budget < 1) throw std::invalid_argument("optimize: budget must be >= 1");
  CmaesState state(x0, sigma0);
  std::mt19937 rng(seed);

  OptimizeResult result;
  result.best_genome = x0;
  result.history.reserve(budget);

  int episodes = 0;
  while (episodes < budget) {
    const std::vector<Eigen::VectorXd> candidates = state.ask(rng);
    const int lambda = state.constants().lambda;
    const int evaluations = std::min(lambda, budget - episodes);

    std::vector<double> fitnesses(lambda,
                                  -std::numeric_limits<double>::infinity());
    for (int i = 0; i < evaluations; ++i) {
      double fitness;
      try {
        fitness = objective(candidates[i]);
      } catch (const std::exception&) {
        fitness = -std::numeric_limits<double>::infinity();
        ++result.exception_count;
      }
      fitnesses[i] = fitness;
      if (std::isfinite(fitness) && fitness > result.best_fitness) {
        result.best_fitness = fitness;
        result.best_genome = candidates[i];
      }
      result.history.push_back(result.best_fitness);
    }

    if (evaluations == lambda) state.tell(candidates, fitnesses);
    episodes += evaluations;
  }
  result.warning_count = static_cast<int>(state.warnings().size());
  return result;
}

}  // namespace skillref::cmaes
