#include <skillref/cmaes.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

using namespace skillref::cmaes;

namespace {

double sphere(const Eigen::VectorXd& x) { return -x.squaredNorm(); }

double rosenbrock(const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) +
         std::pow(1.0 - x[i], 2);
  return -s;
}

bool states_equal(const CmaesState& a, const CmaesState& b) {
  return a.mean() == b.mean() && a.sigma() == b.sigma() &&
         a.covariance() == b.covariance() && a.p_sigma() == b.p_sigma() &&
         a.p_c() == b.p_c() && a.generation() == b.generation();
}

}  // namespace

TEST_CASE("strategy constants follow the published default formulas") {
  for (const int d : {1, 2, 10, 300, 350}) {
    const StrategyConstants k = StrategyConstants::defaults(d);
    CHECK(k.lambda == 4 + static_cast<int>(std::floor(3.0 * std::log(d))));
    CHECK(k.mu == k.lambda / 2);
    REQUIRE(k.weights.size() == k.mu);
    CHECK(k.weights.sum() == Catch::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < k.mu; ++i) {
      CHECK(k.weights[i] > 0.0);
      if (i > 0) CHECK(k.weights[i] <= k.weights[i - 1]);
    }
    CHECK(k.mu_eff == Catch::Approx(1.0 / k.weights.squaredNorm()));
    CHECK(k.c_1 > 0.0);
    CHECK(k.c_mu > 0.0);
    CHECK(k.c_1 + k.c_mu < 1.0);
  }
  CHECK(StrategyConstants::defaults(10).lambda == 10);
  CHECK(StrategyConstants::defaults(350).lambda == 21);
  CHECK_THROWS_AS(StrategyConstants::defaults(0), std::invalid_argument);
}

TEST_CASE("degenerate step size keeps every sample at the mean") {
  Eigen::VectorXd mean(4);
  mean << 1.0, -2.0, 0.5, 3.0;
  const CmaesState state(mean, 0.0);
  CHECK(state.sigma() == CmaesState::kSigmaFloor);
  std::mt19937 rng(42);
  for (const auto& candidate : state.ask(rng))
    CHECK((candidate - mean).cwiseAbs().maxCoeff() < 1e-18);
}

TEST_CASE("fixed seeds reproduce candidates and state trajectories") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(6);
  CmaesState a(x0, 0.4);
  CmaesState b(x0, 0.4);
  std::mt19937 rng_a(7);
  std::mt19937 rng_b(7);
  for (int gen = 0; gen < 10; ++gen) {
    const auto ca = a.ask(rng_a);
    const auto cb = b.ask(rng_b);
    REQUIRE(ca.size() == cb.size());
    for (size_t i = 0; i < ca.size(); ++i) CHECK(ca[i] == cb[i]);
    std::vector<double> fa, fb;
    for (const auto& c : ca) fa.push_back(sphere(c));
    for (const auto& c : cb) fb.push_back(sphere(c));
    a.tell(ca, fa);
    b.tell(cb, fb);
    CHECK(states_equal(a, b));
  }
  CHECK(a.generation() == 10);

  // a different seed must diverge
  CmaesState c(x0, 0.4);
  std::mt19937 rng_c(8);
  const auto cc = c.ask(rng_c);
  std::mt19937 rng_a2(7);
  const auto ca2 = CmaesState(x0, 0.4).ask(rng_a2);
  CHECK(cc[0] != ca2[0]);
}

TEST_CASE("equal fitnesses recombine the first mu candidates by index") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  CmaesState state(x0, 0.7);
  std::mt19937 rng(5);
  const auto candidates = state.ask(rng);
  const StrategyConstants k = state.constants();
  REQUIRE(k.lambda == 6);
  REQUIRE(k.mu == 3);

  Eigen::VectorXd expected = x0;
  for (int i = 0; i < k.mu; ++i)
    expected += k.weights[i] * (candidates[i] - x0);

  state.tell(candidates, std::vector<double>(k.lambda, 1.25));
  CHECK((state.mean() - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(state.sigma() > 0.0);
  CHECK(state.generation() == 1);
}

TEST_CASE("sphere reference run reaches 1e-10 well within budget") {
  std::vector<double> bests;
  for (unsigned int seed = 1; seed <= 20; ++seed) {
    const OptimizeResult r =
        optimize(sphere, Eigen::VectorXd::Ones(10), 0.5, 5000, seed);
    bests.push_back(r.best_fitness);
  }
  std::sort(bests.begin(), bests.end());
  const double median = 0.5 * (bests[9] + bests[10]);
  CHECK(median > -1e-10);
}

TEST_CASE("rosenbrock reference run reaches 1e-6") {
  for (unsigned int seed = 1; seed <= 3; ++seed) {
    const OptimizeResult r =
        optimize(rosenbrock, Eigen::VectorXd::Zero(5), 0.3, 30000, seed);
    CHECK(r.best_fitness > -1e-6);
  }
}

TEST_CASE("one-dimensional quadratic converges for every seed") {
  for (unsigned int seed = 1; seed <= 10; ++seed) {
    const OptimizeResult r = optimize(
        [](const Eigen::VectorXd& x) { return -x[0] * x[0]; },
        Eigen::VectorXd::Ones(1), 0.5, 2000, seed);
    CHECK(std::abs(r.best_genome[0]) < 1e-5);
  }
}

TEST_CASE("adding a constant to all fitnesses leaves the states unchanged") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(4, 0.8);
  CmaesState a(x0, 0.3);
  CmaesState b(x0, 0.3);
  std::mt19937 rng_a(11);
  std::mt19937 rng_b(11);
  for (int gen = 0; gen < 20; ++gen) {
    const auto ca = a.ask(rng_a);
    const auto cb = b.ask(rng_b);
    std::vector<double> fa, fb;
    for (const auto& c : ca) fa.push_back(sphere(c));
    for (const auto& c : cb) fb.push_back(sphere(c) + 1000.0);
    a.tell(ca, fa);
    b.tell(cb, fb);
    REQUIRE(states_equal(a, b));
  }
}

TEST_CASE("monotone fitness transforms leave the states unchanged") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(3, -0.5);
  CmaesState a(x0, 0.6);
  CmaesState b(x0, 0.6);
  CmaesState c(x0, 0.6);
  std::mt19937 rng_a(23);
  std::mt19937 rng_b(23);
  std::mt19937 rng_c(23);
  for (int gen = 0; gen < 20; ++gen) {
    const auto ca = a.ask(rng_a);
    const auto cb = b.ask(rng_b);
    const auto cc = c.ask(rng_c);
    std::vector<double> fa, fb, fc;
    for (const auto& x : ca) fa.push_back(sphere(x));
    for (const auto& x : cb) {
      const double f = sphere(x);
      fb.push_back(f * f * f);  // strictly increasing odd power
    }
    for (const auto& x : cc) fc.push_back(0.5 * sphere(x) + 10.0);
    a.tell(ca, fa);
    b.tell(cb, fb);
    c.tell(cc, fc);
    REQUIRE(states_equal(a, b));
    REQUIRE(states_equal(a, c));
  }
}

TEST_CASE("covariance stays symmetric positive-definite under noise") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
  CmaesState state(x0, 0.5);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (int gen = 0; gen < 300; ++gen) {
    const auto candidates = state.ask(rng);
    std::vector<double> fitnesses;
    for (const auto& c : candidates) {
      (void)c;
      fitnesses.push_back(noise(rng));
    }
    state.tell(candidates, fitnesses);
    REQUIRE(state.covariance() == state.covariance().transpose());
    REQUIRE(state.eigenvalues().minCoeff() >= CmaesState::kEigenvalueFloor);
    REQUIRE(state.sigma() > 0.0);
    REQUIRE(std::isfinite(state.condition_number()));
  }
}

TEST_CASE("non-finite fitnesses rank worst and record a warning") {
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  CmaesState with_nan(x0, 0.5);
  CmaesState with_low(x0, 0.5);
  std::mt19937 rng_a(3);
  std::mt19937 rng_b(3);
  const auto ca = with_nan.ask(rng_a);
  const auto cb = with_low.ask(rng_b);

  std::vector<double> fa{0.5, std::nan(""), 0.2, 0.1, 0.3, 0.4};
  std::vector<double> fb{0.5, -1e300, 0.2, 0.1, 0.3, 0.4};
  with_nan.tell(ca, fa);
  with_low.tell(cb, fb);

  // ranking only: the NaN candidate behaves exactly like a very bad one
  CHECK(states_equal(with_nan, with_low));
  CHECK(with_nan.warnings().size() == 1);
  CHECK(with_low.warnings().empty());
}

TEST_CASE("objective exceptions become worst-ranked evaluations") {
  int calls = 0;
  const OptimizeResult r = optimize(
      [&calls](const Eigen::VectorXd& x) {
        if (++calls % 7 == 3) throw std::runtime_error("sensor dropout");
        return -x.squaredNorm();
      },
      Eigen::VectorXd::Ones(3), 0.4, 500, 99);
  // calls 3, 10, ..., 500 throw; call 500 lands in the trailing partial
  // generation (lambda = 7, 71 full generations), which is never told
  CHECK(r.exception_count == 72);
  CHECK(r.warning_count == 71);
  CHECK(std::isfinite(r.best_fitness));
  CHECK(r.history.size() == 500);
  for (size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i] >= r.history[i - 1]);
}

TEST_CASE("a budget below one generation still returns the partial best") {
  // d=3 gives lambda = 7; evaluate only 4 candidates
  const OptimizeResult r =
      optimize(sphere, Eigen::VectorXd::Ones(3), 0.3, 4, 5);
  CHECK(r.history.size() == 4);
  CHECK(r.best_fitness == r.history.back());
  CHECK(std::isfinite(r.best_fitness));
}

TEST_CASE("history is the running maximum and ends at the best fitness") {
  const OptimizeResult r =
      optimize(sphere, Eigen::VectorXd::Ones(4), 0.5, 200, 21);
  REQUIRE(r.history.size() == 200);
  for (size_t i = 1; i < r.history.size(); ++i)
    CHECK(r.history[i] >= r.history[i - 1]);
  CHECK(r.best_fitness == r.history.back());
  CHECK(sphere(r.best_genome) == r.best_fitness);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(CmaesState(Eigen::VectorXd::Ones(3), -0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(CmaesState(Eigen::VectorXd(), 0.5), std::invalid_argument);

  CmaesState state(Eigen::VectorXd::Zero(2), 0.5);
  std::mt19937 rng(1);
  auto candidates = state.ask(rng);
  CHECK_THROWS_AS(state.tell(candidates, std::vector<double>(3, 0.0)),
                  std::invalid_argument);
  candidates.pop_back();
  CHECK_THROWS_AS(
      state.tell(candidates, std::vector<double>(candidates.size(), 0.0)),
      std::invalid_argument);

  CHECK_THROWS_AS(optimize(sphere, Eigen::VectorXd::Ones(2), 0.5, 0, 1),
                  std::invalid_argument);
}
