#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "survcause/survival.hpp"

using namespace survcause;
using namespace survcause::testing;

namespace {

struct CoxData {
  Eigen::MatrixXd x;
  std::vector<double> times;
  std::vector<int> events;
};

// proportional-hazards draw with integer months and optional censoring
CoxData simulate_ph(int n, const Eigen::VectorXd& beta, double baseline, double censor_rate,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  CoxData d;
  d.x.resize(n, beta.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < beta.size(); ++j)
      d.x(i, j) = j == 0 ? (unif(rng) < 0.5 ? 1.0 : 0.0) : unif(rng) * 2.0 - 1.0;
    const double rate = baseline * std::exp(d.x.row(i).dot(beta));
    const double t = -std::log(1.0 - unif(rng)) / rate;
    const double c = censor_rate > 0.0 ? -std::log(1.0 - unif(rng)) / censor_rate : 1e18;
    d.times.push_back(std::ceil(std::min(t, c)));
    d.events.push_back(t <= c ? 1 : 0);
  }
  return d;
}

} // namespace

TEST_CASE("partial log-likelihood matches the hand-worked risk sets at beta = 0") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 0.0;
  const std::vector<double> times = {1.0, 2.0};
  const std::vector<int> events = {1, 1};
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
  const auto [ll, grad] = cox_partial_loglik_and_gradient(x, times, events, beta, 0.0);
  CHECK(ll == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(grad[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero events give zero log-likelihood and gradient") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  const std::vector<double> times = {1.0, 2.0, 3.0};
  const std::vector<int> events = {0, 0, 0};
  Eigen::VectorXd beta(2);
  beta << 0.3, -0.7;
  const auto [ll, grad] = cox_partial_loglik_and_gradient(x, times, events, beta, 0.0);
  CHECK(ll == 0.0);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences") {
  const auto data = simulate_ph(60, (Eigen::VectorXd(3) << 0.5, -0.3, 0.8).finished(), 0.08,
                                0.03, 91);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 0.8);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd beta(3);
    for (int j = 0; j < 3; ++j) beta[j] = gauss(rng);
    const double penalizer = rep % 2 ? 0.1 : 0.0;
    const auto [ll, grad] =
        cox_partial_loglik_and_gradient(data.x, data.times, data.events, beta, penalizer);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(beta[j]));
      Eigen::VectorXd up = beta, down = beta;
      up[j] += h;
      down[j] -= h;
      const double f_up = cox_loglik_only(data.x, data.times, data.events, up, penalizer);
      const double f_down = cox_loglik_only(data.x, data.times, data.events, down, penalizer);
      const double fd = (f_up - f_down) / (2.0 * h);
      CHECK(std::abs(grad[j] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("non-finite features are rejected") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, std::nan("");
  const std::vector<double> times = {1.0, 2.0};
  const std::vector<int> events = {1, 0};
  CHECK_THROWS(cox_partial_loglik_and_gradient(x, times, events, Eigen::VectorXd::Zero(1), 0.0));
}

TEST_CASE("newton fit matches the 1-D grid-search maximizer to 1e-3") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto data = simulate_ph(40, (Eigen::VectorXd(1) << 0.6).finished(), 0.1, 0.05, seed);
    const auto fit = coxph_fit(data.x, data.times, data.events, 0.0);
    REQUIRE(fit.report.converged);
    const double oracle = cox_grid_max_1d(data.x, data.times, data.events, 0.0);
    CHECK(std::abs(fit.report.beta[0] - oracle) <= 1e-3);
  }
}

TEST_CASE("newton fit matches the 2-D grid-search maximizer to 1e-3") {
  const auto data =
      simulate_ph(60, (Eigen::VectorXd(2) << 0.5, -0.4).finished(), 0.1, 0.05, 17);
  const auto fit = coxph_fit(data.x, data.times, data.events, 0.01);
  REQUIRE(fit.report.converged);
  const auto oracle = cox_grid_max_2d(data.x, data.times, data.events, 0.01);
  CHECK(std::abs(fit.report.beta[0] - oracle[0]) <= 1e-3);
  CHECK(std::abs(fit.report.beta[1] - oracle[1]) <= 1e-3);
}

TEST_CASE("hazard-ratio-2 data recovers beta near ln 2") {
  const auto data =
      simulate_ph(4000, (Eigen::VectorXd(1) << std::log(2.0)).finished(), 0.05, 0.0125, 5);
  const auto fit = coxph_fit(data.x, data.times, data.events, 0.0);
  REQUIRE(fit.report.converged);
  CHECK(std::abs(fit.report.beta[0] - std::log(2.0)) <= 0.1);
  // and the solver still agrees with the brute-force maximizer on this fit
  const double oracle = cox_grid_max_1d(data.x, data.times, data.events, 0.0, -1.0, 2.0);
  CHECK(std::abs(fit.report.beta[0] - oracle) <= 1e-3);
}

TEST_CASE("identical treatment groups give a zero coefficient") {
  Eigen::MatrixXd x(6, 1);
  x << 0, 1, 0, 1, 0, 1;
  const std::vector<double> times = {1, 1, 2, 2, 3, 3};
  const std::vector<int> events = {1, 1, 1, 1, 1, 1};
  const auto fit = coxph_fit(x, times, events, 0.0);
  CHECK(std::abs(fit.report.beta[0]) <= 1e-7);
}

TEST_CASE("likelihood is non-decreasing across newton steps") {
  const auto data =
      simulate_ph(80, (Eigen::VectorXd(2) << 1.2, -0.9).finished(), 0.07, 0.02, 29);
  const auto fit = coxph_fit(data.x, data.times, data.events, 0.0);
  const auto& path = fit.report.loglik_path;
  REQUIRE(path.size() >= 2);
  for (std::size_t i = 1; i < path.size(); ++i) CHECK(path[i] >= path[i - 1] - 1e-12);
}

TEST_CASE("null coefficients predict the baseline survival for every z") {
  Eigen::MatrixXd x(6, 1);
  x << 0, 1, 0, 1, 0, 1;
  const std::vector<double> times = {1, 1, 2, 2, 3, 3};
  const std::vector<int> events = {1, 1, 1, 1, 1, 1};
  const auto fit = coxph_fit(x, times, events, 0.0); // beta is 0 by symmetry
  const std::vector<double> z0 = {0.0};
  const std::vector<double> z9 = {9.0};
  const auto s0 = predict_survival(*fit.model, z0);
  const auto s9 = predict_survival(*fit.model, z9);
  REQUIRE(s0.grid == s9.grid);
  for (std::size_t i = 0; i < s0.values.size(); ++i)
    CHECK(s9.values[i] == doctest::Approx(s0.values[i]).epsilon(1e-9));
}

TEST_CASE("linear predictor ln 2 squares the baseline curve") {
  const auto data = simulate_ph(50, (Eigen::VectorXd(1) << 0.8).finished(), 0.1, 0.05, 3);
  const auto fit = coxph_fit(data.x, data.times, data.events, 0.01);
  const double beta = fit.report.beta[0];
  REQUIRE(std::abs(beta) > 0.05);
  const std::vector<double> z0 = {0.0};
  const std::vector<double> zln2 = {std::log(2.0) / beta};
  const auto s0 = predict_survival(*fit.model, z0);
  const auto s2 = predict_survival(*fit.model, zln2);
  for (std::size_t i = 0; i < s0.values.size(); ++i)
    CHECK(s2.values[i] == doctest::Approx(s0.values[i] * s0.values[i]).epsilon(1e-12));
}

TEST_CASE("separation without a penalizer is reported as an error that names the fix") {
  // one binary covariate perfectly ordering the event times
  Eigen::MatrixXd x(8, 1);
  std::vector<double> times;
  std::vector<int> events;
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = i < 4 ? 1.0 : 0.0;
    times.push_back(i < 4 ? i + 1.0 : i + 10.0);
    events.push_back(1);
  }
  bool thrown = false;
  try {
    coxph_fit(x, times, events, 0.0);
  } catch (const std::runtime_error& e) {
    thrown = true;
    CHECK(std::string(e.what()).find("penalizer") != std::string::npos);
  }
  CHECK(thrown);
  const auto ridged = coxph_fit(x, times, events, 0.1);
  CHECK(ridged.report.converged);
}

TEST_CASE("constant columns need a ridge penalty") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 1, 0, 1, 1, 1, 0, 1;
  const std::vector<double> times = {1, 2, 3, 4};
  const std::vector<int> events = {1, 1, 0, 1};
  CHECK_THROWS_AS(coxph_fit(x, times, events, 0.0), std::invalid_argument);
  const auto fit = coxph_fit(x, times, events, 0.5);
  CHECK(std::abs(fit.report.beta[1]) <= 1e-6); // constant column shrinks to zero
}

TEST_CASE("cox fit requires at least one event") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const std::vector<double> times = {1.0, 2.0};
  const std::vector<int> events = {0, 0};
  CHECK_THROWS_AS(coxph_fit(x, times, events, 0.0), std::invalid_argument);
}
