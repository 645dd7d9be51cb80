#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "survcause/metrics.hpp"

using namespace survcause;
using namespace survcause::testing;

namespace {

// step curve dropping from 1 to the given value at t = 1
SurvivalCurve level_curve(double value_after_1) {
  return SurvivalCurve{{0.0, 1.0}, {1.0, value_after_1}};
}

// oracle predictions: S_i(t) = 1{T_i > t} as a unit step at T_i
SurvivalCurve oracle_curve(double t) { return SurvivalCurve{{0.0, t}, {1.0, 0.0}}; }

struct EvalSet {
  std::vector<SurvivalCurve> curves;
  std::vector<double> times;
  std::vector<int> events;
};

EvalSet random_eval_set(std::mt19937_64& rng, int n, double censor_prob) {
  std::uniform_int_distribution<int> t(1, 12);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  EvalSet s;
  for (int i = 0; i < n; ++i) {
    s.times.push_back(t(rng));
    s.events.push_back(i == 0 ? 1 : (unif(rng) < censor_prob ? 0 : 1));
    SurvivalCurve c{{0.0}, {1.0}};
    double v = 1.0;
    for (int u = 1; u <= 12; ++u) {
      v *= 0.5 + 0.5 * unif(rng);
      c.grid.push_back(u);
      c.values.push_back(v);
    }
    s.curves.push_back(std::move(c));
  }
  return s;
}

} // namespace

TEST_CASE("perfectly ordered predictions reach concordance 1") {
  // earlier events get uniformly lower survival at every time
  std::vector<SurvivalCurve> curves = {level_curve(0.1), level_curve(0.4), level_curve(0.8)};
  const std::vector<double> times = {1, 2, 3};
  const std::vector<int> events = {1, 1, 1};
  CHECK(concordance_td(curves, times, events) == doctest::Approx(1.0));
}

TEST_CASE("identical predictions sit at concordance 0.5") {
  std::vector<SurvivalCurve> curves(4, level_curve(0.5));
  const std::vector<double> times = {1, 2, 3, 4};
  const std::vector<int> events = {1, 1, 1, 0};
  CHECK(concordance_td(curves, times, events) == doctest::Approx(0.5));
}

TEST_CASE("three-subject hand case with one discordant pair") {
  // comparable pairs: (1,2) and (1,3); curve 3 is ranked wrong
  std::vector<SurvivalCurve> curves = {level_curve(0.2), level_curve(0.8), level_curve(0.1)};
  const std::vector<double> times = {1, 2, 2};
  const std::vector<int> events = {1, 0, 0};
  CHECK(concordance_td(curves, times, events) == doctest::Approx(0.5));
}

TEST_CASE("concordance needs at least one comparable pair") {
  std::vector<SurvivalCurve> curves = {level_curve(0.2), level_curve(0.8)};
  const std::vector<double> times = {5, 5};
  const std::vector<int> events = {1, 1};
  CHECK_THROWS_AS(concordance_td(curves, times, events), std::invalid_argument);
}

TEST_CASE("concordance matches the exhaustive pair oracle on random sets") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 25; ++rep) {
    const auto s = random_eval_set(rng, 5 + rep % 45, 0.3);
    CHECK(concordance_td(s.curves, s.times, s.events) ==
          concordance_pairs_oracle(s.curves, s.times, s.events));
  }
}

TEST_CASE("concordance is invariant under monotone transforms of the curves") {
  std::mt19937_64 rng(32);
  const auto s = random_eval_set(rng, 30, 0.3);
  auto transformed = s.curves;
  for (auto& c : transformed)
    for (auto& v : c.values) v = v * v; // strictly monotone on [0,1]
  CHECK(concordance_td(s.curves, s.times, s.events) ==
        doctest::Approx(concordance_td(transformed, s.times, s.events)).epsilon(1e-12));
}

TEST_CASE("perfect oracle predictions have zero brier score without censoring") {
  std::vector<SurvivalCurve> curves;
  const std::vector<double> times = {1, 3, 5, 7};
  const std::vector<int> events = {1, 1, 1, 1};
  for (double t : times) curves.push_back(oracle_curve(t));
  std::vector<SurvivalSample> samples;
  for (double t : times) samples.push_back({t, true});
  const auto censor = censoring_km_fit(samples);
  const std::vector<double> grid = {1, 2, 3, 4, 5, 6};
  for (double bs : brier_curve(curves, times, events, grid, censor))
    CHECK(bs == doctest::Approx(0.0));
}

TEST_CASE("a constant one-half prediction scores 0.25 everywhere without censoring") {
  std::vector<SurvivalCurve> curves(4, SurvivalCurve{{0.0}, {1.0}});
  for (auto& c : curves) {
    c.grid.push_back(1e-9);
    c.values.push_back(0.5);
  }
  const std::vector<double> times = {1, 3, 5, 7};
  const std::vector<int> events = {1, 1, 1, 1};
  std::vector<SurvivalSample> samples;
  for (double t : times) samples.push_back({t, true});
  const auto censor = censoring_km_fit(samples);
  const std::vector<double> grid = {1, 2, 6};
  for (double bs : brier_curve(curves, times, events, grid, censor))
    CHECK(bs == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("two-subject censored hand case matches the weighted sum") {
  // A: event at 1, B: censored at 2; G drops to 0 at 2 only
  std::vector<SurvivalCurve> curves = {level_curve(0.4), level_curve(0.7)};
  const std::vector<double> times = {1, 2};
  const std::vector<int> events = {1, 0};
  std::vector<SurvivalSample> samples = {{1, true}, {2, false}};
  const auto censor = censoring_km_fit(samples);
  const std::vector<double> grid = {1.0};
  const auto bs = brier_curve(curves, times, events, grid, censor);
  // A contributes S_A(1)^2 / G(1-) = 0.16; B contributes (1 - 0.7)^2 / G(1) = 0.09
  CHECK(bs[0] == doctest::Approx((0.16 + 0.09) / 2.0).epsilon(1e-12));
}

TEST_CASE("exhausted censoring support is an error") {
  // an event lands beyond the censoring curve's support: 1/G(3-) = 1/0
  std::vector<SurvivalCurve> curves = {level_curve(0.4), level_curve(0.7)};
  const std::vector<double> times = {1, 3};
  const std::vector<int> events = {1, 1};
  std::vector<SurvivalSample> samples = {{1, true}, {2, false}};
  const auto censor = censoring_km_fit(samples); // G hits 0 at 2
  const std::vector<double> grid = {3.0};
  CHECK_THROWS_AS(brier_curve(curves, times, events, grid, censor), std::invalid_argument);
}

TEST_CASE("ipcw brier equals the unweighted brier when nothing is censored") {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 10; ++rep) {
    const auto s = random_eval_set(rng, 20, 0.0);
    std::vector<SurvivalSample> samples;
    for (std::size_t i = 0; i < s.times.size(); ++i) samples.push_back({s.times[i], true});
    const auto censor = censoring_km_fit(samples);
    const std::vector<double> grid = {1, 4, 8, 11};
    const auto weighted = brier_curve(s.curves, s.times, s.events, grid, censor);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double plain = 0.0;
      for (std::size_t i = 0; i < s.times.size(); ++i) {
        const double label = s.times[i] > grid[g] ? 1.0 : 0.0;
        const double pred = s.curves[i].value_at(grid[g]);
        plain += (label - pred) * (label - pred);
      }
      plain /= static_cast<double>(s.times.size());
      CHECK(weighted[g] == doctest::Approx(plain).epsilon(1e-12));
    }
  }
}

TEST_CASE("integrated brier handles constants and the trapezoid hand case") {
  const std::vector<double> grid = {0.0, 10.0};
  CHECK(integrated_brier(std::vector<double>{0.0, 0.2}, grid) ==
        doctest::Approx(0.1).epsilon(1e-12));
  const std::vector<double> grid3 = {2.0, 5.0, 9.0};
  CHECK(integrated_brier(std::vector<double>{0.25, 0.25, 0.25}, grid3) ==
        doctest::Approx(0.25).epsilon(1e-12));
  CHECK(integrated_brier(std::vector<double>{0.0, 0.0}, grid) == doctest::Approx(0.0));
  CHECK_THROWS_AS(integrated_brier(std::vector<double>{0.1}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("perfect oracle predictions reach auc 1 at every usable time") {
  std::vector<SurvivalCurve> curves;
  const std::vector<double> times = {1, 3, 5, 7};
  const std::vector<int> events = {1, 1, 1, 1};
  for (double t : times) curves.push_back(oracle_curve(t));
  const std::vector<double> grid = {1, 3, 5};
  const auto result = auc_td(curves, times, events, grid);
  for (double a : result.series) CHECK(a == doctest::Approx(1.0));
}

TEST_CASE("identical predictions give auc 0.5") {
  std::vector<SurvivalCurve> curves(5, level_curve(0.5));
  const std::vector<double> times = {1, 2, 3, 4, 5};
  const std::vector<int> events = {1, 1, 1, 1, 0};
  const std::vector<double> grid = {1, 2, 3};
  const auto result = auc_td(curves, times, events, grid);
  for (double a : result.series) CHECK(a == doctest::Approx(0.5));
}

TEST_CASE("auc_td matches brute-force enumeration on a four-subject hand case") {
  std::vector<SurvivalCurve> curves = {level_curve(0.2), level_curve(0.6), level_curve(0.3),
                                       level_curve(0.9)};
  const std::vector<double> times = {1, 2, 3, 4};
  const std::vector<int> events = {1, 1, 1, 1};
  const std::vector<double> grid = {2.0};
  const auto result = auc_td(curves, times, events, grid);
  // cases at t=2: subjects 1 and 2 (risks 0.8, 0.4); controls: 3 and 4 (0.7, 0.1)
  // pairs: (0.8>0.7), (0.8>0.1), (0.4<0.7 miss), (0.4>0.1) -> 3/4
  CHECK(result.series[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auc_td without censoring at one time equals the binary roc auc") {
  std::mt19937_64 rng(34);
  for (int rep = 0; rep < 10; ++rep) {
    const auto s = random_eval_set(rng, 25, 0.0);
    const double t = 4.0;
    const std::vector<double> grid = {t};
    bool has_case = false, has_control = false;
    for (double u : s.times) (u <= t ? has_case : has_control) = true;
    if (!has_case || !has_control) continue;
    const auto result = auc_td(s.curves, s.times, s.events, grid);
    std::vector<double> risks;
    std::vector<int> labels;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      risks.push_back(1.0 - s.curves[i].value_at(t));
      labels.push_back(s.times[i] <= t ? 1 : 0);
    }
    CHECK(result.series[0] == doctest::Approx(roc_auc_binary(risks, labels).auc).epsilon(1e-12));
  }
}

TEST_CASE("auc_td is invariant under monotone transforms of the curves") {
  std::mt19937_64 rng(37);
  const auto s = random_eval_set(rng, 30, 0.25);
  auto transformed = s.curves;
  for (auto& c : transformed)
    for (auto& v : c.values) v = v * v;
  const auto grid = default_eval_grid(s.times, s.events);
  const auto a = auc_td(s.curves, s.times, s.events, grid);
  const auto b = auc_td(transformed, s.times, s.events, grid);
  REQUIRE(a.series.size() == b.series.size());
  for (std::size_t g = 0; g < a.series.size(); ++g)
    CHECK(a.series[g] == doctest::Approx(b.series[g]).epsilon(1e-12));
}

TEST_CASE("roc auc separates, randomizes, and matches pair counting") {
  // perfectly separated
  const std::vector<double> sep_scores = {0.9, 0.8, 0.2, 0.1};
  const std::vector<int> sep_labels = {1, 1, 0, 0};
  CHECK(roc_auc_binary(sep_scores, sep_labels).auc == doctest::Approx(1.0));

  // labels independent of scores
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 4000; ++i) {
    scores.push_back(unif(rng));
    labels.push_back(unif(rng) < 0.5 ? 1 : 0);
  }
  CHECK(std::abs(roc_auc_binary(scores, labels).auc - 0.5) < 0.05);

  // exact equality with the brute-force pair count on small sets
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> s;
    std::vector<int> l;
    const int n = 5 + rep;
    std::uniform_int_distribution<int> coarse(0, 6); // force score ties
    for (int i = 0; i < n; ++i) {
      s.push_back(coarse(rng) / 6.0);
      l.push_back(i < 2 ? i % 2 : (unif(rng) < 0.5 ? 1 : 0));
    }
    CHECK(roc_auc_binary(s, l).auc == mann_whitney_oracle(s, l));
  }

  CHECK_THROWS_AS(roc_auc_binary(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}),
                  std::invalid_argument);
}

TEST_CASE("roc points trace a valid staircase") {
  const std::vector<double> scores = {0.9, 0.7, 0.7, 0.3, 0.1};
  const std::vector<int> labels = {1, 1, 0, 0, 0};
  const auto result = roc_auc_binary(scores, labels);
  REQUIRE(result.points.size() >= 2);
  CHECK(result.points.front() == std::pair<double, double>{0.0, 0.0});
  CHECK(result.points.back() == std::pair<double, double>{1.0, 1.0});
  for (std::size_t i = 1; i < result.points.size(); ++i) {
    CHECK(result.points[i].first >= result.points[i - 1].first);
    CHECK(result.points[i].second >= result.points[i - 1].second);
  }
}

TEST_CASE("the default evaluation grid keeps distinct event times with censoring support") {
  const std::vector<double> times = {1, 2, 2, 3, 5};
  const std::vector<int> events = {1, 1, 0, 1, 0};
  const auto grid = default_eval_grid(times, events);
  CHECK(grid == std::vector<double>{1, 2, 3});
}

TEST_CASE("the combined metric report is internally consistent") {
  std::mt19937_64 rng(36);
  const auto s = random_eval_set(rng, 40, 0.25);
  const auto report = evaluate_survival_predictions(s.curves, s.times, s.events);
  CHECK(report.c_td >= 0.0);
  CHECK(report.c_td <= 1.0);
  CHECK(report.ibs >= 0.0);
  CHECK(report.auc_td_mean >= 0.0);
  CHECK(report.auc_td_mean <= 1.0);
  CHECK(report.auc_grid.size() == report.auc_series.size());
  CHECK(!report.eval_grid.empty());
}
