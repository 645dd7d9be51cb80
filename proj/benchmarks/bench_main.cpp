#include <benchmark/benchmark.h>

#include <random>

#include "survcause/effects.hpp"
#include "survcause/survival.hpp"

using namespace survcause;

namespace {

struct BenchData {
  Eigen::MatrixXd x;
  std::vector<double> times;
  std::vector<int> events;
  std::vector<SurvivalSample> samples;
};

BenchData make_data(int n, int p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BenchData d;
  d.x.resize(n, p);
  for (int i = 0; i < n; ++i) {
    double eta = 0.0;
    for (int j = 0; j < p; ++j) {
      d.x(i, j) = gauss(rng);
      eta += 0.2 * d.x(i, j);
    }
    const double rate = 0.05 * std::exp(eta);
    const double t = std::ceil(-std::log(1.0 - unif(rng)) / rate);
    const double c = std::ceil(-std::log(1.0 - unif(rng)) / 0.0125);
    d.times.push_back(std::min(std::min(t, c), 96.0));
    d.events.push_back(t <= c ? 1 : 0);
    d.samples.push_back({d.times.back(), d.events.back() != 0});
  }
  return d;
}

void BM_KaplanMeier(benchmark::State& state) {
  const auto d = make_data(static_cast<int>(state.range(0)), 1, 42);
  for (auto _ : state) benchmark::DoNotOptimize(km_fit(d.samples));
}
BENCHMARK(BM_KaplanMeier)->Arg(1000)->Arg(8000);

void BM_CoxFit(benchmark::State& state) {
  const auto d = make_data(static_cast<int>(state.range(0)), 8, 42);
  for (auto _ : state)
    benchmark::DoNotOptimize(coxph_fit(d.x, d.times, d.events, 0.1));
}
BENCHMARK(BM_CoxFit)->Arg(500)->Arg(4000);

void BM_CoxLoglik(benchmark::State& state) {
  const auto d = make_data(static_cast<int>(state.range(0)), 8, 42);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(8, 0.1);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        cox_partial_loglik_and_gradient(d.x, d.times, d.events, beta, 0.1));
}
BENCHMARK(BM_CoxLoglik)->Arg(4000);

void BM_RsfFit(benchmark::State& state) {
  const auto d = make_data(500, 8, 42);
  RsfHyperparams params;
  params.n_trees = static_cast<int>(state.range(0));
  params.min_samples_split = 10;
  params.min_samples_leaf = 5;
  params.seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(rsf_fit(d.x, d.times, d.events, params));
}
BENCHMARK(BM_RsfFit)->Arg(25)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_RsfPredict(benchmark::State& state) {
  const auto d = make_data(500, 8, 42);
  RsfHyperparams params;
  params.n_trees = 100;
  params.seed = 1;
  const auto model = rsf_fit(d.x, d.times, d.events, params);
  const std::vector<double> z(8, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(model->predict_curve(z));
}
BENCHMARK(BM_RsfPredict);

void BM_MatchingNeighbors(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SnapshotCohort cohort;
  cohort.tau = 3;
  cohort.schema.names = {"age", "risk_mortality", "treatment"};
  cohort.schema.kinds = {FeatureKind::static_continuous, FeatureKind::risk_score,
                         FeatureKind::treatment};
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    CohortRow row;
    row.subject_id = std::to_string(i);
    row.treatment = i % 2;
    row.residual_time = 1.0 + i % 20;
    row.event_flag = i % 3 != 0;
    row.stratum = "all";
    row.subgroup_labels = {{"formulation", "injectable"}, {"drug_name", "drug_a"}};
    row.features = {gauss(rng), 0.5 + 0.1 * gauss(rng), static_cast<double>(i % 2)};
    cohort.rows.push_back(std::move(row));
  }
  for (auto _ : state) benchmark::DoNotOptimize(matching_neighbor_sets(cohort, 5));
}
BENCHMARK(BM_MatchingNeighbors)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
