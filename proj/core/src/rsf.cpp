#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "survcause/survival.hpp"

namespace survcause {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4a68b021e06ebULL;
  return x ^ (x >> 31);
}

struct Sample {
  double time;
  int event;
};

// Standardized two-sample log-rank statistic |O - E| / sqrt(V) for the subset
// flagged in_left, over the node's samples. Returns -1 when the variance
// vanishes (no usable separation).
double logrank_score(const std::vector<Sample>& samples, const std::vector<char>& in_left) {
  const std::size_t n = samples.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return samples[a].time < samples[b].time; });

  double at_risk = static_cast<double>(n);
  double at_risk_left = 0.0;
  for (char l : in_left) at_risk_left += l ? 1.0 : 0.0;

  double observed_minus_expected = 0.0;
  double variance = 0.0;
  std::size_t k = 0;
  while (k < n) {
    const double t = samples[order[k]].time;
    int deaths = 0, deaths_left = 0, leaving = 0, leaving_left = 0;
    while (k < n && samples[order[k]].time == t) {
      const int i = order[k];
      ++leaving;
      leaving_left += in_left[i] ? 1 : 0;
      if (samples[i].event) {
        ++deaths;
        deaths_left += in_left[i] ? 1 : 0;
      }
      ++k;
    }
    if (deaths > 0 && at_risk > 1.0) {
      const double frac_left = at_risk_left / at_risk;
      observed_minus_expected += deaths_left - deaths * frac_left;
      variance += deaths * frac_left * (1.0 - frac_left) * (at_risk - deaths) / (at_risk - 1.0);
    }
    at_risk -= leaving;
    at_risk_left -= leaving_left;
  }
  if (variance <= 0.0) return -1.0;
  return std::abs(observed_minus_expected) / std::sqrt(variance);
}

// Product-limit curve of the node's samples, evaluated at the forest grid.
std::vector<double> leaf_survival(const std::vector<int>& idx, std::span<const double> times,
                                  std::span<const int> events,
                                  const std::vector<double>& grid) {
  std::vector<SurvivalSample> samples;
  samples.reserve(idx.size());
  for (int i : idx) samples.push_back({times[i], events[i] != 0});
  const SurvivalCurve curve = km_fit(samples);
  std::vector<double> values(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) values[g] = curve.value_at(grid[g]);
  return values;
}

struct TreeGrower {
  const Eigen::MatrixXd& x;
  std::span<const double> times;
  std::span<const int> events;
  const std::vector<double>& grid;
  const RsfHyperparams& params;
  int features_per_split;
  std::mt19937_64 rng;
  RsfModel::Tree tree;

  int grow(std::vector<int> idx) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    int n_events = 0;
    for (int i : idx) n_events += events[i];
    const int n = static_cast<int>(idx.size());

    int best_feature = -1;
    double best_threshold = 0.0, best_score = 0.0;
    if (n >= params.min_samples_split && n_events > 0) {
      find_best_split(idx, best_feature, best_threshold, best_score);
    }

    if (best_feature < 0) {
      tree.nodes[node_id].survival = leaf_survival(idx, times, events, grid);
      return node_id;
    }

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
      (x(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();
    const int left = grow(std::move(left_idx));
    const int right = grow(std::move(right_idx));
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    tree.nodes[node_id].left = left;
    tree.nodes[node_id].right = right;
    return node_id;
  }

  void find_best_split(const std::vector<int>& idx, int& best_feature, double& best_threshold,
                       double& best_score) {
    const int p = static_cast<int>(x.cols());
    const int m = std::min(features_per_split, p);

    // partial Fisher-Yates draw of m distinct feature indices, then sorted so
    // the scan order does not depend on the draw order
    std::vector<int> pool(p);
    std::iota(pool.begin(), pool.end(), 0);
    for (int j = 0; j < m; ++j) {
      std::uniform_int_distribution<int> pick(j, p - 1);
      std::swap(pool[j], pool[pick(rng)]);
    }
    std::vector<int> candidates(pool.begin(), pool.begin() + m);
    std::sort(candidates.begin(), candidates.end());

    std::vector<Sample> samples(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      samples[i] = {times[idx[i]], events[idx[i]]};

    std::vector<char> in_left(idx.size());
    for (int f : candidates) {
      std::vector<double> vals;
      vals.reserve(idx.size());
      for (int i : idx) vals.push_back(x(i, f));
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
        const double thr = 0.5 * (vals[v] + vals[v + 1]);
        int n_left = 0;
        for (std::size_t i = 0; i < idx.size(); ++i) {
          in_left[i] = x(idx[i], f) <= thr ? 1 : 0;
          n_left += in_left[i];
        }
        const int n_right = static_cast<int>(idx.size()) - n_left;
        if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf) continue;
        const double score = logrank_score(samples, in_left);
        if (score > best_score) {
          best_score = score;
          best_feature = f;
          best_threshold = thr;
        }
      }
    }
  }
};

} // namespace

void RsfHyperparams::validate() const {
  if (n_trees < 1) throw std::invalid_argument("n_trees must be positive");
  if (min_samples_split < 1) throw std::invalid_argument("min_samples_split must be positive");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be positive");
  if (features_per_split < 0) throw std::invalid_argument("features_per_split must be >= 0");
  if (min_samples_leaf > min_samples_split)
    throw std::invalid_argument("min_samples_leaf must be <= min_samples_split");
}

RsfModel::RsfModel(std::vector<Tree> trees, std::vector<double> event_grid, FeatureSchema schema,
                   RsfHyperparams params)
    : trees_(std::move(trees)),
      event_grid_(std::move(event_grid)),
      schema_(std::move(schema)),
      params_(params) {}

SurvivalCurve RsfModel::predict_curve(std::span<const double> z) const {
  std::vector<double> acc(event_grid_.size(), 0.0);
  for (const auto& tree : trees_) {
    int node = 0;
    while (tree.nodes[node].feature >= 0) {
      const auto& nd = tree.nodes[node];
      node = z[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    const auto& leaf = tree.nodes[node].survival;
    for (std::size_t g = 0; g < acc.size(); ++g) acc[g] += leaf[g];
  }
  SurvivalCurve curve;
  curve.grid.reserve(event_grid_.size() + 1);
  curve.values.reserve(event_grid_.size() + 1);
  curve.grid.push_back(0.0);
  curve.values.push_back(1.0);
  const double b = static_cast<double>(trees_.size());
  for (std::size_t g = 0; g < event_grid_.size(); ++g) {
    curve.grid.push_back(event_grid_[g]);
    curve.values.push_back(acc[g] / b);
  }
  return curve;
}

std::unique_ptr<RsfModel> rsf_fit(const Eigen::MatrixXd& features, std::span<const double> times,
                                  std::span<const int> events, const RsfHyperparams& params,
                                  FeatureSchema schema) {
  params.validate();
  if (static_cast<std::size_t>(features.rows()) != times.size() || times.size() != events.size())
    throw std::invalid_argument("features/times/events row counts disagree");
  if (features.rows() == 0) throw std::invalid_argument("empty sample");
  if (!features.allFinite()) throw std::invalid_argument("non-finite feature values");
  if (std::accumulate(events.begin(), events.end(), 0) == 0)
    throw std::invalid_argument("no events to split on");
  if (!schema.names.empty() &&
      static_cast<Eigen::Index>(schema.size()) != features.cols())
    throw std::invalid_argument("schema length does not match feature count");

  const int n = static_cast<int>(features.rows());
  const int p = static_cast<int>(features.cols());
  const int mtry = params.features_per_split > 0
                       ? params.features_per_split
                       : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));

  std::vector<double> grid;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (events[i]) grid.push_back(times[i]);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<RsfModel::Tree> trees(params.n_trees);
  std::atomic<int> next_tree{0};
  auto worker = [&]() {
    for (;;) {
      const int b = next_tree.fetch_add(1);
      if (b >= params.n_trees) return;
      // per-tree generator: growth is deterministic under any thread schedule
      TreeGrower grower{features, times,
                        events,   grid,
                        params,   mtry,
                        std::mt19937_64(splitmix64(params.seed ^ (0xb5ull + b))),
                        {}};
      std::vector<int> idx(n);
      if (params.bootstrap) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int i = 0; i < n; ++i) idx[i] = pick(grower.rng);
        std::sort(idx.begin(), idx.end());
      } else {
        std::iota(idx.begin(), idx.end(), 0);
      }
      grower.grow(std::move(idx));
      trees[b] = std::move(grower.tree);
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n_workers = std::min<unsigned>(hw, static_cast<unsigned>(params.n_trees));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  return std::make_unique<RsfModel>(std::move(trees), std::move(grid), std::move(schema), params);
}

} // namespace survcause
