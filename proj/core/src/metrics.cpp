#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "survcause/metrics.hpp"

namespace survcause {

namespace {

void check_sizes(std::size_t curves, std::size_t times, std::size_t events) {
  if (curves != times || times != events)
    throw std::invalid_argument("curves/times/events counts disagree");
  if (times == 0) throw std::invalid_argument("empty evaluation set");
}

// G(u-): left limit of the step curve.
double left_limit(const SurvivalCurve& curve, double u) {
  double value = 1.0;
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    if (curve.grid[i] >= u) break;
    value = curve.values[i];
  }
  return value;
}

} // namespace

double concordance_td(std::span<const SurvivalCurve> curves, std::span<const double> times,
                      std::span<const int> events) {
  check_sizes(curves.size(), times.size(), events.size());
  const std::size_t n = times.size();
  double comparable = 0.0, concordant = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!events[i]) continue;
    const double si = curves[i].value_at(times[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (times[j] <= times[i]) continue;
      comparable += 1.0;
      const double sj = curves[j].value_at(times[i]);
      if (si < sj)
        concordant += 1.0;
      else if (si == sj)
        concordant += 0.5;
    }
  }
  if (comparable == 0.0) throw std::invalid_argument("degenerate evaluation set: no comparable pairs");
  return concordant / comparable;
}

std::vector<double> brier_curve(std::span<const SurvivalCurve> curves,
                                std::span<const double> times, std::span<const int> events,
                                std::span<const double> grid, const SurvivalCurve& censor_curve) {
  check_sizes(curves.size(), times.size(), events.size());
  const std::size_t n = times.size();
  std::vector<double> bs(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = curves[i].value_at(t);
      if (times[i] <= t) {
        if (!events[i]) continue; // censored before t
        const double w = left_limit(censor_curve, times[i]);
        if (w <= 0.0)
          throw std::invalid_argument("censoring support exhausted at t=" + std::to_string(t));
        sum += s * s / w;
      } else {
        const double w = censor_curve.value_at(t);
        if (w <= 0.0)
          throw std::invalid_argument("censoring support exhausted at t=" + std::to_string(t));
        sum += (1.0 - s) * (1.0 - s) / w;
      }
    }
    bs[g] = sum / static_cast<double>(n);
  }
  return bs;
}

double integrated_brier(std::span<const double> bs_series, std::span<const double> grid) {
  if (grid.size() != bs_series.size())
    throw std::invalid_argument("grid/series length mismatch");
  if (grid.size() < 2) throw std::invalid_argument("integrated Brier needs >= 2 grid points");
  double integral = 0.0;
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    if (grid[g + 1] <= grid[g]) throw std::invalid_argument("grid must be strictly increasing");
    integral += 0.5 * (bs_series[g] + bs_series[g + 1]) * (grid[g + 1] - grid[g]);
  }
  return integral / (grid.back() - grid.front());
}

AucTdResult auc_td(std::span<const SurvivalCurve> curves, std::span<const double> times,
                   std::span<const int> events, std::span<const double> grid) {
  check_sizes(curves.size(), times.size(), events.size());
  const std::size_t n = times.size();
  // censoring weights from the evaluation set itself
  std::vector<SurvivalSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = {times[i], events[i] != 0};
  const SurvivalCurve censor = censoring_km_fit(samples);

  AucTdResult result;
  std::vector<double> risk(n);
  for (double t : grid) {
    const double g_t = censor.value_at(t);
    std::vector<int> cases, controls;
    for (std::size_t i = 0; i < n; ++i) {
      risk[i] = 1.0 - curves[i].value_at(t);
      if (times[i] <= t && events[i])
        cases.push_back(static_cast<int>(i));
      else if (times[i] > t)
        controls.push_back(static_cast<int>(i));
    }
    if (cases.empty() || controls.empty() || g_t <= 0.0) continue;
    double num = 0.0, den = 0.0;
    bool weights_ok = true;
    for (int i : cases) {
      const double wi = left_limit(censor, times[i]);
      if (wi <= 0.0) { weights_ok = false; break; }
      for (int j : controls) {
        const double w = (1.0 / wi) * (1.0 / g_t);
        den += w;
        if (risk[i] > risk[j])
          num += w;
        else if (risk[i] == risk[j])
          num += 0.5 * w;
      }
    }
    if (!weights_ok || den <= 0.0) continue;
    result.grid.push_back(t);
    result.series.push_back(num / den);
  }
  if (result.grid.empty())
    throw std::invalid_argument("no valid evaluation time for time-dependent AUC");
  result.mean = mean(result.series);
  return result;
}

RocResult roc_auc_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels length mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("both classes must be present");

  RocResult result;
  double num = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j])
        num += 1.0;
      else if (scores[i] == scores[j])
        num += 0.5;
    }
  }
  result.auc = num / (static_cast<double>(n_pos) * static_cast<double>(n_neg));

  // one ROC point per threshold between distinct scores (descending sweep)
  std::map<double, std::pair<int, int>, std::greater<double>> by_score; // -> (pos, neg)
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& c = by_score[scores[i]];
    (labels[i] ? c.first : c.second) += 1;
  }
  result.points.emplace_back(0.0, 0.0);
  double tp = 0.0, fp = 0.0;
  for (const auto& [score, c] : by_score) {
    tp += c.first;
    fp += c.second;
    result.points.emplace_back(fp / static_cast<double>(n_neg), tp / static_cast<double>(n_pos));
  }
  return result;
}

std::vector<double> default_eval_grid(std::span<const double> times, std::span<const int> events) {
  if (times.size() != events.size()) throw std::invalid_argument("times/events length mismatch");
  std::vector<SurvivalSample> samples(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) samples[i] = {times[i], events[i] != 0};
  const SurvivalCurve censor = censoring_km_fit(samples);
  std::vector<double> grid;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (events[i]) grid.push_back(times[i]);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::erase_if(grid, [&](double t) { return censor.value_at(t) <= 0.0; });
  return grid;
}

MetricReport evaluate_survival_predictions(std::span<const SurvivalCurve> curves,
                                           std::span<const double> times,
                                           std::span<const int> events) {
  MetricReport report;
  report.eval_grid = default_eval_grid(times, events);
  report.c_td = concordance_td(curves, times, events);
  std::vector<SurvivalSample> samples(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) samples[i] = {times[i], events[i] != 0};
  const SurvivalCurve censor = censoring_km_fit(samples);
  const auto bs = brier_curve(curves, times, events, report.eval_grid, censor);
  report.ibs = integrated_brier(bs, report.eval_grid);
  const auto auc = auc_td(curves, times, events, report.eval_grid);
  report.auc_grid = auc.grid;
  report.auc_series = auc.series;
  report.auc_td_mean = auc.mean;
  return report;
}

} // namespace survcause
