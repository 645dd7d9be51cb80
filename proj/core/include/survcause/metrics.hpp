#pragma once

#include <span>
#include <utility>
#include <vector>

#include "survcause/survival.hpp"
#include "survcause/types.hpp"

namespace survcause {

// Antolini time-dependent concordance. Comparable pairs are (i, j) with
// events[i] == 1 and times[i] < times[j]; concordant when S_i(T_i) < S_j(T_i),
// predicted-survival ties credited 0.5. Throws when no pair is comparable.
double concordance_td(std::span<const SurvivalCurve> curves, std::span<const double> times,
                      std::span<const int> events);

// IPCW Brier score BS(t) at each grid point: events before t weigh 1/G(T_i-),
// at-risk subjects weigh 1/G(t), censored-before-t subjects contribute zero.
// censor_curve must come from censoring_km_fit on the same evaluation set.
std::vector<double> brier_curve(std::span<const SurvivalCurve> curves,
                                std::span<const double> times, std::span<const int> events,
                                std::span<const double> grid, const SurvivalCurve& censor_curve);

// Trapezoidal integral of BS over the grid, normalized by the grid span.
double integrated_brier(std::span<const double> bs_series, std::span<const double> grid);

struct AucTdResult {
  std::vector<double> grid; // retained evaluation times
  std::vector<double> series;
  double mean = 0.0;
};

// Uno-style IPCW time-dependent AUC with 0.5 tie credit; grid points without
// at least one case and one control are dropped.
AucTdResult auc_td(std::span<const SurvivalCurve> curves, std::span<const double> times,
                   std::span<const int> events, std::span<const double> grid);

struct RocResult {
  double auc = 0.0;
  std::vector<std::pair<double, double>> points; // (fpr, tpr) per threshold
};

// Mann-Whitney AUC with 0.5 tie credit plus the ROC polyline.
RocResult roc_auc_binary(std::span<const double> scores, std::span<const int> labels);

// Distinct observed event times, truncated where the censoring curve reaches 0.
std::vector<double> default_eval_grid(std::span<const double> times, std::span<const int> events);

struct MetricReport {
  double c_td = 0.0;
  double ibs = 0.0;
  double auc_td_mean = 0.0;
  std::vector<double> eval_grid;
  std::vector<double> auc_grid;
  std::vector<double> auc_series;
};

MetricReport evaluate_survival_predictions(std::span<const SurvivalCurve> curves,
                                           std::span<const double> times,
                                           std::span<const int> events);

} // namespace survcause
