#pragma once

// Test-only oracles, independent of the library's fitting paths: brute-force
// grid maximizers for the Cox partial likelihood and exhaustive pair counting
// for the rank metrics.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "survcause/survival.hpp"

namespace survcause::testing {

inline double cox_loglik_only(const Eigen::MatrixXd& x, std::span<const double> times,
                              std::span<const int> events, const Eigen::VectorXd& beta,
                              double penalizer) {
  return cox_partial_loglik_and_gradient(x, times, events, beta, penalizer).first;
}

// Two-stage 1-D grid search: coarse pass over [lo, hi], fine pass at 1e-4.
inline double cox_grid_max_1d(const Eigen::MatrixXd& x, std::span<const double> times,
                              std::span<const int> events, double penalizer, double lo = -3.0,
                              double hi = 3.0) {
  auto scan = [&](double a, double b, double step) {
    double best_b = a, best_ll = -1e300;
    for (double v = a; v <= b + 1e-12; v += step) {
      Eigen::VectorXd beta(1);
      beta << v;
      const double ll = cox_loglik_only(x, times, events, beta, penalizer);
      if (ll > best_ll) {
        best_ll = ll;
        best_b = v;
      }
    }
    return best_b;
  };
  const double coarse = scan(lo, hi, 0.01);
  return scan(coarse - 0.02, coarse + 0.02, 1e-4);
}

// Two-stage 2-D grid search, fine pass at 2.5e-4 per coordinate.
inline Eigen::Vector2d cox_grid_max_2d(const Eigen::MatrixXd& x, std::span<const double> times,
                                       std::span<const int> events, double penalizer,
                                       double lo = -2.0, double hi = 2.0) {
  auto scan = [&](Eigen::Vector2d center, double radius, double step) {
    Eigen::Vector2d best = center;
    double best_ll = -1e300;
    for (double a = center[0] - radius; a <= center[0] + radius + 1e-12; a += step)
      for (double b = center[1] - radius; b <= center[1] + radius + 1e-12; b += step) {
        Eigen::VectorXd beta(2);
        beta << a, b;
        const double ll = cox_loglik_only(x, times, events, beta, penalizer);
        if (ll > best_ll) {
          best_ll = ll;
          best = {a, b};
        }
      }
    return best;
  };
  Eigen::Vector2d best = scan({0.5 * (lo + hi), 0.5 * (lo + hi)}, 0.5 * (hi - lo), 0.05);
  best = scan(best, 0.06, 5e-3);
  return scan(best, 0.006, 2.5e-4);
}

// Exhaustive Antolini concordance: every ordered pair that is comparable.
inline double concordance_pairs_oracle(std::span<const SurvivalCurve> curves,
                                       std::span<const double> times,
                                       std::span<const int> events) {
  double pairs = 0.0, agree = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!events[i]) continue;
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (!(times[i] < times[j])) continue;
      pairs += 1.0;
      const double si = curves[i].value_at(times[i]);
      const double sj = curves[j].value_at(times[i]);
      if (si < sj)
        agree += 1.0;
      else if (si == sj)
        agree += 0.5;
    }
  }
  return agree / pairs;
}

// Unweighted Mann-Whitney count with half credit for ties.
inline double mann_whitney_oracle(std::span<const double> scores, std::span<const int> labels) {
  double num = 0.0, n1 = 0.0, n0 = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    n1 += 1.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j])
        num += 1.0;
      else if (scores[i] == scores[j])
        num += 0.5;
    }
  }
  for (int l : labels) n0 += l ? 0.0 : 1.0;
  return num / (n1 * n0);
}

} // namespace survcause::testing
