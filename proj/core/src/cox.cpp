#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "survcause/survival.hpp"

namespace survcause {

namespace {

constexpr double kGradientTol = 1e-7;
constexpr int kMaxNewtonIterations = 100;
// |beta| beyond this with no ridge indicates monotone likelihood (separation);
// the gradient can shrink below tolerance while beta still diverges, so the
// bound has to sit below that false-convergence region.
constexpr double kSeparationBound = 15.0;

double clamped_exp(double x) { return std::exp(std::clamp(x, -700.0, 700.0)); }

void check_inputs(const Eigen::MatrixXd& x, std::span<const double> times,
                  std::span<const int> events, double penalizer) {
  if (static_cast<std::size_t>(x.rows()) != times.size() || times.size() != events.size())
    throw std::invalid_argument("features/times/events row counts disagree");
  if (penalizer < 0.0) throw std::invalid_argument("penalizer must be >= 0");
  if (!x.allFinite()) throw std::invalid_argument("non-finite feature values");
}

// Indices sorted by time descending, so the risk set grows as we walk.
std::vector<int> order_by_time_desc(std::span<const double> times) {
  std::vector<int> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return times[a] > times[b]; });
  return order;
}

struct CoxDerivatives {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd neg_hessian; // of the penalized log-likelihood
};

CoxDerivatives cox_derivatives(const Eigen::MatrixXd& x, std::span<const double> times,
                               std::span<const int> events, const Eigen::VectorXd& beta,
                               double penalizer, bool want_hessian) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  CoxDerivatives d;
  d.gradient = Eigen::VectorXd::Zero(p);
  if (want_hessian) d.neg_hessian = Eigen::MatrixXd::Zero(p, p);

  Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd risk(n);
  for (Eigen::Index i = 0; i < n; ++i) risk[i] = clamped_exp(eta[i]);

  const auto order = order_by_time_desc(times);
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = want_hessian ? Eigen::MatrixXd::Zero(p, p) : Eigen::MatrixXd();

  std::size_t k = 0;
  while (k < order.size()) {
    const double t = times[order[k]];
    // everyone with this time enters the risk set
    std::size_t tie_begin = k;
    while (k < order.size() && times[order[k]] == t) {
      const int i = order[k];
      s0 += risk[i];
      s1 += risk[i] * x.row(i).transpose();
      if (want_hessian) s2 += risk[i] * (x.row(i).transpose() * x.row(i));
      ++k;
    }
    int deaths = 0;
    for (std::size_t j = tie_begin; j < k; ++j) {
      const int i = order[j];
      if (events[i]) {
        ++deaths;
        d.loglik += eta[i];
        d.gradient += x.row(i).transpose();
      }
    }
    if (deaths > 0) {
      d.loglik -= deaths * std::log(s0);
      d.gradient -= deaths * (s1 / s0);
      if (want_hessian)
        d.neg_hessian += deaths * (s2 / s0 - (s1 / s0) * (s1 / s0).transpose());
    }
  }

  d.loglik -= 0.5 * penalizer * beta.squaredNorm();
  d.gradient -= penalizer * beta;
  if (want_hessian) d.neg_hessian += penalizer * Eigen::MatrixXd::Identity(p, p);
  return d;
}

} // namespace

std::pair<double, Eigen::VectorXd> cox_partial_loglik_and_gradient(
    const Eigen::MatrixXd& features, std::span<const double> times,
    std::span<const int> events, const Eigen::VectorXd& beta, double penalizer) {
  check_inputs(features, times, events, penalizer);
  if (beta.size() != features.cols())
    throw std::invalid_argument("beta length does not match feature count");
  auto d = cox_derivatives(features, times, events, beta, penalizer, false);
  return {d.loglik, std::move(d.gradient)};
}

CoxModel::CoxModel(Eigen::VectorXd beta, std::vector<double> baseline_times,
                   std::vector<double> baseline_cumhaz, FeatureSchema schema)
    : beta_(std::move(beta)),
      baseline_times_(std::move(baseline_times)),
      baseline_cumhaz_(std::move(baseline_cumhaz)),
      schema_(std::move(schema)) {}

SurvivalCurve CoxModel::predict_curve(std::span<const double> z) const {
  double eta = 0.0;
  for (Eigen::Index j = 0; j < beta_.size(); ++j) eta += beta_[j] * z[j];
  const double r = clamped_exp(eta);
  SurvivalCurve curve;
  curve.grid.reserve(baseline_times_.size() + 1);
  curve.values.reserve(baseline_times_.size() + 1);
  curve.grid.push_back(0.0);
  curve.values.push_back(1.0);
  for (std::size_t j = 0; j < baseline_times_.size(); ++j) {
    curve.grid.push_back(baseline_times_[j]);
    curve.values.push_back(clamped_exp(-baseline_cumhaz_[j] * r));
  }
  return curve;
}

CoxFitResult coxph_fit(const Eigen::MatrixXd& features, std::span<const double> times,
                       std::span<const int> events, double penalizer, FeatureSchema schema) {
  check_inputs(features, times, events, penalizer);
  if (features.rows() == 0) throw std::invalid_argument("empty sample");
  const int n_events = std::accumulate(events.begin(), events.end(), 0);
  if (n_events == 0) throw std::invalid_argument("at least one event is required");
  if (!schema.names.empty() &&
      static_cast<Eigen::Index>(schema.size()) != features.cols())
    throw std::invalid_argument("schema length does not match feature count");

  const Eigen::Index p = features.cols();
  if (penalizer == 0.0) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (features.col(j).maxCoeff() == features.col(j).minCoeff())
        throw std::invalid_argument("feature column " + std::to_string(j) +
                                    " is constant; use penalizer > 0");
    }
  }

  CoxFitReport report;
  report.penalizer = penalizer;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto d = cox_derivatives(features, times, events, beta, penalizer, true);
  report.loglik_path.push_back(d.loglik);

  for (int iter = 1; iter <= kMaxNewtonIterations; ++iter) {
    report.iterations = iter;
    if (d.gradient.lpNorm<Eigen::Infinity>() < kGradientTol) {
      report.converged = true;
      report.iterations = iter - 1;
      break;
    }
    Eigen::MatrixXd a = d.neg_hessian;
    a.diagonal().array() += 1e-10; // keep the solve well-posed near flat regions
    Eigen::VectorXd direction = a.ldlt().solve(d.gradient);
    if (!direction.allFinite()) {
      report.diagnostic = "Newton direction not finite";
      break;
    }

    double step = 1.0;
    Eigen::VectorXd candidate;
    CoxDerivatives cand_d;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = beta + step * direction;
      cand_d = cox_derivatives(features, times, events, candidate, penalizer, true);
      if (std::isfinite(cand_d.loglik) && cand_d.loglik >= d.loglik - 1e-12) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      report.diagnostic = "step-halving could not improve the likelihood";
      break;
    }
    beta = candidate;
    d = std::move(cand_d);
    report.loglik_path.push_back(d.loglik);

    if (penalizer == 0.0 && beta.lpNorm<Eigen::Infinity>() > kSeparationBound)
      throw std::runtime_error(
          "monotone partial likelihood (separation): coefficients diverge; "
          "refit with penalizer > 0");
  }
  if (!report.converged && report.diagnostic.empty())
    report.diagnostic = "gradient max-norm above tolerance after " +
                        std::to_string(kMaxNewtonIterations) + " iterations";
  report.beta = beta;
  report.partial_loglik = d.loglik;

  // Breslow baseline cumulative hazard at the distinct event times.
  Eigen::VectorXd risk(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    risk[i] = clamped_exp(features.row(i).dot(beta));
  const auto order = order_by_time_desc(times);
  std::vector<double> event_times;
  std::vector<double> hazard_increments;
  double s0 = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = times[order[k]];
    int deaths = 0;
    while (k < order.size() && times[order[k]] == t) {
      s0 += risk[order[k]];
      if (events[order[k]]) ++deaths;
      ++k;
    }
    if (deaths > 0) {
      event_times.push_back(t);
      hazard_increments.push_back(deaths / s0);
    }
  }
  // walked in descending time order; flip and accumulate
  std::reverse(event_times.begin(), event_times.end());
  std::reverse(hazard_increments.begin(), hazard_increments.end());
  std::vector<double> cumhaz(hazard_increments.size());
  std::partial_sum(hazard_increments.begin(), hazard_increments.end(), cumhaz.begin());

  CoxFitResult result;
  result.report = std::move(report);
  result.model = std::make_unique<CoxModel>(beta, std::move(event_times), std::move(cumhaz),
                                            std::move(schema));
  return result;
}

} // namespace survcause
