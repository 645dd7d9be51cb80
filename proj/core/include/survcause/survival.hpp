#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "survcause/types.hpp"

namespace survcause {

struct SurvivalSample {
  double time = 0.0; // months, >= 1
  bool event = false;
};

// Product-limit estimator over the distinct event times; flat after the last
// observed time. Throws on empty input or times < 1.
SurvivalCurve km_fit(std::span<const SurvivalSample> samples);

// Kaplan-Meier of the censoring distribution G: event flags complemented so
// censoring is the event. Used for IPCW weights.
SurvivalCurve censoring_km_fit(std::span<const SurvivalSample> samples);

// Fitted estimator exposing per-subject survival-curve prediction. Immutable
// once fitted; concurrent prediction is safe.
class SurvivalModel {
 public:
  virtual ~SurvivalModel() = default;
  virtual const FeatureSchema& schema() const = 0;
  virtual std::string kind() const = 0;
  // Prediction on a vector laid out per schema(). The KM kind ignores z.
  virtual SurvivalCurve predict_curve(std::span<const double> z) const = 0;
};

// Schema-checked prediction; errors name the missing/extra features.
SurvivalCurve predict_survival(const SurvivalModel& model, std::span<const double> z);

class KaplanMeierModel final : public SurvivalModel {
 public:
  explicit KaplanMeierModel(SurvivalCurve curve) : curve_(std::move(curve)) {}
  const FeatureSchema& schema() const override { return schema_; }
  std::string kind() const override { return "kaplan_meier"; }
  SurvivalCurve predict_curve(std::span<const double>) const override { return curve_; }
  const SurvivalCurve& curve() const { return curve_; }

 private:
  SurvivalCurve curve_;
  FeatureSchema schema_; // empty: the population curve uses no features
};

std::unique_ptr<KaplanMeierModel> km_fit_model(std::span<const SurvivalSample> samples);

struct CoxFitReport {
  Eigen::VectorXd beta;
  double partial_loglik = 0.0; // penalized, at the returned beta
  int iterations = 0;
  bool converged = false;
  double penalizer = 0.0;
  std::vector<double> loglik_path; // value after each Newton step
  std::string diagnostic;          // non-empty when converged == false
};

// Breslow-tie partial log-likelihood minus (penalizer/2)*|beta|^2, with its
// gradient. Rows of features pair with times/events elementwise.
std::pair<double, Eigen::VectorXd> cox_partial_loglik_and_gradient(
    const Eigen::MatrixXd& features, std::span<const double> times,
    std::span<const int> events, const Eigen::VectorXd& beta, double penalizer);

class CoxModel final : public SurvivalModel {
 public:
  CoxModel(Eigen::VectorXd beta, std::vector<double> baseline_times,
           std::vector<double> baseline_cumhaz, FeatureSchema schema);
  const FeatureSchema& schema() const override { return schema_; }
  std::string kind() const override { return "cox_ph"; }
  // S(u|z) = exp(-H0(u) * exp(beta'z)), constant beyond the last event time.
  SurvivalCurve predict_curve(std::span<const double> z) const override;
  const Eigen::VectorXd& beta() const { return beta_; }

 private:
  Eigen::VectorXd beta_;
  std::vector<double> baseline_times_;   // distinct training event times
  std::vector<double> baseline_cumhaz_;  // Breslow H0 at those times
  FeatureSchema schema_;
};

struct CoxFitResult {
  std::unique_ptr<CoxModel> model;
  CoxFitReport report;
};

// Newton with step-halving; max 100 iterations, gradient max-norm < 1e-7.
// Throws on no events, constant columns with penalizer 0, or separation.
CoxFitResult coxph_fit(const Eigen::MatrixXd& features, std::span<const double> times,
                       std::span<const int> events, double penalizer,
                       FeatureSchema schema = {});

struct RsfHyperparams {
  int n_trees = 100;
  int min_samples_split = 10;
  int min_samples_leaf = 5;
  int features_per_split = 0; // 0 picks ceil(sqrt(p))
  bool bootstrap = true;      // off: every tree sees the full sample
  std::uint64_t seed = 0;

  void validate() const; // positive values, min_samples_leaf <= min_samples_split
};

class RsfModel final : public SurvivalModel {
 public:
  struct Node {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    std::vector<double> survival; // leaf only: S at the forest event-time grid
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  RsfModel(std::vector<Tree> trees, std::vector<double> event_grid, FeatureSchema schema,
           RsfHyperparams params);
  const FeatureSchema& schema() const override { return schema_; }
  std::string kind() const override { return "random_survival_forest"; }
  // Average of the per-tree leaf survival curves.
  SurvivalCurve predict_curve(std::span<const double> z) const override;
  const std::vector<Tree>& trees() const { return trees_; }
  const RsfHyperparams& params() const { return params_; }

 private:
  std::vector<Tree> trees_;
  std::vector<double> event_grid_; // distinct training event times
  FeatureSchema schema_;
  RsfHyperparams params_;
};

// Grows the ensemble; splits maximize the standardized two-sample log-rank
// statistic over sampled (feature, midpoint-threshold) candidates; leaves hold
// the product-limit curve of their samples. Throws when no events exist.
std::unique_ptr<RsfModel> rsf_fit(const Eigen::MatrixXd& features,
                                  std::span<const double> times, std::span<const int> events,
                                  const RsfHyperparams& params, FeatureSchema schema = {});

} // namespace survcause
