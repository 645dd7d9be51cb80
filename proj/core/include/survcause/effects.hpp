#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survcause/survival.hpp"
#include "survcause/types.hpp"

namespace survcause {

struct HorizonConfig {
  int months = kMaxFollowupMonths;
  void validate() const;
};

// Exact area under the right-continuous step curve on [0, horizon].
double rmet(const SurvivalCurve& curve, double horizon_months);

struct MatchingConfig {
  int k = 5; // nearest opposite-group neighbors; ties resolve to lowest row index
};

// One survival-model configuration, pluggable into every estimator.
struct ModelSpec {
  std::string kind = "cox_ph"; // kaplan_meier | cox_ph | random_survival_forest
  double cox_penalizer = 0.0;
  RsfHyperparams rsf;

  std::string tag() const;
  void validate() const;
};

std::unique_ptr<SurvivalModel> fit_survival_model(const ModelSpec& spec,
                                                  const Eigen::MatrixXd& features,
                                                  std::span<const double> times,
                                                  std::span<const int> events,
                                                  FeatureSchema schema);

// Estimators fit on fit_rows (all rows when empty) and produce one ITE per
// cohort row; ate is always the mean over the full cohort.
EffectEstimate t_learner_ate(const SnapshotCohort& cohort, const ModelSpec& spec,
                             HorizonConfig horizon, std::span<const int> fit_rows = {});
EffectEstimate s_learner_ate(const SnapshotCohort& cohort, const ModelSpec& spec,
                             HorizonConfig horizon, std::span<const int> fit_rows = {});
EffectEstimate matching_ate(const SnapshotCohort& cohort, const ModelSpec& spec,
                            const MatchingConfig& matching, HorizonConfig horizon,
                            std::span<const int> fit_rows = {});
EffectEstimate unadjusted_km_ate(const SnapshotCohort& cohort, HorizonConfig horizon,
                                 std::span<const int> fit_rows = {});

// Neighbor sets used by matching_ate, exposed for invariance checks:
// result[i] holds the K opposite-group row indices matched to row i.
std::vector<std::vector<int>> matching_neighbor_sets(const SnapshotCohort& cohort, int k);

struct SubgroupStat {
  std::string label_key;
  std::string label_value;
  int count = 0;
  double mean_ite = 0.0; // the subgroup ATE
  double std_ite = 0.0;
  std::vector<double> bin_edges; // n_bins + 1 edges
  std::vector<int> bin_counts;
};

// Per-label ITE summaries; labels absent from every row are simply omitted.
std::vector<SubgroupStat> subgroup_ite_report(const EffectEstimate& effects,
                                              const SnapshotCohort& cohort, int n_bins = 20);

struct StratumBalance {
  std::string stratum;
  int treated = 0;
  int controls = 0;
};

struct AssumptionReport {
  bool positivity_ok = false;
  int n_treated = 0;
  int n_controls = 0;
  int events_treated = 0;
  int events_controls = 0;
  int n_strata = 0;
  std::vector<StratumBalance> one_armed_strata;
};

// Checkable subset of the causal assumptions: per-stratum positivity, group
// sizes, and event counts per arm.
AssumptionReport assumption_checks(const SnapshotCohort& cohort);

} // namespace survcause
