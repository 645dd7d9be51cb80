#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace survcause {

// Maximum follow-up horizon in months. Observation windows never exceed it.
inline constexpr int kMaxFollowupMonths = 96;
inline constexpr int kNumRiskScores = 5;

// One subject's monthly longitudinal history plus static covariates and the
// observed (possibly censored) outcome. Immutable after construction; safe to
// share across threads.
struct SubjectRecord {
  std::string id;
  int observed_time = 0;   // months, >= 1; event month if event_flag, else censoring month
  bool event_flag = false; // true = adverse event, false = right-censored

  // Per-month series, index t-1 holds month t. All three share the same length
  // M_i (the number of observed months), with observed_time <= M_i <= 96.
  std::vector<int> adherence;     // 0/1 non-adherence indicators
  std::vector<int> coverage_days; // raw prescription coverage, 0..31
  // Five risk probabilities per month; NaN marks a missing score.
  std::vector<std::array<double, kNumRiskScores>> risk_scores;

  double age = 0.0;
  std::map<std::string, std::string> static_covariates; // race, gender, education
  std::map<std::string, std::string> subgroup_labels;   // formulation, drug_name

  int n_months() const { return static_cast<int>(adherence.size()); }
};

struct Violation {
  std::string subject_id;
  std::string message;
};

// Reports every invariant violation in the dataset; empty iff well-formed.
std::vector<Violation> validate_dataset(const std::vector<SubjectRecord>& records);

enum class FeatureKind {
  static_continuous, // age
  static_onehot,     // indicator for one categorical level
  risk_score,
  adherence_history, // A_1 .. A_{tau-1}
  treatment          // A_tau, the snapshot non-adherence indicator
};

const char* feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from_name(const std::string& name);

// Ordered feature layout shared by every row of a cohort and by the models
// fitted against it.
struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;

  std::size_t size() const { return names.size(); }
  // Index of the treatment column, or -1 when not included.
  int treatment_index() const;
  int index_of(const std::string& name) const; // -1 when absent

  bool operator==(const FeatureSchema&) const = default;
};

struct CohortRow {
  std::string subject_id;
  std::vector<double> features; // Z, laid out per the cohort schema
  int treatment = 0;            // equals the treatment feature when included
  double residual_time = 0.0;   // months from snapshot, >= 1
  bool event_flag = false;
  std::string stratum; // joint categorical static combination, used for trimming
  std::map<std::string, std::string> subgroup_labels;
};

// Cross-section frozen at snapshot time tau.
struct SnapshotCohort {
  int tau = 0;
  FeatureSchema schema;
  std::vector<CohortRow> rows;
  int dropped_missing_risk = 0; // subjects dropped for unusable risk scores at tau

  std::size_t size() const { return rows.size(); }
  std::vector<int> arm_indices(int treatment) const;
  // Throws std::invalid_argument when any SnapshotCohort invariant fails.
  void validate() const;
};

// Right-continuous step function u -> S(u). grid[0] == 0, values[0] == 1,
// values non-increasing in [0,1].
struct SurvivalCurve {
  std::vector<double> grid;
  std::vector<double> values;

  // S(u): value of the step at u, constant beyond the last grid point.
  double value_at(double u) const;
  bool is_valid(std::string* why = nullptr) const;
  void validate() const; // throws std::invalid_argument with the reason

  bool operator==(const SurvivalCurve&) const = default;
};

// Per-subject ITEs plus their mean; ate is always mean(ites).
struct EffectEstimate {
  std::vector<double> ites; // months
  double ate = 0.0;         // months
  double repeat_std = 0.0;  // dispersion of ate across experiment repeats
  std::string method_tag;   // t_learner | s_learner | matching(K) | unadjusted_km
  std::string base_model_tag;
};

// Builds an estimate with ate computed from the ites.
EffectEstimate make_effect_estimate(std::vector<double> ites, std::string method_tag,
                                    std::string base_model_tag);

double mean(std::span<const double> xs);
// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_std(std::span<const double> xs);

} // namespace survcause
