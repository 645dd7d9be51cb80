#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "survcause/types.hpp"

namespace survcause {

struct CategoricalSpec {
  std::string field; // race | gender | education
  std::vector<std::string> levels;
  std::vector<double> probs;
};

// Exponential proportional-hazards data-generating process with logistic
// treatment assignment. Potential event times are coupled through one uniform
// draw per subject, so both arms are known exactly.
struct DgpConfig {
  int n_subjects = 1000;
  int n_continuous = 1; // standard-normal covariates; the first one scales into age
  std::vector<CategoricalSpec> categoricals;

  double propensity_intercept = 0.0;
  std::vector<double> propensity_coefs; // logistic in the covariate vector
  double baseline_hazard = 0.05;        // per month
  double treatment_loghr = 0.0;         // beta_A; positive hastens events
  std::vector<double> covariate_loghr;  // beta_Z
  double censoring_rate = 0.0;          // independent exponential; 0 disables
  int horizon_months = kMaxFollowupMonths;
  // scales the covariate coefficients in both propensity and hazard
  double confounder_strength = 1.0;

  double risk_score_noise = 0.0;        // gaussian sd added to proxy scores
  bool risk_scores_uninformative = false; // replace proxies with uniform noise
  // adherence indicators equal the assigned treatment from this month onward;
  // earlier months are coin flips so history features vary across subjects
  int stabilization_month = 3;
  int adherence_threshold_days = 10;
  std::uint64_t seed = 0;

  int covariate_dim() const;
  void validate() const;
};

struct SubjectTruth {
  std::array<double, 2> potential_event_month{}; // ceil of the latent times, uncapped
  std::array<double, 2> potential_rmet{};        // closed-form E[min(T(a), M)]
  double propensity = 0.0;
};

struct SynthDataset {
  std::vector<SubjectRecord> records;
  std::vector<SubjectTruth> truth; // aligned with records
};

SynthDataset generate(const DgpConfig& config);

struct OracleAte {
  double ate = 0.0;       // months
  double std_error = 0.0; // Monte-Carlo SE of the mean
};

// Monte-Carlo mean of min(T(1), M) - min(T(0), M) over fresh draws.
OracleAte oracle_ate(const DgpConfig& config, long n_mc);

} // namespace survcause
