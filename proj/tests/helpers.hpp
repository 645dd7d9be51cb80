#pragma once

#include <random>
#include <vector>

#include "survcause/types.hpp"

namespace survcause::testing {

// Small cohort with one continuous, one risk-score, one binary history
// feature plus the treatment column. Both arms get at least one event.
inline SnapshotCohort random_cohort(std::mt19937_64& rng, int n_controls, int n_treated,
                                    int max_time = 20) {
  SnapshotCohort cohort;
  cohort.tau = 3;
  cohort.schema.names = {"age", "risk_mortality", "adherence_m1", "treatment"};
  cohort.schema.kinds = {FeatureKind::static_continuous, FeatureKind::risk_score,
                         FeatureKind::adherence_history, FeatureKind::treatment};
  std::normal_distribution<double> gauss(40.0, 10.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> time_dist(1, max_time);
  int id = 0;
  for (int arm : {0, 1}) {
    const int n = arm ? n_treated : n_controls;
    for (int i = 0; i < n; ++i) {
      CohortRow row;
      row.subject_id = "r" + std::to_string(++id);
      row.treatment = arm;
      row.residual_time = time_dist(rng);
      row.event_flag = i == 0 ? true : unif(rng) < 0.7; // guarantee an event per arm
      row.stratum = "all";
      row.subgroup_labels = {{"formulation", unif(rng) < 0.5 ? "injectable" : "non-injectable"},
                             {"drug_name", unif(rng) < 0.5 ? "drug_a" : "drug_b"}};
      row.features = {gauss(rng), unif(rng), unif(rng) < 0.5 ? 1.0 : 0.0,
                      static_cast<double>(arm)};
      cohort.rows.push_back(std::move(row));
    }
  }
  return cohort;
}

} // namespace survcause::testing
