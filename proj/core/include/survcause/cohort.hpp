#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "survcause/types.hpp"

namespace survcause {

// Input CSV column order (one row per subject-month).
inline constexpr const char* kLongitudinalHeader =
    "subject_id,month,coverage_days,risk_mortality,risk_jail,risk_shelter,"
    "risk_hospitalization,risk_overdose,age,race,gender,education,formulation,"
    "drug_name,observed_time,event_flag";

struct PreprocessConfig {
  int adherence_threshold_days = 10; // sensitivity range 6..24
  std::vector<int> snapshot_taus = {3, 6, 9, 12};
  std::array<double, 3> split_fractions = {0.6, 0.2, 0.2}; // train/validation/test
  int n_repeats = 5;
  bool include_risk_scores = true; // ablation switch
  std::uint64_t seed = 0;

  void validate() const;
};

// 1 (non-adherent) iff coverage_days <= threshold.
int binarize_adherence(int coverage_days, int threshold);

// Parses the long-format CSV, binarizes adherence with the configured
// threshold, and validates the result; throws with line numbers on malformed
// rows and with the violation report on invariant failures.
std::vector<SubjectRecord> ingest_longitudinal(const std::filesystem::path& path,
                                               const PreprocessConfig& config);

// Inverse of ingest_longitudinal (modulo the adherence threshold).
void write_longitudinal_csv(const std::filesystem::path& path,
                            const std::vector<SubjectRecord>& records);

// Cross-section at tau: subjects with observed_time >= tau + 1, residual time
// T - tau, and Z = [age, static one-hots, risk scores (if enabled),
// adherence history A_1..A_{tau-1}, treatment A_tau].
SnapshotCohort build_snapshot(const std::vector<SubjectRecord>& records, int tau,
                              const PreprocessConfig& config);

// Drops every row whose static-covariate stratum is one-armed (this includes
// singleton strata). Throws when nothing survives.
SnapshotCohort trim(const SnapshotCohort& cohort);

struct NormalizationStats {
  std::vector<std::string> feature_names; // continuous columns, schema order
  std::vector<double> mean;
  std::vector<double> stddev;             // sample std, > 0
  std::vector<std::string> dropped;       // zero-variance columns removed
};

// Z-scores continuous columns (age, risk scores). Without stats they are
// computed from the given cohort (training rows); with stats the stored
// transform is applied and unseen columns are an error.
std::pair<SnapshotCohort, NormalizationStats> encode_and_normalize(
    const SnapshotCohort& cohort, const NormalizationStats* stats = nullptr);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

// Disjoint, exhaustive, deterministic under seed; throws if any part is empty.
SplitIndices split(const SnapshotCohort& cohort, std::array<double, 3> fractions,
                   std::uint64_t seed);

// Cohort CSV round-trip; the schema lands in <path>.schema.json.
void write_cohort_csv(const std::filesystem::path& path, const SnapshotCohort& cohort);
SnapshotCohort read_cohort_csv(const std::filesystem::path& path);

void write_normalization_stats(const std::filesystem::path& path, const NormalizationStats& stats);
NormalizationStats read_normalization_stats(const std::filesystem::path& path);

} // namespace survcause
