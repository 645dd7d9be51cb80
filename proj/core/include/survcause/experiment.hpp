#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "survcause/cohort.hpp"
#include "survcause/effects.hpp"
#include "survcause/metrics.hpp"
#include "survcause/synth.hpp"

namespace survcause {

// Hyperparameter grid for one model kind; selection happens per repeat on the
// validation split by time-dependent concordance.
struct ModelGridSpec {
  std::string kind; // kaplan_meier | cox_ph | random_survival_forest
  std::vector<double> penalizer_grid = {0.0, 0.01, 0.1, 0.5};
  std::vector<int> n_trees_grid = {100, 250, 500};
  std::vector<int> min_samples_split_grid = {5, 10, 20};
  std::vector<int> min_samples_leaf_grid = {2, 5, 10};

  std::vector<ModelSpec> expand() const; // deterministic enumeration order
};

std::vector<ModelGridSpec> default_model_grids(); // cox_ph + random_survival_forest

struct ExperimentConfig {
  std::string input_csv;        // either a CSV path ...
  std::optional<DgpConfig> dgp; // ... or a generator config
  PreprocessConfig preprocess;
  std::vector<ModelGridSpec> models = default_model_grids();
  std::vector<std::string> estimators = {"t_learner",    "s_learner",  "matching_1",
                                         "matching_5",   "matching_20", "unadjusted_km"};
  int horizon_months = kMaxFollowupMonths;
  std::string output_dir = "out";
  int max_workers = 0; // 0 = hardware concurrency

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct MetricCell {
  int repeat = 0;
  std::string status = "ok"; // ok | failed
  std::string message;
  std::string selected_params;
  MetricReport report;
};

struct EstimatorCell {
  int repeat = 0;
  std::string status = "ok";
  std::string message;
  EffectEstimate effect;
};

struct TauModelResult {
  std::string model;
  std::vector<MetricCell> metric_cells; // one per repeat
  std::map<std::string, std::vector<EstimatorCell>> estimator_cells;
};

struct TauResult {
  int tau = 0;
  std::string status = "ok";
  std::string message;
  std::size_t cohort_size_raw = 0; // before trimming
  SnapshotCohort cohort;           // trimmed, pre-normalization
  AssumptionReport assumptions;
  SurvivalCurve km_treated;  // unadjusted full-cohort curves
  SurvivalCurve km_controls;
  std::vector<TauModelResult> models;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TauResult> taus;
};

// Full protocol: per tau and repeat, split, select hyperparameters on the
// validation split, fit on train, score the test split, and estimate effects
// on the whole cohort. Failures are recorded per cell, never fatal. Writes
// metrics_<tau>.csv, ate_<tau>.csv, ite/subgroup files, and manifest.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct AblationResult {
  ExperimentResult full;
  ExperimentResult ablated;
};

// Runs the experiment with and without risk-score features and writes the
// paired ablation_<tau>.csv tables.
AblationResult run_ablation(const ExperimentConfig& config);

// Tidy per-figure series: ate_trend.csv, ite_hist.csv, km_curves.csv.
void emit_plot_data(const ExperimentResult& result, const std::filesystem::path& dir);

// Survival-curve CSV round-trip used by the plot exports.
void write_curve_csv(const std::filesystem::path& path, const SurvivalCurve& curve);
SurvivalCurve read_curve_csv(const std::filesystem::path& path);

// "matching_7" -> MatchingConfig{7}; empty optional for non-matching names.
std::optional<MatchingConfig> parse_matching_estimator(const std::string& name);

// Dispatches one estimator by name on an encoded cohort.
EffectEstimate run_estimator(const std::string& name, const SnapshotCohort& cohort,
                             const ModelSpec& spec, HorizonConfig horizon,
                             std::span<const int> fit_rows);

} // namespace survcause
