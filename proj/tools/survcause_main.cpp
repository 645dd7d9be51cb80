// Command-line driver: simulate, preprocess, fit, estimate, evaluate, ablate,
// report, and the chained run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "survcause/experiment.hpp"

namespace fs = std::filesystem;
using namespace survcause;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<int> taus;
  std::optional<int> threshold_days;
  bool no_risk_scores = false;
  std::vector<std::string> estimators;
  std::vector<std::string> models;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--seed", ov.seed, "Base seed for splits, repeats, and generators");
  cmd->add_option("--out", ov.out, "Output directory");
  cmd->add_option("--taus", ov.taus, "Snapshot times in months")->delimiter(',');
  cmd->add_option("--threshold-days", ov.threshold_days,
                  "Adherence threshold in coverage days (<= threshold is non-adherent)");
  cmd->add_flag("--no-risk-scores", ov.no_risk_scores, "Drop risk-score features");
  cmd->add_option("--estimators", ov.estimators, "Estimator list")->delimiter(',');
  cmd->add_option("--models", ov.models, "Model kinds to fit")->delimiter(',');
}

ExperimentConfig resolve_config(const std::string& config_path, const Overrides& ov) {
  ExperimentConfig config;
  if (!config_path.empty()) config = load_experiment_config(config_path);
  if (ov.seed) {
    config.preprocess.seed = *ov.seed;
    if (config.dgp) config.dgp->seed = *ov.seed;
  }
  if (ov.out) config.output_dir = *ov.out;
  if (!ov.taus.empty()) config.preprocess.snapshot_taus = ov.taus;
  if (ov.threshold_days) config.preprocess.adherence_threshold_days = *ov.threshold_days;
  if (ov.no_risk_scores) config.preprocess.include_risk_scores = false;
  if (!ov.estimators.empty()) config.estimators = ov.estimators;
  if (!ov.models.empty()) {
    std::vector<ModelGridSpec> grids;
    for (const auto& kind : ov.models) {
      ModelGridSpec g;
      g.kind = kind;
      grids.push_back(std::move(g));
    }
    config.models = std::move(grids);
  }
  return config;
}

ModelSpec model_spec_from_flags(const std::string& kind, double penalizer, int trees,
                                int min_split, int min_leaf, std::uint64_t seed) {
  ModelSpec spec;
  spec.kind = kind;
  spec.cox_penalizer = penalizer;
  spec.rsf.n_trees = trees;
  spec.rsf.min_samples_split = min_split;
  spec.rsf.min_samples_leaf = min_leaf;
  spec.rsf.seed = seed;
  spec.validate();
  return spec;
}

int cmd_simulate(const std::string& config_path, const Overrides& ov) {
  ExperimentConfig config = resolve_config(config_path, ov);
  if (!config.dgp) {
    DgpConfig dgp;
    dgp.propensity_coefs = {0.5};
    dgp.covariate_loghr = {0.5};
    dgp.treatment_loghr = 0.7;
    dgp.censoring_rate = 0.0125;
    if (ov.seed) dgp.seed = *ov.seed;
    config.dgp = dgp;
  }
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  const auto data = generate(*config.dgp);
  write_longitudinal_csv(dir / "data.csv", data.records);

  std::ofstream truth(dir / "truth.csv");
  truth << "subject_id,potential_event_month_0,potential_event_month_1,potential_rmet_0,"
           "potential_rmet_1,propensity\n";
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& t = data.truth[i];
    truth << data.records[i].id << ',' << fmt_double(t.potential_event_month[0]) << ','
          << fmt_double(t.potential_event_month[1]) << ',' << fmt_double(t.potential_rmet[0])
          << ',' << fmt_double(t.potential_rmet[1]) << ',' << fmt_double(t.propensity) << "\n";
  }
  std::cout << "wrote " << (dir / "data.csv").string() << " (" << data.records.size()
            << " subjects) and truth.csv\n";
  return 0;
}

int cmd_preprocess(const std::string& config_path, const std::string& input,
                   const Overrides& ov) {
  ExperimentConfig config = resolve_config(config_path, ov);
  if (!input.empty()) config.input_csv = input;
  if (config.input_csv.empty()) throw std::runtime_error("preprocess needs --input or a config");
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);

  const auto records = ingest_longitudinal(config.input_csv, config.preprocess);
  std::cout << "ingested " << records.size() << " subjects\n";
  for (int tau : config.preprocess.snapshot_taus) {
    const auto raw = build_snapshot(records, tau, config.preprocess);
    const auto cohort = trim(raw);
    const auto report = assumption_checks(cohort);
    write_cohort_csv(dir / ("cohort_" + std::to_string(tau) + ".csv"), cohort);

    ordered_json j;
    j["tau"] = tau;
    j["size_before_trim"] = raw.size();
    j["size"] = cohort.size();
    j["dropped_missing_risk"] = raw.dropped_missing_risk;
    j["positivity_ok"] = report.positivity_ok;
    j["n_treated"] = report.n_treated;
    j["n_controls"] = report.n_controls;
    j["events_treated"] = report.events_treated;
    j["events_controls"] = report.events_controls;
    j["n_strata"] = report.n_strata;
    j["one_armed_strata"] = report.one_armed_strata.size();
    std::ofstream out(dir / ("assumptions_" + std::to_string(tau) + ".json"));
    out << j.dump(2) << "\n";
    std::cout << "tau=" << tau << ": " << raw.size() << " -> " << cohort.size()
              << " rows after trimming\n";
  }
  return 0;
}

int cmd_fit(const std::string& cohort_path, const ModelSpec& spec, const std::string& out_path) {
  const auto cohort = read_cohort_csv(cohort_path);
  Eigen::MatrixXd x(cohort.size(), cohort.schema.size());
  std::vector<double> times;
  std::vector<int> events;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    for (std::size_t j = 0; j < cohort.schema.size(); ++j) x(i, j) = cohort.rows[i].features[j];
    times.push_back(cohort.rows[i].residual_time);
    events.push_back(cohort.rows[i].event_flag ? 1 : 0);
  }

  ordered_json j;
  j["kind"] = spec.kind;
  j["rows"] = cohort.size();
  if (spec.kind == "cox_ph") {
    auto fit = coxph_fit(x, times, events, spec.cox_penalizer, cohort.schema);
    j["penalizer"] = spec.cox_penalizer;
    j["converged"] = fit.report.converged;
    j["iterations"] = fit.report.iterations;
    j["partial_loglik"] = fit.report.partial_loglik;
    if (!fit.report.diagnostic.empty()) j["diagnostic"] = fit.report.diagnostic;
    ordered_json coefs;
    for (std::size_t k = 0; k < cohort.schema.size(); ++k)
      coefs[cohort.schema.names[k]] = fit.report.beta[static_cast<Eigen::Index>(k)];
    j["coefficients"] = coefs;
  } else {
    auto model = fit_survival_model(spec, x, times, events, cohort.schema);
    j["fitted"] = true;
    if (spec.kind == "random_survival_forest") {
      j["n_trees"] = spec.rsf.n_trees;
      j["min_samples_split"] = spec.rsf.min_samples_split;
      j["min_samples_leaf"] = spec.rsf.min_samples_leaf;
      j["seed"] = spec.rsf.seed;
    }
  }
  const std::string text = j.dump(2);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << text << "\n";
  }
  std::cout << text << "\n";
  return 0;
}

int cmd_evaluate(const std::string& cohort_path, const ModelSpec& spec, double train_frac,
                 std::uint64_t seed, const std::string& out_path) {
  const auto cohort = read_cohort_csv(cohort_path);
  const auto parts = split(cohort, {train_frac, 0.0, 1.0 - train_frac}, seed);

  Eigen::MatrixXd x(parts.train.size(), cohort.schema.size());
  std::vector<double> times;
  std::vector<int> events;
  for (std::size_t r = 0; r < parts.train.size(); ++r) {
    const auto& row = cohort.rows[parts.train[r]];
    for (std::size_t j = 0; j < cohort.schema.size(); ++j) x(r, j) = row.features[j];
    times.push_back(row.residual_time);
    events.push_back(row.event_flag ? 1 : 0);
  }
  auto model = fit_survival_model(spec, x, times, events, cohort.schema);

  std::vector<SurvivalCurve> curves;
  std::vector<double> test_times;
  std::vector<int> test_events;
  for (int i : parts.test) {
    curves.push_back(predict_survival(*model, cohort.rows[i].features));
    test_times.push_back(cohort.rows[i].residual_time);
    test_events.push_back(cohort.rows[i].event_flag ? 1 : 0);
  }
  const auto report = evaluate_survival_predictions(curves, test_times, test_events);

  ordered_json j;
  j["kind"] = spec.kind;
  j["train_rows"] = parts.train.size();
  j["test_rows"] = parts.test.size();
  j["c_td"] = report.c_td;
  j["ibs"] = report.ibs;
  j["auc_td_mean"] = report.auc_td_mean;
  const std::string text = j.dump(2);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << text << "\n";
  }
  std::cout << text << "\n";
  return 0;
}

int cmd_estimate(const std::string& cohort_path, const ModelSpec& spec,
                 const std::vector<std::string>& estimators, int horizon,
                 const std::string& out_path) {
  const auto cohort_raw = read_cohort_csv(cohort_path);
  const auto [cohort, stats] = encode_and_normalize(cohort_raw);
  const HorizonConfig h{horizon};

  std::ostringstream table;
  table << "estimator,model,ate,n\n";
  for (const auto& name : estimators) {
    const auto effect = run_estimator(name, cohort, spec, h, {});
    table << effect.method_tag << ',' << effect.base_model_tag << ',' << fmt_double(effect.ate)
          << ',' << effect.ites.size() << "\n";
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << table.str();
  }
  std::cout << table.str();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment-effect estimation for right-censored time-to-event outcomes"};
  app.require_subcommand(1);

  std::string config_path, input_path, cohort_path, out_path;
  std::string model_kind = "cox_ph";
  double penalizer = 0.0;
  int trees = 100, min_split = 10, min_leaf = 5;
  std::uint64_t model_seed = 0;
  double train_frac = 0.8;
  std::vector<std::string> estimators = {"t_learner", "s_learner", "matching_5",
                                         "unadjusted_km"};
  int horizon = kMaxFollowupMonths;
  Overrides ov;

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_kind, "kaplan_meier | cox_ph | random_survival_forest");
    cmd->add_option("--penalizer", penalizer, "Cox ridge penalizer");
    cmd->add_option("--trees", trees, "RSF tree count");
    cmd->add_option("--min-split", min_split, "RSF minimum samples to split");
    cmd->add_option("--min-leaf", min_leaf, "RSF minimum samples per leaf");
    cmd->add_option("--model-seed", model_seed, "RSF ensemble seed");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic longitudinal CSV");
  simulate->add_option("--config", config_path, "Experiment config JSON");
  add_override_flags(simulate, ov);

  auto* preprocess =
      app.add_subcommand("preprocess", "Build, trim, and export snapshot cohorts");
  preprocess->add_option("--config", config_path, "Experiment config JSON");
  preprocess->add_option("--input", input_path, "Longitudinal CSV");
  add_override_flags(preprocess, ov);

  auto* fit = app.add_subcommand("fit", "Fit one survival model on a cohort file");
  fit->add_option("--cohort", cohort_path, "cohort_<tau>.csv from preprocess")->required();
  fit->add_option("--report", out_path, "Write the fit report JSON here");
  add_model_flags(fit);

  auto* evaluate = app.add_subcommand("evaluate", "Fit on a train split and score the test split");
  evaluate->add_option("--cohort", cohort_path)->required();
  evaluate->add_option("--train-frac", train_frac, "Training fraction");
  evaluate->add_option("--seed", model_seed, "Split seed");
  evaluate->add_option("--report", out_path, "Write the metrics JSON here");
  add_model_flags(evaluate);

  auto* estimate = app.add_subcommand("estimate", "Run effect estimators on a cohort file");
  estimate->add_option("--cohort", cohort_path)->required();
  estimate->add_option("--estimators", estimators)->delimiter(',');
  estimate->add_option("--horizon", horizon, "RMET horizon in months");
  estimate->add_option("--table", out_path, "Write the ATE table here");
  add_model_flags(estimate);

  auto* ablate = app.add_subcommand("ablate", "Paired run with and without risk scores");
  ablate->add_option("--config", config_path, "Experiment config JSON")->required();
  add_override_flags(ablate, ov);

  auto* report = app.add_subcommand("report", "Re-derive results and emit plot data");
  report->add_option("--config", config_path, "Experiment config JSON")->required();
  add_override_flags(report, ov);

  auto* run = app.add_subcommand("run", "Full pipeline: simulate/ingest, fit, estimate, report");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  add_override_flags(run, ov);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(config_path, ov);
    if (preprocess->parsed()) return cmd_preprocess(config_path, input_path, ov);
    if (fit->parsed())
      return cmd_fit(cohort_path,
                     model_spec_from_flags(model_kind, penalizer, trees, min_split, min_leaf,
                                           model_seed),
                     out_path);
    if (evaluate->parsed())
      return cmd_evaluate(cohort_path,
                          model_spec_from_flags(model_kind, penalizer, trees, min_split,
                                                min_leaf, model_seed),
                          train_frac, model_seed, out_path);
    if (estimate->parsed())
      return cmd_estimate(cohort_path,
                          model_spec_from_flags(model_kind, penalizer, trees, min_split,
                                                min_leaf, model_seed),
                          estimators, horizon, out_path);
    if (ablate->parsed()) {
      run_ablation(resolve_config(config_path, ov));
      std::cout << "ablation tables written\n";
      return 0;
    }
    if (report->parsed()) {
      ExperimentConfig config = resolve_config(config_path, ov);
      const auto result = run_experiment(config);
      emit_plot_data(result, fs::path(config.output_dir) / "plots");
      std::cout << "plot data written to " << (fs::path(config.output_dir) / "plots").string()
                << "\n";
      return 0;
    }
    if (run->parsed()) {
      ExperimentConfig config = resolve_config(config_path, ov);
      if (config.dgp && config.input_csv.empty()) {
        // materialize the simulated CSV so the whole pipeline is file-backed
        fs::create_directories(config.output_dir);
        const auto data = generate(*config.dgp);
        const fs::path csv = fs::path(config.output_dir) / "data.csv";
        write_longitudinal_csv(csv, data.records);
        config.input_csv = csv.string();
        config.dgp.reset();
      }
      const auto result = run_experiment(config);
      emit_plot_data(result, fs::path(config.output_dir) / "plots");
      std::cout << "experiment written to " << config.output_dir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
