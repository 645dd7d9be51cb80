#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "survcause/experiment.hpp"

namespace survcause {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_exact(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4a68b021e06ebULL;
  return x ^ (x >> 31);
}

SnapshotCohort subset_cohort(const SnapshotCohort& cohort, const std::vector<int>& rows) {
  SnapshotCohort out;
  out.tau = cohort.tau;
  out.schema = cohort.schema;
  out.dropped_missing_risk = cohort.dropped_missing_risk;
  out.rows.reserve(rows.size());
  for (int i : rows) out.rows.push_back(cohort.rows[i]);
  return out;
}

struct OutcomeView {
  std::vector<double> times;
  std::vector<int> events;
};

OutcomeView outcomes_of(const SnapshotCohort& cohort, const std::vector<int>& rows) {
  OutcomeView v;
  for (int i : rows) {
    v.times.push_back(cohort.rows[i].residual_time);
    v.events.push_back(cohort.rows[i].event_flag ? 1 : 0);
  }
  return v;
}

Eigen::MatrixXd full_design(const SnapshotCohort& cohort, const std::vector<int>& rows) {
  Eigen::MatrixXd x(rows.size(), cohort.schema.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < cohort.schema.size(); ++j)
      x(r, j) = cohort.rows[rows[r]].features[j];
  return x;
}

std::string describe_spec(const ModelSpec& spec) {
  if (spec.kind == "cox_ph") return "penalizer=" + fmt_double(spec.cox_penalizer);
  if (spec.kind == "random_survival_forest")
    return "n_trees=" + std::to_string(spec.rsf.n_trees) +
           ",min_samples_split=" + std::to_string(spec.rsf.min_samples_split) +
           ",min_samples_leaf=" + std::to_string(spec.rsf.min_samples_leaf);
  return "";
}

std::vector<int> all_indices(std::size_t n) {
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

// ---- JSON (de)serialization -------------------------------------------------

ordered_json dgp_to_json(const DgpConfig& d) {
  ordered_json j;
  j["n_subjects"] = d.n_subjects;
  j["n_continuous"] = d.n_continuous;
  ordered_json cats = ordered_json::array();
  for (const auto& c : d.categoricals)
    cats.push_back({{"field", c.field}, {"levels", c.levels}, {"probs", c.probs}});
  j["categoricals"] = cats;
  j["propensity_intercept"] = d.propensity_intercept;
  j["propensity_coefs"] = d.propensity_coefs;
  j["baseline_hazard"] = d.baseline_hazard;
  j["treatment_loghr"] = d.treatment_loghr;
  j["covariate_loghr"] = d.covariate_loghr;
  j["censoring_rate"] = d.censoring_rate;
  j["horizon_months"] = d.horizon_months;
  j["confounder_strength"] = d.confounder_strength;
  j["risk_score_noise"] = d.risk_score_noise;
  j["risk_scores_uninformative"] = d.risk_scores_uninformative;
  j["stabilization_month"] = d.stabilization_month;
  j["adherence_threshold_days"] = d.adherence_threshold_days;
  j["seed"] = d.seed;
  return j;
}

DgpConfig dgp_from_json(const ordered_json& j) {
  DgpConfig d;
  d.n_subjects = j.value("n_subjects", d.n_subjects);
  d.n_continuous = j.value("n_continuous", d.n_continuous);
  if (j.contains("categoricals")) {
    for (const auto& c : j.at("categoricals")) {
      CategoricalSpec spec;
      spec.field = c.at("field").get<std::string>();
      spec.levels = c.at("levels").get<std::vector<std::string>>();
      spec.probs = c.at("probs").get<std::vector<double>>();
      d.categoricals.push_back(std::move(spec));
    }
  }
  d.propensity_intercept = j.value("propensity_intercept", d.propensity_intercept);
  if (j.contains("propensity_coefs"))
    d.propensity_coefs = j.at("propensity_coefs").get<std::vector<double>>();
  d.baseline_hazard = j.value("baseline_hazard", d.baseline_hazard);
  d.treatment_loghr = j.value("treatment_loghr", d.treatment_loghr);
  if (j.contains("covariate_loghr"))
    d.covariate_loghr = j.at("covariate_loghr").get<std::vector<double>>();
  d.censoring_rate = j.value("censoring_rate", d.censoring_rate);
  d.horizon_months = j.value("horizon_months", d.horizon_months);
  d.confounder_strength = j.value("confounder_strength", d.confounder_strength);
  d.risk_score_noise = j.value("risk_score_noise", d.risk_score_noise);
  d.risk_scores_uninformative = j.value("risk_scores_uninformative", d.risk_scores_uninformative);
  d.stabilization_month = j.value("stabilization_month", d.stabilization_month);
  d.adherence_threshold_days = j.value("adherence_threshold_days", d.adherence_threshold_days);
  d.seed = j.value("seed", d.seed);
  return d;
}

ordered_json preprocess_to_json(const PreprocessConfig& p) {
  ordered_json j;
  j["adherence_threshold_days"] = p.adherence_threshold_days;
  j["snapshot_taus"] = p.snapshot_taus;
  j["split"] = p.split_fractions;
  j["n_repeats"] = p.n_repeats;
  j["include_risk_scores"] = p.include_risk_scores;
  j["seed"] = p.seed;
  return j;
}

PreprocessConfig preprocess_from_json(const ordered_json& j) {
  PreprocessConfig p;
  p.adherence_threshold_days = j.value("adherence_threshold_days", p.adherence_threshold_days);
  if (j.contains("snapshot_taus")) p.snapshot_taus = j.at("snapshot_taus").get<std::vector<int>>();
  if (j.contains("split")) {
    const auto f = j.at("split").get<std::vector<double>>();
    if (f.size() != 3) throw std::invalid_argument("split must have three fractions");
    p.split_fractions = {f[0], f[1], f[2]};
  }
  p.n_repeats = j.value("n_repeats", p.n_repeats);
  p.include_risk_scores = j.value("include_risk_scores", p.include_risk_scores);
  p.seed = j.value("seed", p.seed);
  return p;
}

ordered_json models_to_json(const std::vector<ModelGridSpec>& models) {
  ordered_json arr = ordered_json::array();
  for (const auto& m : models) {
    ordered_json j;
    j["kind"] = m.kind;
    if (m.kind == "cox_ph") j["penalizer_grid"] = m.penalizer_grid;
    if (m.kind == "random_survival_forest") {
      j["n_trees_grid"] = m.n_trees_grid;
      j["min_samples_split_grid"] = m.min_samples_split_grid;
      j["min_samples_leaf_grid"] = m.min_samples_leaf_grid;
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ModelGridSpec> models_from_json(const ordered_json& arr) {
  std::vector<ModelGridSpec> models;
  for (const auto& j : arr) {
    ModelGridSpec m;
    m.kind = j.at("kind").get<std::string>();
    if (j.contains("penalizer_grid"))
      m.penalizer_grid = j.at("penalizer_grid").get<std::vector<double>>();
    if (j.contains("n_trees_grid")) m.n_trees_grid = j.at("n_trees_grid").get<std::vector<int>>();
    if (j.contains("min_samples_split_grid"))
      m.min_samples_split_grid = j.at("min_samples_split_grid").get<std::vector<int>>();
    if (j.contains("min_samples_leaf_grid"))
      m.min_samples_leaf_grid = j.at("min_samples_leaf_grid").get<std::vector<int>>();
    models.push_back(std::move(m));
  }
  return models;
}

} // namespace

std::vector<ModelSpec> ModelGridSpec::expand() const {
  std::vector<ModelSpec> specs;
  if (kind == "kaplan_meier") {
    ModelSpec s;
    s.kind = kind;
    specs.push_back(s);
  } else if (kind == "cox_ph") {
    for (double lambda : penalizer_grid) {
      ModelSpec s;
      s.kind = kind;
      s.cox_penalizer = lambda;
      specs.push_back(s);
    }
  } else if (kind == "random_survival_forest") {
    for (int trees : n_trees_grid)
      for (int min_split : min_samples_split_grid)
        for (int min_leaf : min_samples_leaf_grid) {
          if (min_leaf > min_split) continue;
          ModelSpec s;
          s.kind = kind;
          s.rsf.n_trees = trees;
          s.rsf.min_samples_split = min_split;
          s.rsf.min_samples_leaf = min_leaf;
          specs.push_back(s);
        }
  } else {
    throw std::invalid_argument("unknown model kind: " + kind);
  }
  return specs;
}

std::vector<ModelGridSpec> default_model_grids() {
  ModelGridSpec cox;
  cox.kind = "cox_ph";
  ModelGridSpec rsf;
  rsf.kind = "random_survival_forest";
  return {cox, rsf};
}

void ExperimentConfig::validate() const {
  preprocess.validate();
  if (input_csv.empty() == !dgp.has_value())
    throw std::invalid_argument("configure exactly one of input_csv and dgp");
  if (models.empty()) throw std::invalid_argument("need at least one model");
  if (estimators.empty()) throw std::invalid_argument("need at least one estimator");
  for (const auto& m : models)
    if (m.expand().empty()) throw std::invalid_argument("empty grid for model " + m.kind);
  for (const auto& e : estimators) {
    if (e == "t_learner" || e == "s_learner" || e == "unadjusted_km") continue;
    if (parse_matching_estimator(e)) continue;
    throw std::invalid_argument("unknown estimator: " + e);
  }
  if (horizon_months < 1) throw std::invalid_argument("horizon must be >= 1");
  if (output_dir.empty()) throw std::invalid_argument("output_dir must be set");
}

std::optional<MatchingConfig> parse_matching_estimator(const std::string& name) {
  const std::string prefix = "matching_";
  if (name.rfind(prefix, 0) != 0) return std::nullopt;
  const std::string k_str = name.substr(prefix.size());
  if (k_str.empty()) return std::nullopt;
  for (char c : k_str)
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  MatchingConfig cfg;
  cfg.k = std::stoi(k_str);
  return cfg;
}

EffectEstimate run_estimator(const std::string& name, const SnapshotCohort& cohort,
                             const ModelSpec& spec, HorizonConfig horizon,
                             std::span<const int> fit_rows) {
  if (name == "t_learner") return t_learner_ate(cohort, spec, horizon, fit_rows);
  if (name == "s_learner") return s_learner_ate(cohort, spec, horizon, fit_rows);
  if (name == "unadjusted_km") return unadjusted_km_ate(cohort, horizon, fit_rows);
  if (auto matching = parse_matching_estimator(name))
    return matching_ate(cohort, spec, *matching, horizon, fit_rows);
  throw std::invalid_argument("unknown estimator: " + name);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const auto j = ordered_json::parse(text);
  ExperimentConfig c;
  c.input_csv = j.value("input_csv", std::string());
  if (j.contains("dgp")) c.dgp = dgp_from_json(j.at("dgp"));
  if (j.contains("preprocess")) c.preprocess = preprocess_from_json(j.at("preprocess"));
  if (j.contains("models")) c.models = models_from_json(j.at("models"));
  if (j.contains("estimators"))
    c.estimators = j.at("estimators").get<std::vector<std::string>>();
  c.horizon_months = j.value("horizon_months", c.horizon_months);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.max_workers = j.value("max_workers", c.max_workers);
  return c;
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["input_csv"] = c.input_csv;
  if (c.dgp) j["dgp"] = dgp_to_json(*c.dgp);
  j["preprocess"] = preprocess_to_json(c.preprocess);
  j["models"] = models_to_json(c.models);
  j["estimators"] = c.estimators;
  j["horizon_months"] = c.horizon_months;
  j["output_dir"] = c.output_dir;
  j["max_workers"] = c.max_workers;
  return j.dump(2);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return experiment_config_from_json(ss.str());
}

namespace {

// One repeat of one tau: split, encode with train stats, select, fit, score,
// estimate. Every failure is captured in the cell it belongs to.
void compute_repeat(const ExperimentConfig& config, const SnapshotCohort& cohort, int tau,
                    int repeat, std::vector<TauModelResult>& models) {
  const HorizonConfig horizon{config.horizon_months};
  const std::uint64_t seed_r = config.preprocess.seed + static_cast<std::uint64_t>(repeat);

  std::string shared_failure;
  SplitIndices parts;
  SnapshotCohort enc;
  try {
    parts = split(cohort, config.preprocess.split_fractions, seed_r);
    auto [train_cohort, stats] = encode_and_normalize(subset_cohort(cohort, parts.train));
    enc = encode_and_normalize(cohort, &stats).first;
  } catch (const std::exception& e) {
    shared_failure = e.what();
  }

  for (std::size_t gi = 0; gi < config.models.size(); ++gi) {
    TauModelResult& slot = models[gi];
    MetricCell& metric_cell = slot.metric_cells[repeat];
    metric_cell.repeat = repeat;
    auto fail_all = [&](const std::string& msg) {
      metric_cell.status = "failed";
      metric_cell.message = msg;
      for (const auto& e : config.estimators) {
        auto& cell = slot.estimator_cells.at(e)[repeat];
        cell.repeat = repeat;
        cell.status = "failed";
        cell.message = msg;
      }
    };
    if (!shared_failure.empty()) {
      fail_all(shared_failure);
      continue;
    }

    auto specs = config.models[gi].expand();
    for (std::size_t ci = 0; ci < specs.size(); ++ci)
      if (specs[ci].kind == "random_survival_forest")
        specs[ci].rsf.seed = mix(mix(seed_r, tau), mix(gi, ci));

    const auto train_x = full_design(enc, parts.train);
    const auto train_y = outcomes_of(enc, parts.train);

    // hyperparameter selection by validation concordance
    ModelSpec best = specs.front();
    double best_ctd = -1.0;
    std::string last_error;
    if (!parts.validation.empty() && specs.size() > 1) {
      const auto val_y = outcomes_of(enc, parts.validation);
      for (const auto& spec : specs) {
        try {
          auto model = fit_survival_model(spec, train_x, train_y.times, train_y.events,
                                          enc.schema);
          std::vector<SurvivalCurve> curves;
          curves.reserve(parts.validation.size());
          for (int i : parts.validation)
            curves.push_back(predict_survival(*model, enc.rows[i].features));
          const double ctd = concordance_td(curves, val_y.times, val_y.events);
          if (ctd > best_ctd) {
            best_ctd = ctd;
            best = spec;
          }
        } catch (const std::exception& e) {
          last_error = e.what();
        }
      }
      if (best_ctd < 0.0) {
        fail_all("no hyperparameter combination succeeded: " + last_error);
        continue;
      }
    }
    metric_cell.selected_params = describe_spec(best);

    try {
      auto model =
          fit_survival_model(best, train_x, train_y.times, train_y.events, enc.schema);
      const auto test_y = outcomes_of(enc, parts.test);
      std::vector<SurvivalCurve> curves;
      curves.reserve(parts.test.size());
      for (int i : parts.test) curves.push_back(predict_survival(*model, enc.rows[i].features));
      metric_cell.report = evaluate_survival_predictions(curves, test_y.times, test_y.events);
    } catch (const std::exception& e) {
      metric_cell.status = "failed";
      metric_cell.message = e.what();
    }

    for (const auto& name : config.estimators) {
      auto& cell = slot.estimator_cells.at(name)[repeat];
      cell.repeat = repeat;
      try {
        cell.effect = run_estimator(name, enc, best, horizon, parts.train);
      } catch (const std::exception& e) {
        cell.status = "failed";
        cell.message = e.what();
      }
    }
  }
}

void write_metrics_table(const std::filesystem::path& dir, const TauResult& tr) {
  std::ofstream out(dir / ("metrics_" + std::to_string(tr.tau) + ".csv"));
  out << "model,c_td_mean,c_td_std,ibs_mean,ibs_std,auc_td_mean,auc_td_std,repeats_ok,status\n";
  for (const auto& m : tr.models) {
    std::vector<double> ctd, ibs, auc;
    for (const auto& cell : m.metric_cells) {
      if (cell.status != "ok") continue;
      ctd.push_back(cell.report.c_td);
      ibs.push_back(cell.report.ibs);
      auc.push_back(cell.report.auc_td_mean);
    }
    out << m.model;
    if (ctd.empty()) {
      out << ",,,,,,,0,failed\n";
      continue;
    }
    out << ',' << fmt_double(mean(ctd)) << ',' << fmt_double(sample_std(ctd));
    out << ',' << fmt_double(mean(ibs)) << ',' << fmt_double(sample_std(ibs));
    out << ',' << fmt_double(mean(auc)) << ',' << fmt_double(sample_std(auc));
    out << ',' << ctd.size() << ",ok\n";
  }
}

void write_ate_table(const std::filesystem::path& dir, const ExperimentConfig& config,
                     const TauResult& tr) {
  std::ofstream out(dir / ("ate_" + std::to_string(tr.tau) + ".csv"));
  out << "model";
  for (const auto& e : config.estimators) out << ',' << e << ',' << e << "_std," << e << "_status";
  out << "\n";
  for (const auto& m : tr.models) {
    out << m.model;
    for (const auto& e : config.estimators) {
      std::vector<double> ates;
      auto it = m.estimator_cells.find(e);
      if (it != m.estimator_cells.end())
        for (const auto& cell : it->second)
          if (cell.status == "ok") ates.push_back(cell.effect.ate);
      if (ates.empty())
        out << ",,,failed";
      else
        out << ',' << fmt_double(mean(ates)) << ',' << fmt_double(sample_std(ates)) << ",ok";
    }
    out << "\n";
  }
}

void write_ite_and_subgroups(const std::filesystem::path& dir, const TauResult& tr) {
  for (const auto& m : tr.models) {
    for (const auto& [estimator, cells] : m.estimator_cells) {
      const std::string stem = std::to_string(tr.tau) + "_" + m.model + "_" + estimator;
      std::ofstream ite(dir / ("ite_" + stem + ".csv"));
      ite << "repeat,subject_id,ite\n";
      std::ofstream sub(dir / ("subgroups_" + stem + ".csv"));
      sub << "repeat,label_key,label_value,count,mean_ite,std_ite\n";
      for (const auto& cell : cells) {
        if (cell.status != "ok") continue;
        for (std::size_t i = 0; i < cell.effect.ites.size(); ++i)
          ite << cell.repeat << ',' << tr.cohort.rows[i].subject_id << ','
              << fmt_exact(cell.effect.ites[i]) << "\n";
        for (const auto& stat : subgroup_ite_report(cell.effect, tr.cohort)) {
          sub << cell.repeat << ',' << stat.label_key << ',' << stat.label_value << ','
              << stat.count << ',' << fmt_double(stat.mean_ite) << ','
              << fmt_double(stat.std_ite) << "\n";
        }
      }
    }
  }
}

void write_manifest(const std::filesystem::path& dir, const ExperimentResult& result) {
  ordered_json manifest;
  manifest["config"] = ordered_json::parse(experiment_config_to_json(result.config));
  ordered_json cohorts = ordered_json::array();
  ordered_json cells = ordered_json::array();
  for (const auto& tr : result.taus) {
    cohorts.push_back({{"tau", tr.tau},
                       {"status", tr.status},
                       {"size_before_trim", tr.cohort_size_raw},
                       {"size", tr.cohort.rows.size()},
                       {"dropped_missing_risk", tr.cohort.dropped_missing_risk},
                       {"positivity_ok", tr.assumptions.positivity_ok}});
    for (const auto& m : tr.models) {
      for (const auto& cell : m.metric_cells) {
        cells.push_back({{"tau", tr.tau},
                         {"repeat", cell.repeat},
                         {"model", m.model},
                         {"estimator", ""},
                         {"kind", "metrics"},
                         {"status", cell.status},
                         {"params", cell.selected_params},
                         {"message", cell.message},
                         {"file", "metrics_" + std::to_string(tr.tau) + ".csv"}});
      }
      for (const auto& [estimator, est_cells] : m.estimator_cells) {
        for (const auto& cell : est_cells) {
          cells.push_back(
              {{"tau", tr.tau},
               {"repeat", cell.repeat},
               {"model", m.model},
               {"estimator", estimator},
               {"kind", "ate"},
               {"status", cell.status},
               {"message", cell.message},
               {"file", "ate_" + std::to_string(tr.tau) + ".csv"}});
        }
      }
    }
  }
  manifest["cohorts"] = cohorts;
  manifest["cells"] = cells;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::vector<SubjectRecord> records;
  if (config.dgp) {
    records = generate(*config.dgp).records;
  } else {
    records = ingest_longitudinal(config.input_csv, config.preprocess);
  }

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);

  ExperimentResult result;
  result.config = config;

  for (int tau : config.preprocess.snapshot_taus) {
    TauResult tr;
    tr.tau = tau;
    try {
      SnapshotCohort raw = build_snapshot(records, tau, config.preprocess);
      tr.cohort_size_raw = raw.size();
      tr.cohort = trim(raw);
      tr.assumptions = assumption_checks(tr.cohort);

      const auto all = all_indices(tr.cohort.size());
      for (int arm : {0, 1}) {
        std::vector<SurvivalSample> samples;
        for (const auto& row : tr.cohort.rows)
          if (row.treatment == arm) samples.push_back({row.residual_time, row.event_flag});
        if (!samples.empty())
          (arm ? tr.km_treated : tr.km_controls) = km_fit(samples);
      }

      tr.models.resize(config.models.size());
      for (std::size_t gi = 0; gi < config.models.size(); ++gi) {
        tr.models[gi].model = config.models[gi].kind;
        tr.models[gi].metric_cells.resize(config.preprocess.n_repeats);
        for (const auto& e : config.estimators)
          tr.models[gi].estimator_cells[e].resize(config.preprocess.n_repeats);
      }

      const int n_repeats = config.preprocess.n_repeats;
      unsigned workers = config.max_workers > 0
                             ? static_cast<unsigned>(config.max_workers)
                             : std::max(1u, std::thread::hardware_concurrency());
      workers = std::min<unsigned>(workers, static_cast<unsigned>(n_repeats));
      std::atomic<int> next{0};
      auto run_repeats = [&]() {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= n_repeats) return;
          compute_repeat(config, tr.cohort, tau, r, tr.models);
        }
      };
      if (workers <= 1) {
        run_repeats();
      } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_repeats);
        for (auto& t : pool) t.join();
      }
    } catch (const std::exception& e) {
      tr.status = "failed";
      tr.message = e.what();
    }

    if (tr.status == "ok") {
      write_metrics_table(dir, tr);
      write_ate_table(dir, config, tr);
      write_ite_and_subgroups(dir, tr);
    }
    result.taus.push_back(std::move(tr));
  }

  write_manifest(dir, result);
  return result;
}

AblationResult run_ablation(const ExperimentConfig& config) {
  config.validate();
  if (!config.preprocess.include_risk_scores)
    throw std::invalid_argument("ablation needs risk scores enabled in the base config");

  AblationResult paired;
  ExperimentConfig full = config;
  full.output_dir = (std::filesystem::path(config.output_dir) / "full").string();
  paired.full = run_experiment(full);

  ExperimentConfig ablated = config;
  ablated.preprocess.include_risk_scores = false;
  ablated.output_dir = (std::filesystem::path(config.output_dir) / "ablation").string();
  paired.ablated = run_experiment(ablated);

  const std::filesystem::path dir(config.output_dir);
  for (std::size_t ti = 0; ti < paired.full.taus.size(); ++ti) {
    const auto& tf = paired.full.taus[ti];
    const auto& ta = paired.ablated.taus[ti];
    std::ofstream out(dir / ("ablation_" + std::to_string(tf.tau) + ".csv"));
    out << "model,estimator,full_ate,full_std,full_status,ablated_ate,ablated_std,"
           "ablated_status\n";
    if (tf.status != "ok" || ta.status != "ok") continue;
    for (std::size_t gi = 0; gi < tf.models.size(); ++gi) {
      for (const auto& [estimator, cells] : tf.models[gi].estimator_cells) {
        auto summarize = [](const std::vector<EstimatorCell>& cs) {
          std::vector<double> ates;
          for (const auto& c : cs)
            if (c.status == "ok") ates.push_back(c.effect.ate);
          return ates;
        };
        const auto full_ates = summarize(cells);
        const auto abl_ates = summarize(ta.models[gi].estimator_cells.at(estimator));
        out << tf.models[gi].model << ',' << estimator;
        if (full_ates.empty())
          out << ",,,failed";
        else
          out << ',' << fmt_double(mean(full_ates)) << ',' << fmt_double(sample_std(full_ates))
              << ",ok";
        if (abl_ates.empty())
          out << ",,,failed";
        else
          out << ',' << fmt_double(mean(abl_ates)) << ',' << fmt_double(sample_std(abl_ates))
              << ",ok";
        out << "\n";
      }
    }
  }
  return paired;
}

void write_curve_csv(const std::filesystem::path& path, const SurvivalCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "u,s\n";
  for (std::size_t i = 0; i < curve.grid.size(); ++i)
    out << fmt_exact(curve.grid[i]) << ',' << fmt_exact(curve.values[i]) << "\n";
}

SurvivalCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line); // header
  SurvivalCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    curve.grid.push_back(std::stod(line.substr(0, comma)));
    curve.values.push_back(std::stod(line.substr(comma + 1)));
  }
  curve.validate();
  return curve;
}

void emit_plot_data(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::ofstream trend(dir / "ate_trend.csv");
  trend << "tau,model,estimator,ate,ate_std,status\n";
  for (const auto& tr : result.taus) {
    for (const auto& m : tr.models) {
      for (const auto& [estimator, cells] : m.estimator_cells) {
        std::vector<double> ates;
        for (const auto& cell : cells)
          if (cell.status == "ok") ates.push_back(cell.effect.ate);
        trend << tr.tau << ',' << m.model << ',' << estimator;
        if (ates.empty())
          trend << ",,,failed\n";
        else
          trend << ',' << fmt_double(mean(ates)) << ',' << fmt_double(sample_std(ates))
                << ",ok\n";
      }
    }
  }

  std::ofstream hist(dir / "ite_hist.csv");
  hist << "tau,model,estimator,repeat,label_key,label_value,bin_lo,bin_hi,count\n";
  for (const auto& tr : result.taus) {
    if (tr.status != "ok") continue;
    for (const auto& m : tr.models) {
      for (const auto& [estimator, cells] : m.estimator_cells) {
        for (const auto& cell : cells) {
          if (cell.status != "ok") continue;
          for (const auto& stat : subgroup_ite_report(cell.effect, tr.cohort)) {
            for (std::size_t b = 0; b < stat.bin_counts.size(); ++b) {
              hist << tr.tau << ',' << m.model << ',' << estimator << ',' << cell.repeat << ','
                   << stat.label_key << ',' << stat.label_value << ','
                   << fmt_double(stat.bin_edges[b]) << ',' << fmt_double(stat.bin_edges[b + 1])
                   << ',' << stat.bin_counts[b] << "\n";
            }
          }
        }
      }
    }
  }

  std::ofstream km(dir / "km_curves.csv");
  km << "tau,arm,u,s\n";
  for (const auto& tr : result.taus) {
    if (tr.status != "ok") continue;
    for (int arm : {0, 1}) {
      const auto& curve = arm ? tr.km_treated : tr.km_controls;
      if (curve.grid.empty()) continue;
      for (std::size_t i = 0; i < curve.grid.size(); ++i)
        km << tr.tau << ',' << arm << ',' << fmt_exact(curve.grid[i]) << ','
           << fmt_exact(curve.values[i]) << "\n";
    }
  }
}

} // namespace survcause
