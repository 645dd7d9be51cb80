#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "survcause/effects.hpp"

namespace survcause {

namespace {

std::vector<int> all_rows(const SnapshotCohort& cohort) {
  std::vector<int> idx(cohort.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<int> resolve_fit_rows(const SnapshotCohort& cohort, std::span<const int> fit_rows) {
  if (fit_rows.empty()) return all_rows(cohort);
  std::vector<int> idx(fit_rows.begin(), fit_rows.end());
  for (int i : idx)
    if (i < 0 || i >= static_cast<int>(cohort.size()))
      throw std::invalid_argument("fit row index out of range");
  return idx;
}

// Design matrix over the given rows; drop_col < 0 keeps every column.
Eigen::MatrixXd design_matrix(const SnapshotCohort& cohort, const std::vector<int>& rows,
                              int drop_col) {
  const int p = static_cast<int>(cohort.schema.size()) - (drop_col >= 0 ? 1 : 0);
  Eigen::MatrixXd x(rows.size(), p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& f = cohort.rows[rows[r]].features;
    int c = 0;
    for (int j = 0; j < static_cast<int>(f.size()); ++j) {
      if (j == drop_col) continue;
      x(r, c++) = f[j];
    }
  }
  return x;
}

FeatureSchema schema_without(const FeatureSchema& schema, int drop_col) {
  if (drop_col < 0) return schema;
  FeatureSchema out;
  for (int j = 0; j < static_cast<int>(schema.size()); ++j) {
    if (j == drop_col) continue;
    out.names.push_back(schema.names[j]);
    out.kinds.push_back(schema.kinds[j]);
  }
  return out;
}

void extract_outcomes(const SnapshotCohort& cohort, const std::vector<int>& rows,
                      std::vector<double>& times, std::vector<int>& events) {
  times.clear();
  events.clear();
  for (int i : rows) {
    times.push_back(cohort.rows[i].residual_time);
    events.push_back(cohort.rows[i].event_flag ? 1 : 0);
  }
}

int count_events(const SnapshotCohort& cohort, const std::vector<int>& rows) {
  int n = 0;
  for (int i : rows) n += cohort.rows[i].event_flag ? 1 : 0;
  return n;
}

std::vector<int> arm_subset(const SnapshotCohort& cohort, const std::vector<int>& rows, int arm) {
  std::vector<int> out;
  for (int i : rows)
    if (cohort.rows[i].treatment == arm) out.push_back(i);
  return out;
}

// Columns entering the matching distance: everything except treatment, with
// continuous kinds (age, risk scores) z-scored on the cohort and binary kinds
// (one-hots, adherence history) left as-is. Zero-variance columns drop out.
struct DistanceSpace {
  std::vector<int> cols;
  std::vector<double> offset; // value transformed as (z - offset) * scale
  std::vector<double> scale;
};

DistanceSpace matching_distance_space(const SnapshotCohort& cohort) {
  DistanceSpace space;
  const int n = static_cast<int>(cohort.size());
  for (int j = 0; j < static_cast<int>(cohort.schema.size()); ++j) {
    const FeatureKind kind = cohort.schema.kinds[j];
    if (kind == FeatureKind::treatment) continue;
    const bool continuous =
        kind == FeatureKind::static_continuous || kind == FeatureKind::risk_score;
    if (continuous) {
      double m = 0.0;
      for (const auto& row : cohort.rows) m += row.features[j];
      m /= n;
      double ss = 0.0;
      for (const auto& row : cohort.rows) {
        const double d = row.features[j] - m;
        ss += d * d;
      }
      const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
      if (sd <= 0.0) continue; // constant column carries no distance signal
      space.cols.push_back(j);
      space.offset.push_back(m);
      space.scale.push_back(1.0 / sd);
    } else {
      space.cols.push_back(j);
      space.offset.push_back(0.0);
      space.scale.push_back(1.0);
    }
  }
  return space;
}

double squared_distance(const DistanceSpace& space, const CohortRow& a, const CohortRow& b) {
  double d2 = 0.0;
  for (std::size_t c = 0; c < space.cols.size(); ++c) {
    const int j = space.cols[c];
    const double d = (a.features[j] - b.features[j]) * space.scale[c];
    d2 += d * d;
  }
  return d2;
}

std::vector<double> factual_rmets(const SnapshotCohort& cohort, const SurvivalModel& model,
                                  double horizon) {
  std::vector<double> mu(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i)
    mu[i] = rmet(predict_survival(model, cohort.rows[i].features), horizon);
  return mu;
}

} // namespace

void HorizonConfig::validate() const {
  if (months < 1) throw std::invalid_argument("horizon must be >= 1 month");
}

double rmet(const SurvivalCurve& curve, double horizon_months) {
  curve.validate();
  if (horizon_months < 1.0) throw std::invalid_argument("horizon must be >= 1 month");
  double area = 0.0;
  for (std::size_t j = 0; j < curve.grid.size(); ++j) {
    const double lo = curve.grid[j];
    if (lo >= horizon_months) break;
    const double hi =
        j + 1 < curve.grid.size() ? std::min(curve.grid[j + 1], horizon_months) : horizon_months;
    area += curve.values[j] * (hi - lo);
  }
  return area;
}

std::string ModelSpec::tag() const {
  if (kind == "cox_ph") return "cox_ph";
  if (kind == "random_survival_forest") return "random_survival_forest";
  return kind;
}

void ModelSpec::validate() const {
  if (kind != "kaplan_meier" && kind != "cox_ph" && kind != "random_survival_forest")
    throw std::invalid_argument("unknown model kind: " + kind);
  if (cox_penalizer < 0.0) throw std::invalid_argument("penalizer must be >= 0");
  if (kind == "random_survival_forest") rsf.validate();
}

std::unique_ptr<SurvivalModel> fit_survival_model(const ModelSpec& spec,
                                                  const Eigen::MatrixXd& features,
                                                  std::span<const double> times,
                                                  std::span<const int> events,
                                                  FeatureSchema schema) {
  spec.validate();
  if (spec.kind == "kaplan_meier") {
    std::vector<SurvivalSample> samples(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) samples[i] = {times[i], events[i] != 0};
    return km_fit_model(samples);
  }
  if (spec.kind == "cox_ph")
    return std::move(coxph_fit(features, times, events, spec.cox_penalizer, std::move(schema)).model);
  return rsf_fit(features, times, events, spec.rsf, std::move(schema));
}

EffectEstimate t_learner_ate(const SnapshotCohort& cohort, const ModelSpec& spec,
                             HorizonConfig horizon, std::span<const int> fit_rows) {
  horizon.validate();
  cohort.validate();
  const auto fit_set = resolve_fit_rows(cohort, fit_rows);
  const int a_col = cohort.schema.treatment_index();

  std::unique_ptr<SurvivalModel> arm_models[2];
  for (int arm : {0, 1}) {
    const auto arm_rows = arm_subset(cohort, fit_set, arm);
    if (arm_rows.empty()) throw std::invalid_argument("positivity violated: one-armed cohort");
    if (count_events(cohort, arm_rows) == 0)
      throw std::invalid_argument(std::string("no events in the ") +
                                  (arm ? "treated" : "control") + " arm");
    std::vector<double> times;
    std::vector<int> events;
    extract_outcomes(cohort, arm_rows, times, events);
    arm_models[arm] = fit_survival_model(spec, design_matrix(cohort, arm_rows, a_col), times,
                                         events, schema_without(cohort.schema, a_col));
  }

  std::vector<double> ites(cohort.size());
  std::vector<double> z;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& f = cohort.rows[i].features;
    z.clear();
    for (int j = 0; j < static_cast<int>(f.size()); ++j)
      if (j != a_col) z.push_back(f[j]);
    const double mu1 = rmet(predict_survival(*arm_models[1], z), horizon.months);
    const double mu0 = rmet(predict_survival(*arm_models[0], z), horizon.months);
    ites[i] = mu1 - mu0;
  }
  return make_effect_estimate(std::move(ites), "t_learner", spec.tag());
}

EffectEstimate s_learner_ate(const SnapshotCohort& cohort, const ModelSpec& spec,
                             HorizonConfig horizon, std::span<const int> fit_rows) {
  horizon.validate();
  cohort.validate();
  const int a_col = cohort.schema.treatment_index();
  if (a_col < 0) throw std::invalid_argument("treatment feature absent from schema");
  const auto fit_set = resolve_fit_rows(cohort, fit_rows);
  if (count_events(cohort, fit_set) == 0) throw std::invalid_argument("no events in cohort");

  std::vector<double> times;
  std::vector<int> events;
  extract_outcomes(cohort, fit_set, times, events);
  auto model = fit_survival_model(spec, design_matrix(cohort, fit_set, -1), times, events,
                                  cohort.schema);

  std::vector<double> ites(cohort.size());
  std::vector<double> z;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    z.assign(cohort.rows[i].features.begin(), cohort.rows[i].features.end());
    z[a_col] = 1.0;
    const double mu1 = rmet(predict_survival(*model, z), horizon.months);
    z[a_col] = 0.0;
    const double mu0 = rmet(predict_survival(*model, z), horizon.months);
    ites[i] = mu1 - mu0;
  }
  return make_effect_estimate(std::move(ites), "s_learner", spec.tag());
}

std::vector<std::vector<int>> matching_neighbor_sets(const SnapshotCohort& cohort, int k) {
  if (k < 1) throw std::invalid_argument("matching K must be >= 1");
  const auto space = matching_distance_space(cohort);
  std::vector<int> arm_rows[2] = {cohort.arm_indices(0), cohort.arm_indices(1)};
  for (int arm : {0, 1}) {
    if (static_cast<int>(arm_rows[arm].size()) < k)
      throw std::invalid_argument("matching K=" + std::to_string(k) + " exceeds the " +
                                  (arm ? "treated" : "control") + " group size " +
                                  std::to_string(arm_rows[arm].size()));
  }

  std::vector<std::vector<int>> neighbors(cohort.size());
  std::vector<std::pair<double, int>> scored;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& candidates = arm_rows[1 - cohort.rows[i].treatment];
    scored.clear();
    scored.reserve(candidates.size());
    for (int j : candidates)
      scored.emplace_back(squared_distance(space, cohort.rows[i], cohort.rows[j]), j);
    // equal distances resolve to the lowest row index
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end());
    neighbors[i].reserve(k);
    for (int m = 0; m < k; ++m) neighbors[i].push_back(scored[m].second);
  }
  return neighbors;
}

EffectEstimate matching_ate(const SnapshotCohort& cohort, const ModelSpec& spec,
                            const MatchingConfig& matching, HorizonConfig horizon,
                            std::span<const int> fit_rows) {
  horizon.validate();
  cohort.validate();
  const int a_col = cohort.schema.treatment_index();
  if (a_col < 0) throw std::invalid_argument("treatment feature absent from schema");
  const auto fit_set = resolve_fit_rows(cohort, fit_rows);
  if (count_events(cohort, fit_set) == 0) throw std::invalid_argument("no events in cohort");

  const auto neighbors = matching_neighbor_sets(cohort, matching.k);

  std::vector<double> times;
  std::vector<int> events;
  extract_outcomes(cohort, fit_set, times, events);
  auto model = fit_survival_model(spec, design_matrix(cohort, fit_set, -1), times, events,
                                  cohort.schema);
  const auto mu = factual_rmets(cohort, *model, horizon.months);

  std::vector<double> ites(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    double counterfactual = 0.0;
    for (int j : neighbors[i]) counterfactual += mu[j];
    counterfactual /= static_cast<double>(neighbors[i].size());
    const int sign = 2 * cohort.rows[i].treatment - 1;
    ites[i] = sign * (mu[i] - counterfactual);
  }
  return make_effect_estimate(std::move(ites),
                              "matching(" + std::to_string(matching.k) + ")", spec.tag());
}

EffectEstimate unadjusted_km_ate(const SnapshotCohort& cohort, HorizonConfig horizon,
                                 std::span<const int> fit_rows) {
  horizon.validate();
  cohort.validate();
  const auto fit_set = resolve_fit_rows(cohort, fit_rows);
  double arm_rmet[2] = {0.0, 0.0};
  for (int arm : {0, 1}) {
    const auto arm_rows = arm_subset(cohort, fit_set, arm);
    if (arm_rows.empty()) throw std::invalid_argument("positivity violated: one-armed cohort");
    std::vector<SurvivalSample> samples;
    samples.reserve(arm_rows.size());
    for (int i : arm_rows)
      samples.push_back({cohort.rows[i].residual_time, cohort.rows[i].event_flag});
    arm_rmet[arm] = rmet(km_fit(samples), horizon.months);
  }
  const double ate = arm_rmet[1] - arm_rmet[0];
  // group-level contrast: every row carries the ATE so mean(ites) == ate
  std::vector<double> ites(cohort.size(), ate);
  return make_effect_estimate(std::move(ites), "unadjusted_km", "kaplan_meier");
}

std::vector<SubgroupStat> subgroup_ite_report(const EffectEstimate& effects,
                                              const SnapshotCohort& cohort, int n_bins) {
  if (effects.ites.size() != cohort.size())
    throw std::invalid_argument("ITE count does not match cohort size");
  if (n_bins < 1) throw std::invalid_argument("n_bins must be >= 1");

  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (std::size_t i = 0; i < cohort.size(); ++i)
    for (const auto& [key, value] : cohort.rows[i].subgroup_labels)
      groups[{key, value}].push_back(effects.ites[i]);

  std::vector<SubgroupStat> report;
  for (const auto& [label, ites] : groups) {
    SubgroupStat stat;
    stat.label_key = label.first;
    stat.label_value = label.second;
    stat.count = static_cast<int>(ites.size());
    stat.mean_ite = mean(ites);
    stat.std_ite = sample_std(ites);
    double lo = *std::min_element(ites.begin(), ites.end());
    double hi = *std::max_element(ites.begin(), ites.end());
    if (hi <= lo) hi = lo + 1.0; // degenerate spread still needs one usable bin
    stat.bin_edges.resize(n_bins + 1);
    for (int b = 0; b <= n_bins; ++b)
      stat.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / n_bins;
    stat.bin_counts.assign(n_bins, 0);
    for (double v : ites) {
      int b = static_cast<int>((v - lo) / (hi - lo) * n_bins);
      b = std::clamp(b, 0, n_bins - 1);
      ++stat.bin_counts[b];
    }
    report.push_back(std::move(stat));
  }
  return report;
}

AssumptionReport assumption_checks(const SnapshotCohort& cohort) {
  AssumptionReport report;
  std::map<std::string, StratumBalance> strata;
  for (const auto& row : cohort.rows) {
    auto& s = strata[row.stratum];
    s.stratum = row.stratum;
    (row.treatment ? s.treated : s.controls) += 1;
    (row.treatment ? report.n_treated : report.n_controls) += 1;
    if (row.event_flag) (row.treatment ? report.events_treated : report.events_controls) += 1;
  }
  report.n_strata = static_cast<int>(strata.size());
  for (const auto& [key, s] : strata)
    if (s.treated == 0 || s.controls == 0) report.one_armed_strata.push_back(s);
  report.positivity_ok = report.one_armed_strata.empty() && report.n_treated > 0 &&
                         report.n_controls > 0;
  return report;
}

} // namespace survcause
