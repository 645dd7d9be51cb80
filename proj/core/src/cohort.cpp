#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "survcause/cohort.hpp"

namespace survcause {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::array<const char*, kNumRiskScores> kRiskColumns = {
    "risk_mortality", "risk_jail", "risk_shelter", "risk_hospitalization", "risk_overdose"};
const std::array<const char*, 3> kStaticFields = {"race", "gender", "education"};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

// lossless: these files must round-trip field-by-field
std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& msg) {
  throw std::runtime_error("line " + std::to_string(line_no) + ": " + msg);
}

int parse_int(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    line_error(line_no, std::string("cannot parse ") + what + " from '" + s + "'");
  }
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    line_error(line_no, std::string("cannot parse ") + what + " from '" + s + "'");
  }
}

struct PendingSubject {
  SubjectRecord record;
  std::map<int, std::size_t> month_lines; // month -> source line (dupe detection)
};

} // namespace

void PreprocessConfig::validate() const {
  if (adherence_threshold_days < 0 || adherence_threshold_days > 31)
    throw std::invalid_argument("adherence threshold must lie in [0, 31]");
  const double total = split_fractions[0] + split_fractions[1] + split_fractions[2];
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  for (double f : split_fractions)
    if (f < 0.0) throw std::invalid_argument("split fractions must be non-negative");
  if (snapshot_taus.empty()) throw std::invalid_argument("need at least one snapshot tau");
  for (int tau : snapshot_taus)
    if (tau < 1) throw std::invalid_argument("snapshot taus must be >= 1");
  if (n_repeats < 1) throw std::invalid_argument("n_repeats must be >= 1");
}

int binarize_adherence(int coverage_days, int threshold) {
  if (coverage_days < 0 || coverage_days > 31)
    throw std::invalid_argument("coverage_days out of [0, 31]: " + std::to_string(coverage_days));
  return coverage_days <= threshold ? 1 : 0;
}

std::vector<SubjectRecord> ingest_longitudinal(const std::filesystem::path& path,
                                               const PreprocessConfig& config) {
  config.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path.string());
  const auto header = split_line(line);
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);

  auto require = [&](const char* name) {
    auto it = col.find(name);
    if (it == col.end())
      throw std::runtime_error("schema error: missing column '" + std::string(name) + "'");
    return it->second;
  };
  const int c_id = require("subject_id");
  const int c_month = require("month");
  const int c_cov = require("coverage_days");
  const int c_age = require("age");
  const int c_race = require("race");
  const int c_gender = require("gender");
  const int c_edu = require("education");
  const int c_form = require("formulation");
  const int c_drug = require("drug_name");
  const int c_time = require("observed_time");
  const int c_event = require("event_flag");
  std::array<int, kNumRiskScores> c_risk{};
  for (std::size_t k = 0; k < kRiskColumns.size(); ++k) {
    auto it = col.find(kRiskColumns[k]);
    if (it == col.end()) {
      if (config.include_risk_scores)
        throw std::runtime_error("schema error: missing column '" +
                                 std::string(kRiskColumns[k]) +
                                 "' with risk scores enabled");
      c_risk[k] = -1;
    } else {
      c_risk[k] = it->second;
    }
  }

  std::vector<std::string> subject_order;
  std::map<std::string, PendingSubject> subjects;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size())
      line_error(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));

    const std::string& id = fields[c_id];
    if (id.empty()) line_error(line_no, "empty subject_id");
    const int month = parse_int(fields[c_month], line_no, "month");
    if (month < 1 || month > kMaxFollowupMonths) line_error(line_no, "month out of range");

    auto [it, inserted] = subjects.try_emplace(id);
    if (inserted) subject_order.push_back(id);
    PendingSubject& subject = it->second;
    if (auto dupe = subject.month_lines.find(month); dupe != subject.month_lines.end())
      line_error(line_no, "duplicate month " + std::to_string(month) + " for subject " + id);
    subject.month_lines[month] = line_no;

    SubjectRecord& r = subject.record;
    const int cov = parse_int(fields[c_cov], line_no, "coverage_days");
    const double age = parse_double(fields[c_age], line_no, "age");
    const int observed = parse_int(fields[c_time], line_no, "observed_time");
    const int event = parse_int(fields[c_event], line_no, "event_flag");
    if (event != 0 && event != 1) line_error(line_no, "event_flag must be 0 or 1");

    std::array<double, kNumRiskScores> risk{};
    for (std::size_t k = 0; k < kRiskColumns.size(); ++k) {
      if (c_risk[k] < 0 || fields[c_risk[k]].empty())
        risk[k] = std::nan("");
      else
        risk[k] = parse_double(fields[c_risk[k]], line_no, kRiskColumns[k]);
    }

    std::map<std::string, std::string> statics = {
        {"race", fields[c_race]}, {"gender", fields[c_gender]}, {"education", fields[c_edu]}};
    std::map<std::string, std::string> labels = {
        {"formulation", fields[c_form].empty() ? "not-covered" : fields[c_form]},
        {"drug_name", fields[c_drug].empty() ? "none" : fields[c_drug]}};

    if (inserted) {
      r.id = id;
      r.age = age;
      r.static_covariates = std::move(statics);
      r.subgroup_labels = std::move(labels);
      r.observed_time = observed;
      r.event_flag = event == 1;
    } else {
      if (r.age != age || r.static_covariates != statics || r.subgroup_labels != labels ||
          r.observed_time != observed || r.event_flag != (event == 1))
        line_error(line_no, "static fields disagree with earlier rows of subject " + id);
    }
    // month series grow as needed; gaps are rejected below
    const std::size_t m = static_cast<std::size_t>(month);
    if (r.adherence.size() < m) {
      r.adherence.resize(m, -1);
      r.coverage_days.resize(m, -1);
      r.risk_scores.resize(m);
    }
    r.coverage_days[m - 1] = cov;
    r.adherence[m - 1] = binarize_adherence(cov, config.adherence_threshold_days);
    r.risk_scores[m - 1] = risk;
  }

  std::vector<SubjectRecord> records;
  records.reserve(subject_order.size());
  for (const auto& id : subject_order) {
    PendingSubject& subject = subjects.at(id);
    for (std::size_t t = 0; t < subject.record.adherence.size(); ++t) {
      if (subject.record.adherence[t] < 0)
        throw std::runtime_error("subject " + id + ": missing month " + std::to_string(t + 1));
    }
    records.push_back(std::move(subject.record));
  }

  const auto violations = validate_dataset(records);
  if (!violations.empty()) {
    std::string msg = "dataset failed validation (" + std::to_string(violations.size()) +
                      " violations):";
    for (std::size_t i = 0; i < violations.size() && i < 5; ++i)
      msg += "\n  " + violations[i].subject_id + ": " + violations[i].message;
    throw std::runtime_error(msg);
  }
  return records;
}

void write_longitudinal_csv(const std::filesystem::path& path,
                            const std::vector<SubjectRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kLongitudinalHeader << "\n";
  for (const auto& r : records) {
    for (int t = 1; t <= r.n_months(); ++t) {
      out << r.id << ',' << t << ',' << r.coverage_days[t - 1];
      for (double score : r.risk_scores[t - 1])
        out << ',' << (std::isnan(score) ? "" : fmt_double(score));
      out << ',' << fmt_double(r.age);
      out << ',' << r.static_covariates.at("race") << ',' << r.static_covariates.at("gender")
          << ',' << r.static_covariates.at("education");
      out << ',' << r.subgroup_labels.at("formulation") << ',' << r.subgroup_labels.at("drug_name");
      out << ',' << r.observed_time << ',' << (r.event_flag ? 1 : 0) << "\n";
    }
  }
}

SnapshotCohort build_snapshot(const std::vector<SubjectRecord>& records, int tau,
                              const PreprocessConfig& config) {
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");

  // categorical levels, sorted for a deterministic layout; first level dropped
  std::map<std::string, std::set<std::string>> levels;
  for (const auto& field : kStaticFields) levels[field] = {};
  for (const auto& r : records)
    for (const auto& field : kStaticFields) levels[field].insert(r.static_covariates.at(field));

  SnapshotCohort cohort;
  cohort.tau = tau;
  auto add_col = [&cohort](std::string name, FeatureKind kind) {
    cohort.schema.names.push_back(std::move(name));
    cohort.schema.kinds.push_back(kind);
  };
  add_col("age", FeatureKind::static_continuous);
  for (const auto& field : kStaticFields) {
    bool first = true;
    for (const auto& level : levels[field]) {
      if (first) { first = false; continue; }
      add_col(std::string(field) + "=" + level, FeatureKind::static_onehot);
    }
  }
  if (config.include_risk_scores)
    for (const auto* name : kRiskColumns) add_col(name, FeatureKind::risk_score);
  for (int t = 1; t < tau; ++t)
    add_col("adherence_m" + std::to_string(t), FeatureKind::adherence_history);
  add_col("treatment", FeatureKind::treatment);

  for (const auto& r : records) {
    if (r.observed_time < tau + 1) continue;
    if (config.include_risk_scores) {
      bool missing = false;
      for (double s : r.risk_scores[tau - 1])
        if (std::isnan(s)) missing = true;
      if (missing) {
        ++cohort.dropped_missing_risk;
        continue;
      }
    }
    CohortRow row;
    row.subject_id = r.id;
    row.treatment = r.adherence[tau - 1];
    row.residual_time = static_cast<double>(r.observed_time - tau);
    row.event_flag = r.event_flag;
    row.subgroup_labels = r.subgroup_labels;
    std::string stratum;
    for (const auto& field : kStaticFields) {
      if (!stratum.empty()) stratum += '|';
      stratum += std::string(field) + "=" + r.static_covariates.at(field);
    }
    row.stratum = std::move(stratum);

    row.features.reserve(cohort.schema.size());
    row.features.push_back(r.age);
    for (const auto& field : kStaticFields) {
      bool first = true;
      for (const auto& level : levels[field]) {
        if (first) { first = false; continue; }
        row.features.push_back(r.static_covariates.at(field) == level ? 1.0 : 0.0);
      }
    }
    if (config.include_risk_scores)
      for (double s : r.risk_scores[tau - 1]) row.features.push_back(s);
    for (int t = 1; t < tau; ++t) row.features.push_back(static_cast<double>(r.adherence[t - 1]));
    row.features.push_back(static_cast<double>(row.treatment));
    cohort.rows.push_back(std::move(row));
  }
  if (cohort.rows.empty())
    throw std::runtime_error("empty cohort at tau=" + std::to_string(tau));
  cohort.validate();
  return cohort;
}

SnapshotCohort trim(const SnapshotCohort& cohort) {
  std::map<std::string, std::pair<int, int>> arms; // stratum -> (controls, treated)
  for (const auto& row : cohort.rows) {
    auto& a = arms[row.stratum];
    (row.treatment ? a.second : a.first) += 1;
  }
  SnapshotCohort out;
  out.tau = cohort.tau;
  out.schema = cohort.schema;
  out.dropped_missing_risk = cohort.dropped_missing_risk;
  for (const auto& row : cohort.rows) {
    const auto& a = arms[row.stratum];
    if (a.first > 0 && a.second > 0) out.rows.push_back(row);
  }
  if (out.rows.empty()) throw std::runtime_error("trimming removed every row");
  return out;
}

std::pair<SnapshotCohort, NormalizationStats> encode_and_normalize(
    const SnapshotCohort& cohort, const NormalizationStats* stats) {
  cohort.validate();
  const auto& schema = cohort.schema;
  const int n = static_cast<int>(cohort.size());

  NormalizationStats fitted;
  if (stats == nullptr) {
    for (int j = 0; j < static_cast<int>(schema.size()); ++j) {
      const FeatureKind kind = schema.kinds[j];
      if (kind != FeatureKind::static_continuous && kind != FeatureKind::risk_score) continue;
      std::vector<double> col(n);
      for (int i = 0; i < n; ++i) col[i] = cohort.rows[i].features[j];
      const double m = mean(col);
      const double sd = sample_std(col);
      if (sd > 0.0) {
        fitted.feature_names.push_back(schema.names[j]);
        fitted.mean.push_back(m);
        fitted.stddev.push_back(sd);
      } else {
        fitted.dropped.push_back(schema.names[j]);
      }
    }
    stats = &fitted;
  }

  // per-column action: keep (maybe z-scored) or drop
  std::vector<int> keep_cols;
  std::vector<double> offsets, scales;
  for (int j = 0; j < static_cast<int>(schema.size()); ++j) {
    const FeatureKind kind = schema.kinds[j];
    const bool continuous =
        kind == FeatureKind::static_continuous || kind == FeatureKind::risk_score;
    if (!continuous) {
      keep_cols.push_back(j);
      offsets.push_back(0.0);
      scales.push_back(1.0);
      continue;
    }
    const auto& name = schema.names[j];
    auto it = std::find(stats->feature_names.begin(), stats->feature_names.end(), name);
    if (it != stats->feature_names.end()) {
      const std::size_t k = static_cast<std::size_t>(it - stats->feature_names.begin());
      keep_cols.push_back(j);
      offsets.push_back(stats->mean[k]);
      scales.push_back(1.0 / stats->stddev[k]);
    } else if (std::find(stats->dropped.begin(), stats->dropped.end(), name) !=
               stats->dropped.end()) {
      continue; // zero variance at fit time
    } else {
      throw std::invalid_argument("unseen feature at transform time: " + name);
    }
  }

  SnapshotCohort out;
  out.tau = cohort.tau;
  out.dropped_missing_risk = cohort.dropped_missing_risk;
  for (std::size_t c = 0; c < keep_cols.size(); ++c) {
    out.schema.names.push_back(schema.names[keep_cols[c]]);
    out.schema.kinds.push_back(schema.kinds[keep_cols[c]]);
  }
  out.rows.reserve(cohort.rows.size());
  for (const auto& row : cohort.rows) {
    CohortRow r = row;
    r.features.clear();
    r.features.reserve(keep_cols.size());
    for (std::size_t c = 0; c < keep_cols.size(); ++c)
      r.features.push_back((row.features[keep_cols[c]] - offsets[c]) * scales[c]);
    out.rows.push_back(std::move(r));
  }
  out.validate();
  return {std::move(out), *stats};
}

SplitIndices split(const SnapshotCohort& cohort, std::array<double, 3> fractions,
                   std::uint64_t seed) {
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split fractions must sum to 1");
  const int n = static_cast<int>(cohort.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  const int n_train = static_cast<int>(std::floor(fractions[0] * n));
  const int n_val = static_cast<int>(std::floor(fractions[1] * n));
  SplitIndices parts;
  parts.train.assign(idx.begin(), idx.begin() + n_train);
  parts.validation.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  parts.test.assign(idx.begin() + n_train + n_val, idx.end());
  if (parts.train.empty() || (fractions[1] > 0.0 && parts.validation.empty()) ||
      parts.test.empty())
    throw std::invalid_argument("split produced an empty part");
  std::sort(parts.train.begin(), parts.train.end());
  std::sort(parts.validation.begin(), parts.validation.end());
  std::sort(parts.test.begin(), parts.test.end());
  return parts;
}

void write_cohort_csv(const std::filesystem::path& path, const SnapshotCohort& cohort) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "subject_id,treatment,residual_time,event_flag,stratum,formulation,drug_name";
  for (const auto& name : cohort.schema.names) out << ",z:" << name;
  out << "\n";
  for (const auto& row : cohort.rows) {
    out << row.subject_id << ',' << row.treatment << ',' << fmt_double(row.residual_time) << ','
        << (row.event_flag ? 1 : 0) << ',' << row.stratum << ','
        << row.subgroup_labels.at("formulation") << ',' << row.subgroup_labels.at("drug_name");
    for (double v : row.features) out << ',' << fmt_double(v);
    out << "\n";
  }

  ordered_json schema;
  schema["tau"] = cohort.tau;
  schema["dropped_missing_risk"] = cohort.dropped_missing_risk;
  schema["names"] = cohort.schema.names;
  std::vector<std::string> kinds;
  for (auto kind : cohort.schema.kinds) kinds.emplace_back(feature_kind_name(kind));
  schema["kinds"] = kinds;
  std::ofstream sidecar(path.string() + ".schema.json");
  sidecar << schema.dump(2) << "\n";
}

SnapshotCohort read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream sidecar(path.string() + ".schema.json");
  if (!sidecar) throw std::runtime_error("cannot open " + path.string() + ".schema.json");
  const auto schema_json = ordered_json::parse(sidecar);

  SnapshotCohort cohort;
  cohort.tau = schema_json.at("tau").get<int>();
  cohort.dropped_missing_risk = schema_json.at("dropped_missing_risk").get<int>();
  cohort.schema.names = schema_json.at("names").get<std::vector<std::string>>();
  for (const auto& kind : schema_json.at("kinds"))
    cohort.schema.kinds.push_back(feature_kind_from_name(kind.get<std::string>()));

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty cohort file");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != 7 + cohort.schema.size())
      line_error(line_no, "wrong field count in cohort file");
    CohortRow row;
    row.subject_id = fields[0];
    row.treatment = parse_int(fields[1], line_no, "treatment");
    row.residual_time = parse_double(fields[2], line_no, "residual_time");
    row.event_flag = parse_int(fields[3], line_no, "event_flag") == 1;
    row.stratum = fields[4];
    row.subgroup_labels = {{"formulation", fields[5]}, {"drug_name", fields[6]}};
    for (std::size_t j = 0; j < cohort.schema.size(); ++j)
      row.features.push_back(parse_double(fields[7 + j], line_no, "feature"));
    cohort.rows.push_back(std::move(row));
  }
  cohort.validate();
  return cohort;
}

void write_normalization_stats(const std::filesystem::path& path,
                               const NormalizationStats& stats) {
  ordered_json j;
  j["feature_names"] = stats.feature_names;
  j["mean"] = stats.mean;
  j["stddev"] = stats.stddev;
  j["dropped"] = stats.dropped;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

NormalizationStats read_normalization_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto j = ordered_json::parse(in);
  NormalizationStats stats;
  stats.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  stats.mean = j.at("mean").get<std::vector<double>>();
  stats.stddev = j.at("stddev").get<std::vector<double>>();
  stats.dropped = j.at("dropped").get<std::vector<std::string>>();
  return stats;
}

} // namespace survcause
