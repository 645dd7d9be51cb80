#include "survcause/types.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace survcause {

std::vector<Violation> validate_dataset(const std::vector<SubjectRecord>& records) {
  std::vector<Violation> out;
  auto flag = [&out](const std::string& id, std::string msg) {
    out.push_back({id, std::move(msg)});
  };
  for (const auto& r : records) {
    const int m = r.n_months();
    if (r.observed_time < 1)
      flag(r.id, "observed_time must be >= 1 month");
    if (r.observed_time > m)
      flag(r.id, "observed_time exceeds history");
    if (m > kMaxFollowupMonths)
      flag(r.id, "history longer than 96 months");
    if (static_cast<int>(r.coverage_days.size()) != m ||
        static_cast<int>(r.risk_scores.size()) != m)
      flag(r.id, "per-month series lengths disagree");
    for (int t = 0; t < m; ++t) {
      if (r.adherence[t] != 0 && r.adherence[t] != 1) {
        flag(r.id, "adherence indicator not 0/1 at month " + std::to_string(t + 1));
        break;
      }
    }
    for (std::size_t t = 0; t < r.coverage_days.size(); ++t) {
      if (r.coverage_days[t] < 0 || r.coverage_days[t] > 31) {
        flag(r.id, "coverage_days out of [0,31] at month " + std::to_string(t + 1));
        break;
      }
    }
    bool risk_bad = false;
    for (const auto& scores : r.risk_scores) {
      for (double s : scores) {
        if (std::isnan(s)) continue; // missing, handled at snapshot build
        if (s < 0.0 || s > 1.0) { risk_bad = true; break; }
      }
      if (risk_bad) break;
    }
    if (risk_bad) flag(r.id, "risk score out of [0,1]");
  }
  return out;
}

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::static_continuous: return "static_continuous";
    case FeatureKind::static_onehot: return "static_onehot";
    case FeatureKind::risk_score: return "risk_score";
    case FeatureKind::adherence_history: return "adherence_history";
    case FeatureKind::treatment: return "treatment";
  }
  return "unknown";
}

FeatureKind feature_kind_from_name(const std::string& name) {
  if (name == "static_continuous") return FeatureKind::static_continuous;
  if (name == "static_onehot") return FeatureKind::static_onehot;
  if (name == "risk_score") return FeatureKind::risk_score;
  if (name == "adherence_history") return FeatureKind::adherence_history;
  if (name == "treatment") return FeatureKind::treatment;
  throw std::invalid_argument("unknown feature kind: " + name);
}

int FeatureSchema::treatment_index() const {
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] == FeatureKind::treatment) return static_cast<int>(i);
  return -1;
}

int FeatureSchema::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

std::vector<int> SnapshotCohort::arm_indices(int treatment) const {
  std::vector<int> idx;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].treatment == treatment) idx.push_back(static_cast<int>(i));
  return idx;
}

void SnapshotCohort::validate() const {
  if (schema.names.size() != schema.kinds.size())
    throw std::invalid_argument("schema names/kinds length mismatch");
  const int a_col = schema.treatment_index();
  for (const auto& row : rows) {
    if (row.features.size() != schema.size())
      throw std::invalid_argument("row " + row.subject_id +
                                  ": feature vector does not match schema length");
    if (row.residual_time < 1.0)
      throw std::invalid_argument("row " + row.subject_id + ": residual_time < 1");
    if (a_col >= 0 && row.features[a_col] != static_cast<double>(row.treatment))
      throw std::invalid_argument("row " + row.subject_id +
                                  ": treatment disagrees with treatment feature");
  }
}

double SurvivalCurve::value_at(double u) const {
  if (grid.empty()) throw std::invalid_argument("empty survival curve");
  if (u < grid.front()) return 1.0;
  // last index with grid[i] <= u
  auto it = std::upper_bound(grid.begin(), grid.end(), u);
  return values[static_cast<std::size_t>(it - grid.begin()) - 1];
}

bool SurvivalCurve::is_valid(std::string* why) const {
  auto fail = [&why](const char* msg) {
    if (why) *why = msg;
    return false;
  };
  if (grid.empty() || grid.size() != values.size()) return fail("grid/values size mismatch or empty");
  if (grid.front() != 0.0) return fail("grid must start at 0");
  if (values.front() != 1.0) return fail("S(0) must be 1");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || !std::isfinite(values[i])) return fail("non-finite entry");
    if (i > 0 && grid[i] <= grid[i - 1]) return fail("grid not strictly increasing");
    if (i > 0 && values[i] > values[i - 1] + 1e-15) return fail("values increase");
    if (values[i] < -1e-15 || values[i] > 1.0 + 1e-15) return fail("values outside [0,1]");
  }
  return true;
}

void SurvivalCurve::validate() const {
  std::string why;
  if (!is_valid(&why)) throw std::invalid_argument("invalid survival curve: " + why);
}

EffectEstimate make_effect_estimate(std::vector<double> ites, std::string method_tag,
                                    std::string base_model_tag) {
  if (ites.empty()) throw std::invalid_argument("effect estimate needs at least one ITE");
  EffectEstimate e;
  e.ate = mean(ites);
  e.ites = std::move(ites);
  e.method_tag = std::move(method_tag);
  e.base_model_tag = std::move(base_model_tag);
  return e;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty span");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace survcause
