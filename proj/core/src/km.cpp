#include <algorithm>
#include <map>
#include <stdexcept>

#include "survcause/survival.hpp"

namespace survcause {

namespace {

SurvivalCurve product_limit(std::span<const SurvivalSample> samples, bool complement_events) {
  if (samples.empty()) throw std::invalid_argument("empty sample");
  for (const auto& s : samples) {
    if (!(s.time >= 1.0)) throw std::invalid_argument("survival times must be >= 1 month");
  }
  // events and at-risk exits per distinct time
  std::map<double, std::pair<int, int>> counts; // time -> (events, total)
  for (const auto& s : samples) {
    const bool ev = complement_events ? !s.event : s.event;
    auto& c = counts[s.time];
    c.first += ev ? 1 : 0;
    c.second += 1;
  }
  SurvivalCurve curve;
  curve.grid.push_back(0.0);
  curve.values.push_back(1.0);
  double surv = 1.0;
  int at_risk = static_cast<int>(samples.size());
  for (const auto& [t, c] : counts) {
    const auto [d, n_leaving] = c;
    if (d > 0) {
      surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      curve.grid.push_back(t);
      curve.values.push_back(surv);
    }
    at_risk -= n_leaving;
  }
  return curve;
}

} // namespace

SurvivalCurve km_fit(std::span<const SurvivalSample> samples) {
  return product_limit(samples, false);
}

SurvivalCurve censoring_km_fit(std::span<const SurvivalSample> samples) {
  return product_limit(samples, true);
}

std::unique_ptr<KaplanMeierModel> km_fit_model(std::span<const SurvivalSample> samples) {
  return std::make_unique<KaplanMeierModel>(km_fit(samples));
}

SurvivalCurve predict_survival(const SurvivalModel& model, std::span<const double> z) {
  const auto& schema = model.schema();
  if (!schema.names.empty() && z.size() != schema.size()) {
    std::string msg = "feature vector of length " + std::to_string(z.size()) +
                      " does not match model schema of length " + std::to_string(schema.size());
    if (z.size() < schema.size()) {
      msg += "; missing:";
      for (std::size_t i = z.size(); i < schema.size(); ++i) msg += " " + schema.names[i];
    } else {
      msg += "; " + std::to_string(z.size() - schema.size()) + " extra trailing features";
    }
    throw std::invalid_argument(msg);
  }
  SurvivalCurve curve = model.predict_curve(z);
  curve.validate();
  return curve;
}

} // namespace survcause
