#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "survcause/synth.hpp"

namespace survcause {

namespace {

constexpr std::array<double, kNumRiskScores> kProxyHazardScales = {1.0, 0.85, 0.7, 0.55, 0.4};

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d4a68b021e06ebULL;
  return x ^ (x >> 31);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CovariateDraw {
  std::vector<double> x; // continuous values followed by categorical dummies
  std::vector<std::string> levels; // one per categorical field
  double linear_hazard = 0.0;      // strength * beta_Z' x
  double propensity = 0.0;
};

CovariateDraw draw_covariates(const DgpConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CovariateDraw d;
  d.x.reserve(cfg.covariate_dim());
  for (int k = 0; k < cfg.n_continuous; ++k) d.x.push_back(gauss(rng));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const auto& cat : cfg.categoricals) {
    const double u = unif(rng);
    double acc = 0.0;
    std::size_t chosen = cat.levels.size() - 1;
    for (std::size_t l = 0; l < cat.levels.size(); ++l) {
      acc += cat.probs[l];
      if (u < acc) { chosen = l; break; }
    }
    d.levels.push_back(cat.levels[chosen]);
    for (std::size_t l = 1; l < cat.levels.size(); ++l)
      d.x.push_back(l == chosen ? 1.0 : 0.0);
  }
  double eta_h = 0.0, eta_p = cfg.propensity_intercept;
  for (std::size_t k = 0; k < d.x.size(); ++k) {
    eta_h += cfg.covariate_loghr[k] * d.x[k];
    eta_p += cfg.confounder_strength * cfg.propensity_coefs[k] * d.x[k];
  }
  d.linear_hazard = cfg.confounder_strength * eta_h;
  d.propensity = sigmoid(eta_p);
  return d;
}

double truncated_exponential_mean(double rate, double horizon) {
  return (1.0 - std::exp(-rate * horizon)) / rate;
}

} // namespace

int DgpConfig::covariate_dim() const {
  int dim = n_continuous;
  for (const auto& cat : categoricals) dim += static_cast<int>(cat.levels.size()) - 1;
  return dim;
}

void DgpConfig::validate() const {
  if (n_subjects < 1) throw std::invalid_argument("n_subjects must be >= 1");
  if (n_continuous < 0) throw std::invalid_argument("n_continuous must be >= 0");
  if (baseline_hazard <= 0.0) throw std::invalid_argument("baseline hazard must be > 0");
  if (censoring_rate < 0.0) throw std::invalid_argument("censoring rate must be >= 0");
  if (horizon_months < 1 || horizon_months > kMaxFollowupMonths)
    throw std::invalid_argument("horizon must lie in [1, 96]");
  if (stabilization_month < 1) throw std::invalid_argument("stabilization_month must be >= 1");
  if (adherence_threshold_days < 0 || adherence_threshold_days > 30)
    throw std::invalid_argument("adherence threshold must lie in [0, 30]");
  if (risk_score_noise < 0.0) throw std::invalid_argument("risk_score_noise must be >= 0");
  for (const auto& cat : categoricals) {
    if (cat.levels.size() < 1 || cat.levels.size() != cat.probs.size())
      throw std::invalid_argument("categorical levels/probs mismatch for " + cat.field);
    double total = 0.0;
    for (double p : cat.probs) {
      if (p < 0.0) throw std::invalid_argument("negative level probability for " + cat.field);
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("level probabilities must sum to 1 for " + cat.field);
  }
  const int dim = covariate_dim();
  if (static_cast<int>(propensity_coefs.size()) != dim)
    throw std::invalid_argument("propensity_coefs length must equal covariate dimension");
  if (static_cast<int>(covariate_loghr.size()) != dim)
    throw std::invalid_argument("covariate_loghr length must equal covariate dimension");
}

SynthDataset generate(const DgpConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(mix_seed(cfg.seed));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double horizon = static_cast<double>(cfg.horizon_months);
  SynthDataset out;
  out.records.reserve(cfg.n_subjects);
  out.truth.reserve(cfg.n_subjects);

  for (int i = 0; i < cfg.n_subjects; ++i) {
    const CovariateDraw cov = draw_covariates(cfg, rng);
    const double rate0 = cfg.baseline_hazard * std::exp(cov.linear_hazard);
    const double rate1 = rate0 * std::exp(cfg.treatment_loghr);

    const int treatment = unif(rng) < cov.propensity ? 1 : 0;
    const double u_event = unif(rng);
    const double t_latent0 = -std::log(1.0 - u_event) / rate0;
    const double t_latent1 = -std::log(1.0 - u_event) / rate1;
    const double t_factual = treatment ? t_latent1 : t_latent0;
    const double c_latent = cfg.censoring_rate > 0.0
                                ? -std::log(1.0 - unif(rng)) / cfg.censoring_rate
                                : std::numeric_limits<double>::infinity();

    SubjectRecord r;
    char id[16];
    std::snprintf(id, sizeof(id), "s%06d", i + 1);
    r.id = id;
    // event months are capped at the horizon; only the exponential censoring
    // mechanism produces censored records
    const bool event = t_factual <= c_latent;
    r.event_flag = event;
    r.observed_time =
        static_cast<int>(std::min(std::ceil(event ? t_factual : c_latent), horizon));

    r.age = cfg.n_continuous >= 1 ? 40.0 + 10.0 * cov.x[0] : 40.0;
    for (const char* field : {"race", "gender", "education"}) r.static_covariates[field] = "all";
    for (std::size_t c = 0; c < cfg.categoricals.size(); ++c)
      r.static_covariates[cfg.categoricals[c].field] = cov.levels[c];

    static const std::array<const char*, 3> kFormulations = {"injectable", "non-injectable",
                                                             "not-covered"};
    static const std::array<const char*, 4> kDrugs = {"drug_a", "drug_b", "drug_c", "drug_d"};
    const double uf = unif(rng);
    r.subgroup_labels["formulation"] = kFormulations[uf < 0.25 ? 0 : (uf < 0.75 ? 1 : 2)];
    r.subgroup_labels["drug_name"] = kDrugs[static_cast<int>(unif(rng) * 4.0) % 4];

    // proxy scores: true 12-month event probabilities under hazards scaled per
    // column, so each column is an invertible transform of the confounder signal
    std::array<double, kNumRiskScores> proxy{};
    for (std::size_t k = 0; k < kProxyHazardScales.size(); ++k) {
      if (cfg.risk_scores_uninformative) {
        proxy[k] = unif(rng);
      } else {
        const double rate = cfg.baseline_hazard * std::exp(kProxyHazardScales[k] * cov.linear_hazard);
        double v = 1.0 - std::exp(-12.0 * rate);
        if (cfg.risk_score_noise > 0.0) v += cfg.risk_score_noise * gauss(rng);
        proxy[k] = std::clamp(v, 0.0, 1.0);
      }
    }

    std::uniform_int_distribution<int> stab(1, cfg.stabilization_month);
    const int s_i = stab(rng);
    std::uniform_int_distribution<int> low_days(0, cfg.adherence_threshold_days);
    std::uniform_int_distribution<int> high_days(cfg.adherence_threshold_days + 1, 31);
    const int n_months = r.observed_time;
    r.adherence.resize(n_months);
    r.coverage_days.resize(n_months);
    r.risk_scores.resize(n_months);
    for (int t = 1; t <= n_months; ++t) {
      const int a = t >= s_i ? treatment : (unif(rng) < 0.5 ? 1 : 0);
      r.adherence[t - 1] = a;
      r.coverage_days[t - 1] = a ? low_days(rng) : high_days(rng);
      r.risk_scores[t - 1] = proxy;
    }

    SubjectTruth truth;
    truth.potential_event_month = {std::ceil(t_latent0), std::ceil(t_latent1)};
    truth.potential_rmet = {truncated_exponential_mean(rate0, horizon),
                            truncated_exponential_mean(rate1, horizon)};
    truth.propensity = cov.propensity;
    out.records.push_back(std::move(r));
    out.truth.push_back(truth);
  }
  return out;
}

OracleAte oracle_ate(const DgpConfig& cfg, long n_mc) {
  cfg.validate();
  if (n_mc < 100000) throw std::invalid_argument("oracle_ate needs n_mc >= 1e5");
  std::mt19937_64 rng(mix_seed(cfg.seed ^ 0x0a11ce5ULL));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double horizon = static_cast<double>(cfg.horizon_months);

  double sum = 0.0, sumsq = 0.0;
  for (long j = 0; j < n_mc; ++j) {
    const CovariateDraw cov = draw_covariates(cfg, rng);
    const double rate0 = cfg.baseline_hazard * std::exp(cov.linear_hazard);
    const double rate1 = rate0 * std::exp(cfg.treatment_loghr);
    const double u = unif(rng);
    const double t0 = -std::log(1.0 - u) / rate0;
    const double t1 = -std::log(1.0 - u) / rate1;
    const double delta = std::min(t1, horizon) - std::min(t0, horizon);
    sum += delta;
    sumsq += delta * delta;
  }
  OracleAte result;
  result.ate = sum / static_cast<double>(n_mc);
  const double var = (sumsq - sum * sum / static_cast<double>(n_mc)) /
                     static_cast<double>(n_mc - 1);
  result.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_mc));
  return result;
}

} // namespace survcause
