#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "survcause/synth.hpp"

using namespace survcause;

namespace {

DgpConfig base_config() {
  DgpConfig cfg;
  cfg.n_subjects = 500;
  cfg.n_continuous = 1;
  cfg.propensity_coefs = {0.6};
  cfg.covariate_loghr = {0.5};
  cfg.baseline_hazard = 0.05;
  cfg.treatment_loghr = 0.7;
  cfg.censoring_rate = 0.0125;
  cfg.seed = 400;
  return cfg;
}

} // namespace

TEST_CASE("generated datasets pass domain validation") {
  auto cfg = base_config();
  cfg.categoricals = {{"race", {"a", "b", "c"}, {0.5, 0.3, 0.2}}};
  cfg.propensity_coefs = {0.6, 0.2, -0.1};
  cfg.covariate_loghr = {0.5, 0.1, 0.0};
  const auto data = generate(cfg);
  CHECK(data.records.size() == 500);
  CHECK(validate_dataset(data.records).empty());
  CHECK(data.truth.size() == data.records.size());
}

TEST_CASE("a null treatment effect gives identical potential outcomes") {
  auto cfg = base_config();
  cfg.treatment_loghr = 0.0;
  const auto data = generate(cfg);
  for (const auto& t : data.truth) {
    CHECK(t.potential_event_month[0] == t.potential_event_month[1]);
    CHECK(t.potential_rmet[0] == t.potential_rmet[1]);
  }
}

TEST_CASE("zero censoring rate leaves no censored records") {
  auto cfg = base_config();
  cfg.censoring_rate = 0.0;
  const auto data = generate(cfg);
  for (const auto& r : data.records) CHECK(r.event_flag);
}

TEST_CASE("generation is bit-identical under a fixed seed") {
  const auto a = generate(base_config());
  const auto b = generate(base_config());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].id == b.records[i].id);
    CHECK(a.records[i].observed_time == b.records[i].observed_time);
    CHECK(a.records[i].event_flag == b.records[i].event_flag);
    CHECK(a.records[i].adherence == b.records[i].adherence);
    CHECK(a.records[i].coverage_days == b.records[i].coverage_days);
    CHECK(a.records[i].age == b.records[i].age);
    CHECK(a.truth[i].potential_event_month == b.truth[i].potential_event_month);
  }
}

TEST_CASE("empirical treated share tracks the mean propensity") {
  auto cfg = base_config();
  cfg.n_subjects = 4000;
  const auto data = generate(cfg);
  double mean_propensity = 0.0;
  int treated = 0;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    mean_propensity += data.truth[i].propensity / data.records.size();
    // treatment is the stabilized adherence state; month 3 onward is exact
    treated += data.records[i].adherence[std::min(2, data.records[i].n_months() - 1)];
  }
  const double share = static_cast<double>(treated) / data.records.size();
  const double se = std::sqrt(mean_propensity * (1.0 - mean_propensity) / data.records.size());
  CHECK(std::abs(share - mean_propensity) <= 3.0 * se + 0.02);
}

TEST_CASE("oracle matches the closed-form truncated exponential mean") {
  DgpConfig cfg;
  cfg.n_subjects = 1;
  cfg.n_continuous = 0;
  cfg.propensity_coefs = {};
  cfg.covariate_loghr = {};
  cfg.baseline_hazard = 0.05;
  cfg.treatment_loghr = std::log(2.0); // rate doubles under treatment
  cfg.horizon_months = 96;
  cfg.seed = 9;
  const auto oracle = oracle_ate(cfg, 200000);
  const double m = 96.0;
  auto truncated_mean = [m](double rate) { return (1.0 - std::exp(-rate * m)) / rate; };
  const double closed_form = truncated_mean(0.1) - truncated_mean(0.05);
  CHECK(std::abs(oracle.ate - closed_form) <= 3.0 * oracle.std_error);
}

TEST_CASE("a protective treatment has a positive oracle ATE and vice versa") {
  auto cfg = base_config();
  cfg.treatment_loghr = -0.5;
  CHECK(oracle_ate(cfg, 100000).ate > 0.0);
  cfg.treatment_loghr = 0.5;
  CHECK(oracle_ate(cfg, 100000).ate < 0.0);
  cfg.treatment_loghr = 0.0;
  const auto null_oracle = oracle_ate(cfg, 100000);
  CHECK(std::abs(null_oracle.ate) <= 3.0 * std::max(null_oracle.std_error, 1e-12));
}

TEST_CASE("oracle enforces its sample-size precondition") {
  CHECK_THROWS_AS(oracle_ate(base_config(), 10), std::invalid_argument);
}

TEST_CASE("config invariants are validated") {
  auto cfg = base_config();
  cfg.baseline_hazard = 0.0;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = base_config();
  cfg.propensity_coefs = {0.1, 0.2};
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
  cfg = base_config();
  cfg.categoricals = {{"race", {"a", "b"}, {0.5, 0.4}}};
  cfg.propensity_coefs = {0.1, 0.0};
  cfg.covariate_loghr = {0.1, 0.0};
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument); // probs do not sum to 1
}
