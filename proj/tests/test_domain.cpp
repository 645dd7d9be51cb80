#include <doctest.h>

#include "survcause/types.hpp"

using namespace survcause;

namespace {

SubjectRecord valid_record(const std::string& id, int observed, bool event, int months) {
  SubjectRecord r;
  r.id = id;
  r.observed_time = observed;
  r.event_flag = event;
  r.adherence.assign(months, 0);
  r.coverage_days.assign(months, 20);
  r.risk_scores.assign(months, {0.1, 0.2, 0.3, 0.4, 0.5});
  r.age = 40.0;
  r.static_covariates = {{"race", "a"}, {"gender", "m"}, {"education", "hs"}};
  r.subgroup_labels = {{"formulation", "injectable"}, {"drug_name", "drug_a"}};
  return r;
}

bool has_violation(const std::vector<Violation>& vs, const std::string& id,
                   const std::string& fragment) {
  for (const auto& v : vs)
    if (v.subject_id == id && v.message.find(fragment) != std::string::npos) return true;
  return false;
}

} // namespace

TEST_CASE("validate_dataset flags out-of-range risk scores") {
  auto r = valid_record("s1", 2, true, 3);
  r.risk_scores[1][2] = 1.2;
  const auto report = validate_dataset({r});
  CHECK(has_violation(report, "s1", "risk score out of [0,1]"));
}

TEST_CASE("validate_dataset flags observed_time beyond the history") {
  auto r = valid_record("s1", 5, true, 3);
  const auto report = validate_dataset({r});
  CHECK(has_violation(report, "s1", "observed_time exceeds history"));
}

TEST_CASE("validate_dataset accepts a well-formed two-subject dataset") {
  const auto report = validate_dataset({valid_record("s1", 2, true, 3),
                                        valid_record("s2", 4, false, 4)});
  CHECK(report.empty());
}

TEST_CASE("validate_dataset flags non-binary adherence and bad coverage") {
  auto r = valid_record("s1", 2, true, 3);
  r.adherence[0] = 2;
  r.coverage_days[1] = 42;
  const auto report = validate_dataset({r});
  CHECK(has_violation(report, "s1", "adherence indicator"));
  CHECK(has_violation(report, "s1", "coverage_days out of [0,31]"));
}

TEST_CASE("effect estimates always store the mean of their ITEs") {
  const auto e = make_effect_estimate({1.0, 2.0, 6.0}, "t_learner", "cox_ph");
  CHECK(e.ate == doctest::Approx(3.0).epsilon(1e-12));
  const double recomputed = mean(e.ites);
  CHECK(std::abs(e.ate - recomputed) <= 1e-9 * std::max(1.0, std::abs(e.ate)));
}

TEST_CASE("survival curve step lookup is right-continuous and flat at the tail") {
  SurvivalCurve c{{0.0, 2.0, 5.0}, {1.0, 0.5, 0.25}};
  c.validate();
  CHECK(c.value_at(0.0) == 1.0);
  CHECK(c.value_at(1.999) == 1.0);
  CHECK(c.value_at(2.0) == 0.5);
  CHECK(c.value_at(4.0) == 0.5);
  CHECK(c.value_at(5.0) == 0.25);
  CHECK(c.value_at(1000.0) == 0.25);
}

TEST_CASE("survival curve invariants are enforced") {
  CHECK_THROWS(SurvivalCurve{{1.0}, {1.0}}.validate());            // grid must start at 0
  CHECK_THROWS(SurvivalCurve{{0.0, 1.0}, {1.0, 1.2}}.validate());  // values above 1
  CHECK_THROWS(SurvivalCurve{{0.0, 1.0}, {0.9, 0.5}}.validate());  // S(0) != 1
  CHECK_THROWS(SurvivalCurve{{0.0, 1.0, 1.0}, {1.0, 0.5, 0.4}}.validate());
}

TEST_CASE("schema bookkeeping") {
  FeatureSchema s;
  s.names = {"age", "treatment"};
  s.kinds = {FeatureKind::static_continuous, FeatureKind::treatment};
  CHECK(s.treatment_index() == 1);
  CHECK(s.index_of("age") == 0);
  CHECK(s.index_of("missing") == -1);
  CHECK(feature_kind_from_name(feature_kind_name(FeatureKind::risk_score)) ==
        FeatureKind::risk_score);
}
