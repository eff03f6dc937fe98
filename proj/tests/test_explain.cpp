#include <gtest/gtest.h>

#include "causex/blackbox.hpp"
#include "causex/error.hpp"
#include "causex/explain.hpp"
#include "causex/fixtures.hpp"
#include "causex/oracle.hpp"
#include "support.hpp"

using namespace causex;
using testing_support::joint;
using testing_support::var;

namespace {

ExplainOptions declared() {
  ExplainOptions o;
  o.use_declared_order = true;
  return o;
}

const ExplanationEntry& entry(const ExplanationReport& r, const std::string& name) {
  for (const auto& e : r.entries) {
    if (e.attribute == name) return e;
  }
  throw std::runtime_error("no entry " + name);
}

}  // namespace

TEST(Global, ConstantPredictorScoresZero) {
  const Scm m = testing_support::confounded_full();
  auto bb = blackbox_from_json({{"kind", "expr"}, {"output", "O"}, {"inputs", {"Z", "X"}}, {"expr", "1"}}, m.schema());
  Estimator est(std::make_shared<const Dataset>(label_dataset(*bb, exhaustive_joint(m))));
  for (ScoreKind k : {ScoreKind::Nec, ScoreKind::Suf, ScoreKind::NeSuf}) {
    ExplainOptions o = declared();
    o.kind = k;
    const ExplanationReport r = global_explanations({&est, &m.graph(), bb->input_set()}, bb->outcome(), o);
    ASSERT_EQ(r.entries.size(), 2u);
    for (const auto& e : r.entries) EXPECT_NEAR(e.score, 0.0, 1e-12) << e.attribute;
  }
}

TEST(Global, RankingFollowsOracle) {
  const Scm m = testing_support::confounded_full();
  Estimator est(joint(m));
  const OutcomeSpec o = testing_support::binary_outcome(m.schema());
  const ExplanationReport r = global_explanations({&est, &m.graph(), std::nullopt}, o, declared());
  const double truth_x = ground_truth_scores(m, testing_support::contrast(m.schema(), "X", "1", "0")).nesuf;
  const double truth_z = ground_truth_scores(m, testing_support::contrast(m.schema(), "Z", "1", "0")).nesuf;
  EXPECT_NEAR(entry(r, "X").score, truth_x, 1e-9);
  EXPECT_NEAR(entry(r, "Z").score, truth_z, 1e-9);
  const auto ranking = rank_attributes(r, m.schema());
  EXPECT_EQ(ranking.front(), truth_z > truth_x ? "Z" : "X");
}

TEST(Global, ConfoundedFixtureReportsUnidentifiedEntry) {
  const Scm m = fixtures::f1();
  Estimator est(joint(m));
  const ExplanationReport r =
      global_explanations({&est, &m.graph(), std::nullopt}, testing_support::binary_outcome(m.schema()), declared());
  const ExplanationEntry& x = entry(r, "X");
  EXPECT_TRUE(x.x.empty());
  ASSERT_EQ(x.skipped.size(), 1u);
  EXPECT_NE(x.skipped[0].find("undefined"), std::string::npos);
  EXPECT_TRUE(entry(r, "Z").skipped.empty());
  EXPECT_NEAR(entry(r, "Z").score, 0.75, 1e-12);
}

TEST(Global, SingleAttribute) {
  Schema s({var("A"), var("O")});
  CausalGraph g(s, {{"A", "O"}});
  Estimator est(std::make_shared<const Dataset>(parse_csv("A,O\n0,0\n1,1\n1,0\n", s)));
  const ExplanationReport r = global_explanations({&est, &g, std::nullopt}, testing_support::binary_outcome(s));
  EXPECT_EQ(r.entries.size(), 1u);
}

TEST(Global, WorkersDoNotChangeResults) {
  const auto gs = fixtures::german_syn(3);
  Estimator est(std::make_shared<const Dataset>(label_dataset(*gs.bb, exhaustive_joint(gs.scm))));
  const ScoreSetting st{&est, &gs.scm.graph(), gs.bb->input_set()};
  ExplainOptions one, four;
  four.workers = 4;
  const ExplanationReport a = global_explanations(st, gs.outcome, one);
  const ExplanationReport b = global_explanations(st, gs.outcome, four);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].attribute, b.entries[i].attribute);
    EXPECT_EQ(a.entries[i].score, b.entries[i].score);
  }
}

TEST(Contextual, EmptyContextEqualsGlobal) {
  const Scm m = testing_support::confounded_full();
  Estimator est(joint(m));
  const OutcomeSpec o = testing_support::binary_outcome(m.schema());
  const ScoreSetting st{&est, &m.graph(), std::nullopt};
  const ExplanationReport g = global_explanations(st, o, declared());
  const ExplanationReport c = contextual_explanation(st, o, "X", {}, declared());
  ASSERT_EQ(c.entries.size(), 1u);
  EXPECT_NEAR(c.entries[0].score, entry(g, "X").score, 1e-12);
}

TEST(Contextual, MixtureOverPartition) {
  const Scm m = testing_support::confounded_full();
  Estimator est(joint(m));
  const Schema& s = m.schema();
  const OutcomeSpec o = testing_support::binary_outcome(s);
  const ScoreSetting st{&est, &m.graph(), std::nullopt};
  const double whole = contextual_explanation(st, o, "X", {}, declared()).entries[0].score;
  double mixture = 0.0;
  for (const char* z : {"0", "1"}) {
    const double w = est.prob(Event::point(s, {{"Z", z}}));
    mixture += w * contextual_explanation(st, o, "X", {{"Z", z}}, declared()).entries[0].score;
  }
  EXPECT_NEAR(whole, mixture, 1e-9);
}

TEST(Contextual, DescendantContextNotIdentifiable) {
  Schema s({var("X"), var("M"), var("O")});
  CausalGraph g(s, {{"X", "M"}, {"M", "O"}});
  Estimator est(std::make_shared<const Dataset>(parse_csv("X,M,O\n0,0,0\n1,1,1\n1,0,0\n0,1,1\n", s)));
  try {
    contextual_explanation({&est, &g, std::nullopt}, testing_support::binary_outcome(s), "X", {{"M", "1"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotIdentifiable);
  }
}

TEST(Local, TopValueHasNoNegativeContribution) {
  const Scm m = testing_support::confounded_full();
  Estimator est(joint(m));
  const ExplanationReport r = local_explanation({&est, &m.graph(), std::nullopt},
                                                testing_support::binary_outcome(m.schema()), nullptr,
                                                {{"Z", "1"}, {"X", "1"}, {"O", "0"}}, declared());
  for (const char* a : {"Z", "X"}) {
    const auto& e = entry(r, a);
    ASSERT_TRUE(e.negative.has_value());
    EXPECT_EQ(e.negative->value, 0.0);
    EXPECT_TRUE(e.negative->extreme);
  }
}

TEST(Local, BinaryNegativeContributionIsSufficiency) {
  const Scm m = testing_support::confounded_full();
  Estimator est(joint(m));
  const OutcomeSpec o = testing_support::binary_outcome(m.schema());
  const ScoreSetting st{&est, &m.graph(), std::nullopt};
  const ExplanationReport r = local_explanation(st, o, nullptr, {{"Z", "1"}, {"X", "0"}, {"O", "0"}}, declared());
  const auto& e = entry(r, "X");
  ASSERT_TRUE(e.negative.has_value());
  const ScoreResult direct = point_scores(st, testing_support::contrast(m.schema(), "X", "1", "0", {{"Z", "1"}}));
  EXPECT_DOUBLE_EQ(e.negative->value, direct.triple.suf);
  EXPECT_EQ(e.negative->from, "1");
  EXPECT_EQ(e.negative->to, "0");
}

TEST(Local, ConfoundedFixtureMatchesCounterfactual) {
  const Scm m = fixtures::f1();
  const Schema& s = m.schema();
  Estimator est(joint(m));
  const ExplanationReport r = local_explanation({&est, &m.graph(), std::nullopt}, testing_support::binary_outcome(s),
                                                nullptr, {{"Z", "1"}, {"X", "0"}, {"O", "0"}}, declared());
  CfQuery q;
  q.targets = {{intervention_of(s, {"X"}, {"1"}), Event::point(s, {{"O", "1"}})}};
  q.evidence = Event::point(s, {{"Z", "1"}, {"X", "0"}, {"O", "0"}});
  const auto& x = entry(r, "X");
  ASSERT_TRUE(x.negative.has_value());
  EXPECT_NEAR(x.negative->value, counterfactual_prob(m, q), 1e-9);
  EXPECT_FALSE(r.positive_outcome.value());
  // Z sits at its top value with a negative outcome.
  EXPECT_TRUE(entry(r, "Z").negative->extreme);
}

TEST(Rank, AllZeroKeepsSchemaOrder) {
  Schema s({var("B"), var("A"), var("C"), var("O")});
  ExplanationReport r;
  for (const char* n : {"C", "A", "B"}) r.entries.push_back({.attribute = n, .score = 0.0});
  EXPECT_EQ(rank_attributes(r, s), (std::vector<std::string>{"B", "A", "C"}));
}

TEST(Rank, DistinctScoresWin) {
  Schema s({var("B"), var("A"), var("C"), var("O")});
  ExplanationReport r;
  r.entries.push_back({.attribute = "B", .score = 0.1});
  r.entries.push_back({.attribute = "A", .score = 0.7});
  r.entries.push_back({.attribute = "C", .score = 0.4});
  EXPECT_EQ(rank_attributes(r, s), (std::vector<std::string>{"A", "C", "B"}));
}
