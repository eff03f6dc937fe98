#include <gtest/gtest.h>

#include "causex/blackbox.hpp"
#include "causex/cli.hpp"
#include "causex/error.hpp"
#include "causex/fixtures.hpp"
#include "causex/oracle.hpp"
#include "causex/scores.hpp"
#include "support.hpp"

using namespace causex;
using testing_support::contrast;
using testing_support::joint;
using testing_support::var;

namespace {

// X -> O with weighted rows (x, o, weight).
std::shared_ptr<const Dataset> xo_data(const std::vector<std::tuple<int, int, double>>& rows) {
  Schema s({var("X"), var("O")});
  std::vector<std::vector<int>> r;
  std::vector<double> w;
  for (const auto& [x, o, wt] : rows) {
    r.push_back({x, o});
    w.push_back(wt);
  }
  return std::make_shared<const Dataset>(s, r, w);
}

CausalGraph xo_graph() { return CausalGraph(Schema({var("X"), var("O")}), {{"X", "O"}}); }

void expect_triple(const ScoreTriple& a, const ScoreTriple& b, double tol) {
  EXPECT_NEAR(a.nec, b.nec, tol);
  EXPECT_NEAR(a.suf, b.suf, tol);
  EXPECT_NEAR(a.nesuf, b.nesuf, tol);
}

bool full_support(const ContrastQuery& q, const ScoreSetting& st) {
  try {
    point_scores(st, q);
    return true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConditioningOnNull) throw;
    return false;
  }
}

}  // namespace

TEST(Binarize, TwoClassTopThresholdIsIdentity) {
  Schema s({var("X"), var("O")});
  const BinaryOutcome b = binarize(s, OutcomeSpec::make(s, "O", "1"));
  EXPECT_TRUE(b.positive.matches(std::vector<int>{0, 1}));
  EXPECT_FALSE(b.positive.matches(std::vector<int>{0, 0}));
  EXPECT_TRUE(b.negative.matches(std::vector<int>{0, 0}));
}

TEST(Binarize, ThreeClassMiddleThreshold) {
  Schema s({var("X"), Variable{"O", {"lo", "mid", "hi"}, true}});
  const BinaryOutcome b = binarize(s, OutcomeSpec::make(s, "O", "mid"));
  EXPECT_TRUE(b.positive.matches(std::vector<int>{0, 2}));
  EXPECT_TRUE(b.positive.matches(std::vector<int>{0, 1}));
  EXPECT_TRUE(b.negative.matches(std::vector<int>{0, 0}));
  EXPECT_FALSE(b.negative.matches(std::vector<int>{0, 1}));
}

TEST(Binarize, BinnedRegressionOutcome) {
  const auto labels = bin_labels({0.5});
  Schema s({var("X"), Variable{"O", labels, true}});
  CsvOptions o;
  o.binning["O"] = {0.5};
  const Dataset d = parse_csv("X,O\n0,0.2\n1,0.5\n1,0.9\n", s, o);
  const BinaryOutcome b = binarize(s, OutcomeSpec::make(s, "O", labels[1]));
  EXPECT_FALSE(b.positive.matches(d.row(0)));
  EXPECT_TRUE(b.positive.matches(d.row(1)));
  EXPECT_TRUE(b.positive.matches(d.row(2)));
}

TEST(PointScores, CertainFlipGivesNecessityOne) {
  Estimator est(xo_data({{1, 1, 1.0}, {0, 0, 1.0}}));
  const CausalGraph g = xo_graph();
  const ScoreResult r = point_scores({&est, &g, std::nullopt}, contrast(g.schema(), "X", "1", "0"), AdjustmentSet{});
  EXPECT_NEAR(r.triple.nec, 1.0, 1e-12);
}

TEST(PointScores, NoEffectGivesZeroNeSuf) {
  Estimator est(xo_data({{1, 1, 0.3}, {1, 0, 0.2}, {0, 1, 0.3}, {0, 0, 0.2}}));
  const CausalGraph g = xo_graph();
  const ScoreResult r = point_scores({&est, &g, std::nullopt}, contrast(g.schema(), "X", "1", "0"), AdjustmentSet{});
  EXPECT_NEAR(r.triple.nesuf, 0.0, 1e-12);
}

TEST(PointScores, ConfoundedFixtureIdentifiedParts) {
  const Scm m = fixtures::f1();
  Estimator est(joint(m));
  const ContrastQuery q = contrast(m.schema(), "X", "1", "0");
  const ScoreResult r = point_scores({&est, &m.graph(), std::nullopt}, q, AdjustmentSet{{"Z"}}, false);
  const ScoreTriple truth = ground_truth_scores(m, q);
  EXPECT_EQ(r.diagnostics.adjustment.members, (NameSet{"Z"}));
  EXPECT_NEAR(r.triple.nec, truth.nec, 1e-9);
  EXPECT_FALSE(r.diagnostics.defined[1]);
  EXPECT_FALSE(r.diagnostics.defined[2]);
  EXPECT_THROW(point_scores({&est, &m.graph(), std::nullopt}, q, AdjustmentSet{{"Z"}}, true), Error);
}

TEST(PointScores, MonotoneModelsMatchOracle) {
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    fixtures::RandomScmOptions o;
    o.monotone = true;
    const auto r = fixtures::random_scm(seed, o);
    const Scm& m = r.scm;
    Estimator est(joint(m));
    const ScoreSetting st{&est, &m.graph(), NameSet(r.inputs.begin(), r.inputs.end())};
    for (std::size_t v = 0; v + 1 < m.schema().size(); ++v) {
      const ContrastQuery q = contrast(m.schema(), m.schema()[v].name, "1", "0");
      if (!full_support(q, st)) continue;
      expect_triple(point_scores(st, q).triple, ground_truth_scores(m, q), 1e-9);
      ++compared;
    }
  }
  EXPECT_GT(compared, 40);
}

TEST(PointScores, DescendantContextNotIdentifiable) {
  Schema s({var("Z"), var("X"), var("M"), var("O")});
  CausalGraph g(s, {{"Z", "X"}, {"X", "M"}, {"M", "O"}});
  auto d = std::make_shared<const Dataset>(parse_csv("Z,X,M,O\n0,0,0,0\n0,1,1,1\n1,0,1,0\n1,1,0,1\n", s));
  Estimator e2(d);
  try {
    point_scores({&e2, &g, std::nullopt}, contrast(s, "X", "1", "0", {{"M", "1"}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotIdentifiable);
  }
}

TEST(Bounds, NeSufArithmetic) {
  Estimator est(xo_data({{1, 1, 0.35}, {1, 0, 0.15}, {0, 1, 0.2}, {0, 0, 0.3}}));
  const CausalGraph g = xo_graph();
  const BoundsResult r = score_bounds({&est, &g, std::nullopt}, contrast(g.schema(), "X", "1", "0"), AdjustmentSet{});
  EXPECT_NEAR(r.do_x, 0.7, 1e-12);
  EXPECT_NEAR(r.do_xp, 0.4, 1e-12);
  EXPECT_NEAR(r.bounds.nesuf.lower, 0.3, 1e-12);
  EXPECT_NEAR(r.bounds.nesuf.upper, 0.6, 1e-12);
}

TEST(Bounds, NecLowerBoundVanishes) {
  // X independent of O: Pr(o | do(x')) = Pr(o, x) + Pr(o, x').
  Estimator est(xo_data({{1, 1, 0.12}, {1, 0, 0.28}, {0, 1, 0.18}, {0, 0, 0.42}}));
  const CausalGraph g = xo_graph();
  const BoundsResult r = score_bounds({&est, &g, std::nullopt}, contrast(g.schema(), "X", "1", "0"), AdjustmentSet{});
  EXPECT_NEAR(r.do_xp, r.p_ox + r.p_oxp, 1e-12);
  EXPECT_NEAR(r.bounds.nec.lower, 0.0, 1e-12);
}

TEST(Bounds, SandwichOnHundredRandomModels) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    fixtures::RandomScmOptions o;
    o.endogenous = 3 + seed % 3;
    const Scm m = fixtures::random_scm(seed, o).scm;
    const BoundsCheck c = validate_bounds(m, testing_support::binary_outcome(m.schema()), 4, seed);
    EXPECT_EQ(c.violations, 0u) << "seed " << seed;
    checked += c.checked;
  }
  EXPECT_GT(checked, 100u);
}

TEST(Bounds, CollapseWithoutPathToInputs) {
  fixtures::RandomScmOptions o;
  o.unreachable_extra = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = fixtures::random_scm(seed, o);
    Estimator est(joint(r.scm));
    const ScoreSetting st{&est, &r.scm.graph(), NameSet(r.inputs.begin(), r.inputs.end())};
    const BoundsResult b = score_bounds(st, contrast(r.scm.schema(), "W", "1", "0"));
    EXPECT_EQ(b.bounds.nec.upper, 0.0);
    EXPECT_EQ(b.bounds.suf.upper, 0.0);
    EXPECT_EQ(b.bounds.nesuf.upper, 0.0);
  }
}

TEST(Naive, EqualsEmptyAdjustmentForRootTreatment) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scm m = fixtures::random_scm(seed).scm;
    Estimator est(std::make_shared<const Dataset>(sample_dataset(m, 2000, seed)));
    const ContrastQuery q = contrast(m.schema(), "V0", "1", "0");
    ScoreResult a, b;
    try {
      a = naive_scores(est, q);
      b = point_scores({&est, &m.graph(), std::nullopt}, q, AdjustmentSet{});
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConditioningOnNull);
      continue;
    }
    const NameSet reach = descendants(m.graph(), {"V0"});
    if (!reach.count("O")) continue;  // the graph check short-circuits to zero
    expect_triple(a.triple, b.triple, 1e-12);
  }
}

TEST(Naive, ConfoundingBiasOnConfoundedFixture) {
  const Scm m = fixtures::f1();
  Estimator est(joint(m));
  const ContrastQuery q = contrast(m.schema(), "X", "1", "0");
  const ScoreTriple naive = naive_scores(est, q).triple;
  const ScoreTriple truth = ground_truth_scores(m, q);
  EXPECT_GT(std::abs(naive.nec - truth.nec), 1e-3);
}

TEST(Naive, UnconfoundedFixtureMatchesOracle) {
  const Scm m = fixtures::f1_unconfounded();
  Estimator est(joint(m));
  const ContrastQuery q = contrast(m.schema(), "X", "1", "0");
  expect_triple(naive_scores(est, q).triple, ground_truth_scores(m, q), 1e-9);
}

TEST(RelationGap, BinaryTreatmentIsEquality) {
  int n = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Scm m = fixtures::random_scm(seed).scm;
    Estimator est(joint(m));
    const ContrastQuery q = contrast(m.schema(), "V0", "1", "0");
    ScoreTriple t;
    try {
      t = ground_truth_scores(m, q);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConditioningOnNull);
      continue;
    }
    EXPECT_NEAR(nesuf_relation_gap(t, est, q), 0.0, 1e-9) << "seed " << seed;
    ++n;
  }
  EXPECT_GT(n, 10);
}

TEST(RelationGap, TernaryTreatmentNonNegative) {
  fixtures::RandomScmOptions o;
  o.ternary_first = true;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Scm m = fixtures::random_scm(seed, o).scm;
    Estimator est(joint(m));
    for (auto [x, xp] : {std::pair{"2", "0"}, std::pair{"1", "0"}, std::pair{"2", "1"}}) {
      const ContrastQuery q = contrast(m.schema(), "V0", x, xp);
      ScoreTriple t;
      try {
        t = ground_truth_scores(m, q);
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConditioningOnNull);
        continue;
      }
      EXPECT_GE(nesuf_relation_gap(t, est, q), -1e-9) << "seed " << seed;
    }
  }
}

TEST(RelationGap, FullCoverageIdentity) {
  const Scm m = testing_support::confounded_full();
  Estimator est(joint(m));
  const ContrastQuery q = contrast(m.schema(), "X", "1", "0");
  const ScoreTriple t = point_scores({&est, &m.graph(), std::nullopt}, q).triple;
  EXPECT_NEAR(nesuf_relation_gap(t, est, q), 0.0, 1e-9);
}
