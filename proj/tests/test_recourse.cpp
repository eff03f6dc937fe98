#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "causex/error.hpp"
#include "causex/fixtures.hpp"
#include "causex/oracle.hpp"
#include "causex/recourse.hpp"
#include "support.hpp"

using namespace causex;
using testing_support::joint;
using testing_support::var;

namespace {

double logit(double p) { return std::log(p / (1 - p)); }

std::shared_ptr<const Dataset> weighted(const Schema& s, const std::vector<std::vector<int>>& rows,
                                        const std::vector<double>& w) {
  return std::make_shared<const Dataset>(s, rows, w);
}

// A ternary root, O := [A + U_O >= 3]: the one-hot logit over A is saturated.
Scm saturated_scm() {
  return scm_from_json(nlohmann::ordered_json::parse(R"({
    "graph": {"variables": [{"name": "A", "domain": ["0", "1", "2"], "ordered": true},
                            {"name": "O", "domain": ["0", "1"], "ordered": true}],
              "edges": [["A", "O"]]},
    "exogenous": [{"name": "U_A", "dist": {"0": 0.5, "1": 0.3, "2": 0.2}},
                  {"name": "U_O", "dist": {"0": 0.5, "1": 0.3, "2": 0.2}}],
    "equations": {"A": "U_A", "O": "if A + U_O >= 3 then 1 else 0"}})"));
}

struct Pipeline {
  RecourseProblem problem;
  LogitModel model;
  SufficiencyConstraint constraint;
};

Pipeline pipeline(const Scm& m, const std::vector<int>& individual, RecourseConfig cfg) {
  auto data = joint(m);
  const OutcomeSpec o = testing_support::binary_outcome(m.schema());
  Pipeline p{make_problem(m.graph(), o, individual, cfg), {}, {}};
  std::vector<std::string> a, k;
  for (std::size_t v : p.problem.actionable) a.push_back(m.schema()[v].name);
  for (std::size_t v : p.problem.context) k.push_back(m.schema()[v].name);
  p.model = fit_logit(*data, o, a, k);
  p.constraint = sufficiency_constraint(p.problem, p.model, Estimator(data));
  return p;
}

RecourseProblem binary_problem(std::vector<double> costs) {
  Schema s({var("A"), var("O")});
  RecourseProblem p;
  p.schema = s;
  p.outcome = testing_support::binary_outcome(s);
  p.individual = {0, 0};
  p.actionable = {0};
  p.cost = {std::move(costs)};
  return p;
}

}  // namespace

TEST(FitLogit, IndependentBalancedOutcome) {
  Schema s({var("A"), var("O")});
  auto d = weighted(s, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {1, 1, 1, 1});
  const LogitModel m = fit_logit(*d, testing_support::binary_outcome(s), {"A"}, {});
  EXPECT_NEAR(m.intercept, 0.0, 1e-6);
  EXPECT_NEAR(m.coefficient(0, 1), 0.0, 1e-6);
}

TEST(FitLogit, SaturatedBinaryFeature) {
  Schema s({var("A"), var("O")});
  auto d = weighted(s, {{1, 1}, {1, 0}, {0, 1}, {0, 0}}, {0.8, 0.2, 0.2, 0.8});
  const LogitModel m = fit_logit(*d, testing_support::binary_outcome(s), {"A"}, {});
  EXPECT_NEAR(m.coefficient(0, 1), logit(0.8) - logit(0.2), 1e-3);
  EXPECT_NEAR(m.coefficient(0, 1), 2.7726, 1e-3);
}

TEST(FitLogit, SingleClassRejected) {
  Schema s({var("A"), var("O")});
  auto d = weighted(s, {{0, 1}, {1, 1}}, {1, 1});
  EXPECT_THROW(fit_logit(*d, testing_support::binary_outcome(s), {"A"}, {}), Error);
}

TEST(Constraint, TinyAlphaIsNearlyVacuous) {
  // The individual's cell (A=0) is always negative.
  RecourseConfig cfg;
  cfg.actionable = {"A"};
  cfg.alpha = 1e-6;
  const Scm m = saturated_scm();
  const Pipeline p = pipeline(m, {0, 0}, cfg);
  EXPECT_NEAR(p.constraint.p_current, 0.0, 1e-12);
  EXPECT_NEAR(p.constraint.threshold, 1e-6, 1e-12);
  EXPECT_LT(p.constraint.rhs, -10.0);
}

TEST(Constraint, NinetyPercentThreshold) {
  RecourseConfig cfg;
  cfg.actionable = {"A"};
  cfg.alpha = 0.9;
  const Pipeline p = pipeline(saturated_scm(), {0, 0}, cfg);
  EXPECT_NEAR(p.constraint.threshold, 0.9, 1e-12);
  EXPECT_NEAR(p.constraint.rhs, 2.1972, 1e-4);
  EXPECT_EQ(p.constraint.threshold_source, "empirical");
}

TEST(Constraint, AgreesWithEmpiricalProbabilityOnSaturatedModel) {
  const Scm m = saturated_scm();
  Estimator est(joint(m));
  const Schema& s = m.schema();
  for (double alpha : {0.1, 0.3, 0.5, 0.7}) {
    RecourseConfig cfg;
    cfg.actionable = {"A"};
    cfg.alpha = alpha;
    const Pipeline p = pipeline(m, {0, 0}, cfg);
    for (int a = 0; a < 3; ++a) {
      const double emp = est.prob(Event::point(s, {{"O", "1"}}), Event::point_idx(s, {{0, a}}));
      if (std::abs(emp - p.constraint.threshold) < 1e-6) continue;
      EXPECT_EQ(p.constraint.satisfied({a}), emp >= p.constraint.threshold) << "alpha " << alpha << " a " << a;
    }
  }
}

TEST(Solve, ConstraintCountGrowsLinearly) {
  for (std::size_t n : {5u, 100u}) {
    const auto inst = fixtures::linear_instance(1, n);
    const SufficiencyConstraint c = sufficiency_constraint(inst.problem, inst.model, Estimator(inst.data));
    const RecoursePlan plan = solve(inst.problem, c);
    EXPECT_EQ(plan.constraint_count, n + 1);
    EXPECT_TRUE(plan.feasible);
  }
}

TEST(Solve, AlreadySatisfiedMeansNoAction) {
  RecourseProblem p = binary_problem({0, 3});
  SufficiencyConstraint c;
  c.gain = {{0, -1}};
  c.base = 1;
  c.rhs = 0;
  const RecoursePlan plan = solve(p, c);
  EXPECT_TRUE(plan.feasible);
  EXPECT_TRUE(plan.changes.empty());
  EXPECT_EQ(plan.cost, 0.0);
}

TEST(Solve, MatchesBruteForceOnRandomInstances) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto inst = fixtures::recourse_instance(seed);
    const Pipeline p = pipeline(inst.scm, inst.individual, inst.config);
    const RecoursePlan a = solve(p.problem, p.constraint);
    const RecoursePlan b = brute_force(p.problem, p.constraint);
    ASSERT_EQ(a.feasible, b.feasible) << "seed " << seed;
    if (a.feasible) EXPECT_NEAR(a.cost, b.cost, 1e-9) << "seed " << seed;
  }
}

TEST(Solve, ForbiddenMovesAreRespected) {
  const auto inst = fixtures::recourse_instance(4);
  RecourseConfig cfg = inst.config;
  for (const auto& a : cfg.actionable) cfg.costs[a] = "if a_hat_rank == a_rank then 0 else inf";
  const Pipeline p = pipeline(inst.scm, inst.individual, cfg);
  const RecoursePlan plan = solve(p.problem, p.constraint);
  if (plan.feasible) EXPECT_TRUE(plan.changes.empty());
}

TEST(BruteForce, PicksCheapestFeasibleValue) {
  RecourseProblem p = binary_problem({0, 3});
  SufficiencyConstraint c;
  c.gain = {{0, 1}};
  c.base = 1;
  c.rhs = 0;
  const RecoursePlan plan = brute_force(p, c);
  EXPECT_TRUE(plan.feasible);
  EXPECT_EQ(plan.cost, 0.0);
  EXPECT_EQ(plan.assignment, (std::vector<int>{0}));
}

TEST(BruteForce, ConstantNegativeModelIsInfeasible) {
  RecourseProblem p = binary_problem({0, 3});
  SufficiencyConstraint c;
  c.gain = {{0, 0}};
  c.base = -5;
  c.rhs = 0;
  EXPECT_FALSE(brute_force(p, c).feasible);
  EXPECT_FALSE(solve(p, c).feasible);
}

TEST(Problem, PositiveIndividualRejected) {
  RecourseConfig cfg;
  cfg.actionable = {"A"};
  EXPECT_THROW(pipeline(saturated_scm(), {2, 1}, cfg), Error);
}

TEST(Problem, UnknownConfigKeyRejected) {
  EXPECT_THROW(recourse_config_from_json({{"actionable", {"A"}}, {"alhpa", 0.9}}), Error);
}

TEST(Validate, PlanReachesSufficiencyOnSaturatedModel) {
  RecourseConfig cfg;
  cfg.actionable = {"A"};
  cfg.alpha = 0.4;
  const Scm m = saturated_scm();
  const Pipeline p = pipeline(m, {0, 0}, cfg);
  const RecoursePlan plan = solve(p.problem, p.constraint);
  ASSERT_TRUE(plan.feasible);
  EXPECT_GE(validate_plan(p.problem, plan, m), 0.4);
}
