#include <gtest/gtest.h>

#include "causex/error.hpp"
#include "causex/graph.hpp"
#include "causex/oracle.hpp"
#include "support.hpp"

using namespace causex;
using testing_support::var;

namespace {

CausalGraph credit_graph() {
  Schema s({var("G"), var("A"), var("R"), var("D"), var("O")});
  return CausalGraph(s, {{"G", "D"}, {"G", "O"}, {"A", "D"}, {"A", "O"}, {"D", "O"}, {"R", "O"}, {"G", "R"}, {"A", "R"}});
}

}  // namespace

TEST(Graph, CycleRejectedAtConstruction) {
  Schema s({var("A"), var("B")});
  EXPECT_THROW(CausalGraph(s, {{"A", "B"}, {"B", "A"}}), Error);
  EXPECT_THROW(CausalGraph(s, {{"A", "Q"}}), Error);
}

TEST(Graph, TopologicalOrderRespectsEdges) {
  const CausalGraph g = credit_graph();
  std::vector<std::size_t> pos(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) pos[g.topological_order()[i]] = i;
  for (const auto& [p, c] : g.edges()) {
    EXPECT_LT(pos[g.schema().index(p)], pos[g.schema().index(c)]);
  }
}

TEST(Descendants, ChainFromRootIsEverything) {
  EXPECT_EQ(descendants(testing_support::chain(), {"A"}), (NameSet{"A", "B", "C"}));
}

TEST(Descendants, SinkIsItsOwnOnlyDescendant) {
  EXPECT_EQ(descendants(testing_support::chain(), {"C"}), (NameSet{"C"}));
}

TEST(Descendants, CreditGraphDecision) { EXPECT_EQ(descendants(credit_graph(), {"D"}), (NameSet{"D", "O"})); }

TEST(Descendants, UnknownNameIsReported) {
  try {
    descendants(testing_support::chain(), {"Q"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("Q"), std::string::npos);
  }
}

TEST(DSeparation, ChainBlockedByMiddle) { EXPECT_TRUE(d_separated(testing_support::chain(), {"A"}, {"C"}, {"B"})); }

TEST(DSeparation, ChainOpenWithoutConditioning) {
  EXPECT_FALSE(d_separated(testing_support::chain(), {"A"}, {"C"}, NameSet{}));
}

TEST(DSeparation, ColliderBlocksUntilConditioned) {
  CausalGraph g(Schema({var("A"), var("B"), var("C")}), {{"A", "B"}, {"C", "B"}});
  EXPECT_TRUE(d_separated(g, {"A"}, {"C"}, NameSet{}));
  EXPECT_FALSE(d_separated(g, {"A"}, {"C"}, {"B"}));
}

TEST(DSeparation, ConditioningOnColliderDescendantOpensIt) {
  CausalGraph g(Schema({var("A"), var("B"), var("C"), var("D")}), {{"A", "B"}, {"C", "B"}, {"B", "D"}});
  EXPECT_FALSE(d_separated(g, {"A"}, {"C"}, {"D"}));
}

TEST(DSeparation, OverlappingSetsRejected) {
  EXPECT_THROW(d_separated(testing_support::chain(), {"A"}, {"A"}, NameSet{}), Error);
}

TEST(Backdoor, ConfounderIsAdmissible) {
  EXPECT_TRUE(backdoor_admissible(testing_support::confounder(), {"X"}, {"Y"}, {{"Z"}}));
}

TEST(Backdoor, EmptySetLeavesBackdoorOpen) {
  EXPECT_FALSE(backdoor_admissible(testing_support::confounder(), {"X"}, {"Y"}, {}));
}

TEST(Backdoor, CreditGraphGenderAndAge) { EXPECT_TRUE(backdoor_admissible(credit_graph(), {"D"}, {"O"}, {{"G", "A"}})); }

TEST(Backdoor, DescendantOfTreatmentIsInadmissible) {
  CausalGraph g(Schema({var("X"), var("M"), var("Y")}), {{"X", "M"}, {"M", "Y"}});
  EXPECT_FALSE(backdoor_admissible(g, {"X"}, {"Y"}, {{"M"}}));
}

TEST(Backdoor, OverlapWithTreatmentRejected) {
  EXPECT_THROW(backdoor_admissible(testing_support::confounder(), {"X"}, {"Y"}, {{"X"}}), Error);
}

TEST(DefaultAdjustment, ParentsOfTreatment) {
  EXPECT_EQ(default_adjustment_set(testing_support::confounder(), {"X"}, {"Y"}).members, (NameSet{"Z"}));
}

TEST(DefaultAdjustment, RootTreatmentNeedsNothing) {
  EXPECT_TRUE(default_adjustment_set(testing_support::chain(), {"A"}, {"C"}).members.empty());
}

TEST(DefaultAdjustment, OpenPathIsNamed) {
  const CausalGraph g = testing_support::confounder();
  EXPECT_FALSE(backdoor_admissible(g, {"X"}, {"Y"}, AdjustmentSet{}));
  const std::string path = open_backdoor_path(g, {"X"}, {"Y"}, {});
  EXPECT_NE(path.find("X <- Z"), std::string::npos) << path;
  EXPECT_NE(open_backdoor_path(testing_support::chain(), {"A"}, {"C"}, {"B"}).find("descendant"), std::string::npos);
}

// Exhaustive cross-check on random small DAGs: the default set, when one is
// returned, is admissible; NotIdentifiable is raised only when no subset of
// the non-descendants is admissible.
TEST(DefaultAdjustment, AgreesWithSubsetEnumeration) {
  Rng rng(7);
  int identified = 0, unidentified = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 4 + rng.below(2);
    std::vector<Variable> vars;
    for (std::size_t i = 0; i < n; ++i) vars.push_back(var("V" + std::to_string(i)));
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t j = 1; j < n; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        if (rng.uniform() < 0.45) edges.emplace_back(vars[i].name, vars[j].name);
      }
    }
    CausalGraph g(Schema(vars), edges);
    const std::size_t x = rng.below(n - 1);
    const std::string xn = vars[x].name;
    NameSet inputs;
    for (std::size_t v = 0; v < n; ++v) {
      if (v != x && rng.uniform() < 0.4) inputs.insert(vars[v].name);
    }
    if (inputs.empty()) inputs.insert(vars[n - 1].name == xn ? vars[0].name : vars[n - 1].name);
    const NameSet desc = descendants(g, {xn});
    std::vector<std::string> candidates;
    for (const auto& v : vars) {
      if (!desc.count(v.name) && !inputs.count(v.name)) candidates.push_back(v.name);
    }
    bool any = false;
    for (std::size_t mask = 0; mask < (std::size_t{1} << candidates.size()) && !any; ++mask) {
      AdjustmentSet a;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (mask >> i & 1) a.members.insert(candidates[i]);
      }
      any = backdoor_admissible(g, {xn}, inputs, a);
    }
    try {
      const AdjustmentSet a = default_adjustment_set(g, {xn}, inputs);
      EXPECT_TRUE(backdoor_admissible(g, {xn}, inputs, a));
      ++identified;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NotIdentifiable);
      EXPECT_FALSE(any) << "an admissible set exists for trial " << trial;
      ++unidentified;
    }
  }
  EXPECT_GT(identified, 0);
}

TEST(GraphJson, RoundTrip) {
  const CausalGraph g = credit_graph();
  const CausalGraph h = graph_from_json(graph_to_json(g));
  EXPECT_TRUE(g.schema() == h.schema());
  EXPECT_EQ(g.edges(), h.edges());
}
