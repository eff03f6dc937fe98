#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "causex/data.hpp"
#include "causex/explain.hpp"
#include "causex/graph.hpp"
#include "causex/oracle.hpp"
#include "causex/query.hpp"
#include "causex/scores.hpp"

namespace testing_support {

using namespace causex;

inline Variable var(const std::string& name, std::size_t n = 2, bool ordered = true) {
  Variable v{name, {}, ordered};
  for (std::size_t i = 0; i < n; ++i) v.domain.push_back(std::to_string(i));
  return v;
}

inline CausalGraph chain() {
  return CausalGraph(Schema({var("A"), var("B"), var("C")}), {{"A", "B"}, {"B", "C"}});
}

inline CausalGraph confounder() {
  return CausalGraph(Schema({var("Z"), var("X"), var("Y")}), {{"Z", "X"}, {"Z", "Y"}, {"X", "Y"}});
}

inline std::shared_ptr<const Dataset> joint(const Scm& m) { return std::make_shared<const Dataset>(exhaustive_joint(m)); }

inline OutcomeSpec binary_outcome(const Schema& s, const std::string& name = "O") {
  return OutcomeSpec::make(s, name, "1");
}

inline ContrastQuery contrast(const Schema& s, const std::string& x, const std::string& xv, const std::string& xpv,
                              Assignment context = {}, const std::string& outcome = "O") {
  ContrastQuery q;
  q.x_vars = {x};
  q.x = {xv};
  q.x_prime = {xpv};
  q.context = std::move(context);
  q.outcome = binary_outcome(s, outcome);
  return q;
}

}  // namespace testing_support

namespace testing_support {

/// Monotone confounded model with full support: Z -> X, Z -> O, X -> O.
inline causex::Scm confounded_full() {
  return causex::scm_from_json(nlohmann::ordered_json::parse(R"({
    "graph": {"variables": [{"name": "Z", "domain": ["0", "1"], "ordered": true},
                            {"name": "X", "domain": ["0", "1"], "ordered": true},
                            {"name": "O", "domain": ["0", "1"], "ordered": true}],
              "edges": [["Z", "X"], ["Z", "O"], ["X", "O"]]},
    "exogenous": [{"name": "U_Z", "dist": {"0": 0.6, "1": 0.4}},
                  {"name": "U_X", "dist": {"0": 0.3, "1": 0.3, "2": 0.4}},
                  {"name": "U_O", "dist": {"0": 0.5, "1": 0.25, "2": 0.25}}],
    "equations": {"Z": "U_Z",
                  "X": "if (Z == 1 and U_X >= 1) or (Z == 0 and U_X == 2) then 1 else 0",
                  "O": "if X + Z + U_O >= 2 then 1 else 0"}})"));
}

}  // namespace testing_support
