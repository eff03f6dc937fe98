#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "causex/data.hpp"
#include "causex/expr.hpp"
#include "causex/graph.hpp"
#include "causex/query.hpp"

namespace causex {

struct ExogenousVar {
  std::string name;
  std::vector<std::string> values;
  std::vector<double> probs;
};

/// Structural function of one endogenous variable: maps the values of its
/// endogenous parents and of its exogenous inputs (both as domain indices, in
/// the order listed on the Equation) to a value index of the variable.
using MechanismFn = std::function<int(std::span<const int> endo, std::span<const int> exo)>;

struct Equation {
  std::vector<std::size_t> endo_parents;  // indices into the graph schema
  std::vector<std::size_t> exo_parents;   // indices into Scm::exogenous()
  MechanismFn fn;
  std::string source;  // expression text, empty for native mechanisms
};

/// Assignment X ← x, as (variable index, value index) pairs.
using Intervention = std::vector<std::pair<std::size_t, int>>;

/// Event over the potential outcomes of one intervention.
struct PotentialEvent {
  Intervention intervention;
  Event target;
};

struct CfQuery {
  std::vector<PotentialEvent> targets;
  Event evidence;  // over factual variables
};

/// Deterministic 64-bit Mersenne Twister (std::mt19937_64); uniform reals are
/// (next() >> 11) · 2^-53, and discrete draws invert the CDF in listed value
/// order. Pinned so seeded datasets are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  double uniform();
  std::size_t below(std::size_t n);
  std::size_t discrete(std::span<const double> probs);

 private:
  std::mt19937_64 engine_;
};

/// A fully specified probabilistic causal model over finite exogenous
/// variables. Immutable; all queries are exact enumerations.
class Scm {
 public:
  static constexpr std::uint64_t kMaxExhaustiveCells = std::uint64_t{1} << 20;

  Scm(CausalGraph graph, std::vector<ExogenousVar> exogenous,
      const std::map<std::string, std::string>& equations);
  Scm(CausalGraph graph, std::vector<ExogenousVar> exogenous, std::vector<Equation> equations);

  const CausalGraph& graph() const { return graph_; }
  const Schema& schema() const { return graph_.schema(); }
  const std::vector<ExogenousVar>& exogenous() const { return exo_; }
  const Equation& equation(std::size_t v) const { return eqs_[v]; }
  std::uint64_t exogenous_cells() const { return cells_; }

  /// Endogenous values for exogenous assignment `u` with `iv` applied.
  void solve(std::span<const int> u, const Intervention& iv, std::span<int> out) const;
  /// As above with `forced[v]` >= 0 fixing variable v (see forced_values).
  void solve_forced(std::span<const int> u, std::span<const int> forced, std::span<int> out) const;
  std::vector<int> forced_values(const Intervention& iv) const;

  /// Copy whose equation for `var` is replaced by `fn` over `endo_parents`
  /// (graph edges are rewired accordingly). Used to compose a black box.
  Scm with_mechanism(std::size_t var, std::vector<std::size_t> endo_parents, MechanismFn fn,
                     std::string source = {}) const;

  /// Visits every exogenous cell in fixed order with its probability.
  void for_each_cell(const std::function<void(std::span<const int>, double)>& visit) const;

 private:
  void compile();
  void check_cells_exhaustively() const;
  int lookup(std::size_t v, std::span<const int> endo_vals, std::span<const int> u) const;

  CausalGraph graph_;
  std::vector<ExogenousVar> exo_;
  std::vector<Equation> eqs_;
  std::vector<std::vector<int>> tables_;  // tabulated mechanisms, -1 = failing cell
  std::uint64_t cells_ = 1;
};

/// Exogenous cells in listed order, one weighted row each (weight Pr(u)).
Dataset exhaustive_joint(const Scm& m);
/// n i.i.d. rows drawn with Rng(seed).
Dataset sample_dataset(const Scm& m, std::size_t n, std::uint64_t seed);

/// Σ_u 1{every target holds in its modified model} · Pr(u | evidence), by
/// exhaustive abduction. Throws ConditioningOnNull for null evidence.
double counterfactual_prob(const Scm& m, const CfQuery& q);

/// Pr(outcome_{treatment} | context).
double interventional_prob(const Scm& m, const Event& outcome, const Intervention& treatment,
                           const Event& context);

/// Exact necessity, sufficiency, and necessity-and-sufficiency scores by
/// abduction, action and prediction.
ScoreTriple ground_truth_scores(const Scm& m, const ContrastQuery& q);

Intervention intervention_of(const Schema& s, const std::vector<std::string>& vars,
                             const std::vector<std::string>& values);

// SCM file: {"graph":{...}, "exogenous":[{"name","dist":{"0":0.5,...}}], "equations":{"X":"expr"}}
Scm scm_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json scm_to_json(const Scm& m);
Scm load_scm(const std::string& path);

}  // namespace causex
