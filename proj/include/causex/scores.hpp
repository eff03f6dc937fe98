#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causex/data.hpp"
#include "causex/graph.hpp"
#include "causex/query.hpp"

namespace causex {

/// What the score engine needs to know about the decision being explained.
/// `inputs` are the black box's input variables; when unknown, every
/// variable outside the treatment and the conditioning set stands in.
struct ScoreSetting {
  const Estimator* est = nullptr;
  const CausalGraph* graph = nullptr;
  std::optional<NameSet> inputs;
};

/// Outcome-input set used for admissibility checks of `treatment` given the
/// conditioning set.
NameSet outcome_inputs(const ScoreSetting& st, const NameSet& treatment, const NameSet& conditioning,
                       const std::string& outcome);

/// Default adjustment set for the query: the graph default relative to the
/// outcome inputs, minus the context variables.
AdjustmentSet default_adjustment(const ScoreSetting& st, const ContrastQuery& q);

/// Two-valued view of a multi-class outcome (positive iff in O^≥).
struct BinaryOutcome {
  Event positive;
  Event negative;
};
BinaryOutcome binarize(const Schema& s, const OutcomeSpec& outcome);

struct ScoreDiagnostics {
  ScoreTriple raw;
  bool clamped[3] = {false, false, false};
  bool defined[3] = {true, true, true};
  AdjustmentSet adjustment;
  NameSet outcome_inputs;
  bool inputs_proxy = false;
  std::size_t skipped_cells = 0;
  double skipped_mass = 0.0;
  std::vector<std::string> notes;

  double& raw_value(int which);
};

struct ScoreResult {
  ScoreTriple triple;
  ScoreDiagnostics diagnostics;
};

struct BoundsResult {
  ScoreBounds bounds;
  ScoreDiagnostics diagnostics;
  /// Interventional and joint terms the bounds were computed from.
  double do_x = 0.0, do_xp = 0.0;        // Pr(o | do(x), k), Pr(o | do(x'), k)
  double p_ox = 0.0, p_oxp = 0.0;        // Pr(o, x | k), Pr(o, x' | k)
  double p_opx = 0.0, p_opxp = 0.0;      // Pr(o', x | k), Pr(o', x' | k)
};

/// Identified scores under monotonicity with backdoor adjustment over `adj`.
/// Scores whose conditioning event is null are reported undefined (value 0)
/// unless `require_all`, which throws ConditioningOnNull instead.
ScoreResult point_scores(const ScoreSetting& st, const ContrastQuery& q,
                         const std::optional<AdjustmentSet>& adj = std::nullopt, bool require_all = true);

/// Bounds without the monotonicity assumption. When the graph has no
/// directed path from X to the outcome inputs every bound collapses to 0.
BoundsResult score_bounds(const ScoreSetting& st, const ContrastQuery& q,
                          const std::optional<AdjustmentSet>& adj = std::nullopt);

/// No-confounding fallback: point_scores with an empty adjustment set and
/// no admissibility check.
ScoreResult naive_scores(const Estimator& est, const ContrastQuery& q, bool require_all = true);

/// RHS − NeSuf of Pr(o,x|k)·Nec + Pr(o',x'|k)·Suf + 1 − Pr(x|k) − Pr(x'|k) ≥ NeSuf.
double nesuf_relation_gap(const ScoreTriple& t, const Estimator& est, const ContrastQuery& q);

nlohmann::ordered_json to_json(const ScoreDiagnostics& d, const Schema& s);
nlohmann::ordered_json to_json(const ScoreTriple& t);
nlohmann::ordered_json to_json(const ScoreBounds& b);

}  // namespace causex
