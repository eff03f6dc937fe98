#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causex/data.hpp"
#include "causex/graph.hpp"
#include "causex/query.hpp"

namespace causex {

class Scm;

/// Logistic model over one-hot indicators of non-reference values (the
/// reference is each variable's first declared value).
struct LogitModel {
  struct Column {
    std::size_t var;
    int value;
  };
  double intercept = 0.0;
  std::vector<Column> columns;
  std::vector<double> coef;
  std::vector<std::size_t> actionable;
  std::vector<std::size_t> context;
  int iterations = 0;
  double gradient_norm = 0.0;

  /// Coefficient of var=value (0 for the reference value or unmodelled vars).
  double coefficient(std::size_t var, int value) const;
  double linear_score(std::span<const int> row) const;
  double probability(std::span<const int> row) const;
};

struct LogitOptions {
  double ridge = 1e-6;
  double tolerance = 1e-8;
  int max_iterations = 100;
};

/// Maximum-likelihood fit by iteratively reweighted least squares on the
/// weighted rows, aggregated by covariate pattern.
LogitModel fit_logit(const Dataset& labeled, const OutcomeSpec& outcome, const std::vector<std::string>& actionable,
                     const std::vector<std::string>& context, const LogitOptions& opts = {});

struct RecourseConfig {
  std::vector<std::string> actionable;
  double alpha = 0.9;
  /// Cost expressions over a, a_hat, a_rank, a_hat_rank and inf; the
  /// default is |a_hat_rank - a_rank|.
  std::map<std::string, std::string> costs;
  std::optional<double> timeout_s;
};

RecourseConfig recourse_config_from_json(const nlohmann::json& j);

struct RecourseProblem {
  Schema schema;
  OutcomeSpec outcome;
  std::vector<int> individual;            // full row, outcome = decision
  std::vector<std::size_t> actionable;    // schema order
  std::vector<std::size_t> context;       // non-descendants of A other than O
  double alpha = 0.9;
  std::vector<std::vector<double>> cost;  // cost[i][value], +inf = forbidden
  std::optional<double> timeout_s;

  std::size_t constraint_count() const { return actionable.size() + 1; }
};

/// Validates the configuration and tabulates costs. The individual's
/// decision must be negative.
RecourseProblem make_problem(const CausalGraph& g, const OutcomeSpec& outcome, const std::vector<int>& individual,
                             const RecourseConfig& cfg);

/// base + Σ_i gain[i][â_i] ≥ rhs, with gains relative to the current values.
struct SufficiencyConstraint {
  std::vector<std::vector<double>> gain;
  double base = 0.0;
  double rhs = 0.0;
  double threshold = 0.0;      // T = Pr(o|a,k) + α·Pr(o'|a,k)
  double p_current = 0.0;      // Pr(o|a,k)
  std::string threshold_source;  // "empirical" or "surrogate" (empty cell)
  bool infeasible = false;     // T ≥ 1

  bool satisfied(const std::vector<int>& assignment) const;
  double score(const std::vector<int>& assignment) const;
};

SufficiencyConstraint sufficiency_constraint(const RecourseProblem& p, const LogitModel& m, const Estimator& est);

struct PlanStep {
  std::string attribute, from, to;
  double cost = 0.0;
};

struct RecoursePlan {
  bool feasible = false;
  std::vector<int> assignment;  // per actionable variable
  std::vector<PlanStep> changes;
  double cost = 0.0;
  double surrogate_probability = 0.0;
  double surrogate_sufficiency = 0.0;
  std::size_t constraint_count = 0;
  std::size_t nodes = 0;
};

RecoursePlan solve(const RecourseProblem& p, const SufficiencyConstraint& c);
RecoursePlan brute_force(const RecourseProblem& p, const SufficiencyConstraint& c);

/// True sufficiency Pr(O_{A←â} ∈ O^≥ | A=a, K=k, O ∈ O^<) in `m`.
double validate_plan(const RecourseProblem& p, const RecoursePlan& plan, const Scm& m);

nlohmann::ordered_json to_json(const RecoursePlan& plan, const RecourseProblem& p, const SufficiencyConstraint& c);

}  // namespace causex
