#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "causex/query.hpp"
#include "causex/scores.hpp"

namespace causex {

class BlackBox;

enum class Level { Global, Contextual, Local };
enum class ScoreMode { Point, Bounds };

const char* level_name(Level l);
const char* score_mode_name(ScoreMode m);
ScoreMode parse_score_mode(const std::string& s);

using Assignment = std::vector<std::pair<std::string, std::string>>;

struct ExplainOptions {
  ScoreKind kind = ScoreKind::NeSuf;
  ScoreMode mode = ScoreMode::Point;
  /// Per-variable value orders, best first; other variables are inferred.
  std::map<std::string, std::vector<std::string>> orders;
  /// Use the declared domain order (last value best) instead of inferring.
  bool use_declared_order = false;
  /// Context under which value orders are inferred.
  Assignment order_context;
  /// Threads used to score attributes; results do not depend on it.
  std::size_t workers = 1;
};

struct Contribution {
  double value = 0.0;
  std::string from, to;  // best pair (x, x'); empty when the range is empty
  bool extreme = false;   // no value on that side of the individual's value
  bool defined = true;
};

struct ExplanationEntry {
  std::string attribute;
  double score = 0.0;  // ranking key
  std::string x, x_prime;
  std::optional<ScoreTriple> triple;
  std::optional<ScoreBounds> bounds;
  std::optional<ScoreDiagnostics> diagnostics;
  std::optional<std::string> error;
  std::vector<std::string> skipped;
  // local level
  std::string value;
  Assignment context;
  std::optional<Contribution> positive;
  std::optional<Contribution> negative;
};

struct ExplanationReport {
  Level level = Level::Global;
  ScoreKind kind = ScoreKind::NeSuf;
  ScoreMode mode = ScoreMode::Point;
  std::string outcome;
  std::string threshold;
  Assignment context;
  Assignment individual;
  std::optional<bool> positive_outcome;
  std::map<std::string, std::vector<std::string>> orders;
  std::vector<ExplanationEntry> entries;  // sorted by score, descending
};

/// Maximum of the requested score over ordered value pairs, per attribute,
/// in the whole population.
ExplanationReport global_explanations(const ScoreSetting& st, const OutcomeSpec& outcome,
                                      const ExplainOptions& opts = {});

/// As global, restricted to context k; `x_var` empty means every attribute
/// outside the context.
ExplanationReport contextual_explanation(const ScoreSetting& st, const OutcomeSpec& outcome,
                                         const std::string& x_var, const Assignment& context,
                                         const ExplainOptions& opts = {});

/// Positive and negative contributions of each of the individual's values.
/// The decision comes from `bb` when given, else from the individual's
/// outcome value.
ExplanationReport local_explanation(const ScoreSetting& st, const OutcomeSpec& outcome, const BlackBox* bb,
                                    const Assignment& individual, const ExplainOptions& opts = {});

/// Attribute names by score, descending; ties keep schema order.
std::vector<std::string> rank_attributes(const ExplanationReport& report, const Schema& s);

}  // namespace causex
