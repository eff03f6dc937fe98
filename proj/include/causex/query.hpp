#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "causex/data.hpp"
#include "causex/graph.hpp"

namespace causex {

/// Outcome variable with a desirability order and a positive threshold.
/// `order` lists domain indices best first (o_1 > ... > o_γ); values ranked
/// at or above the threshold form the positive class O^≥.
struct OutcomeSpec {
  std::string name;
  std::size_t var = 0;
  std::vector<int> order;
  int threshold = 0;

  /// `order_labels` defaults to the reversed declared domain (last declared
  /// value is the most desirable).
  static OutcomeSpec make(const Schema& s, const std::string& name, const std::string& threshold,
                          const std::optional<std::vector<std::string>>& order_labels = std::nullopt);

  std::size_t classes() const { return order.size(); }
  int rank(int value) const;
  bool positive(int value) const { return rank(value) <= rank(threshold); }
  std::vector<int> positive_values() const;
  std::vector<int> negative_values() const;

  Event positive_event(const Schema& s) const { return Event::values(s, var, positive_values()); }
  Event negative_event(const Schema& s) const { return Event::values(s, var, negative_values()); }
};

/// Influence of x relative to the baseline x' on the outcome, in context k.
struct ContrastQuery {
  std::vector<std::string> x_vars;
  std::vector<std::string> x;        // aligned with x_vars
  std::vector<std::string> x_prime;  // aligned with x_vars
  std::vector<std::pair<std::string, std::string>> context;
  OutcomeSpec outcome;

  /// Checks names, domains, x != x', and K disjoint from X ∪ {O}.
  void validate(const Schema& s) const;

  Event treatment(const Schema& s) const;
  Event baseline(const Schema& s) const;
  Event context_event(const Schema& s) const;
  NameSet x_set() const { return {x_vars.begin(), x_vars.end()}; }
  NameSet context_names() const;
};

struct ScoreTriple {
  double nec = 0.0;
  double suf = 0.0;
  double nesuf = 0.0;
};

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double v, double slack) const { return v >= lower - slack && v <= upper + slack; }
  double width() const { return upper - lower; }
};

struct ScoreBounds {
  Interval nec;
  Interval suf;
  Interval nesuf;
};

enum class ScoreKind { Nec, Suf, NeSuf };

const char* score_kind_name(ScoreKind k);
ScoreKind parse_score_kind(const std::string& s);
double pick(const ScoreTriple& t, ScoreKind k);

}  // namespace causex
