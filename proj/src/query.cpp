#include "causex/query.hpp"

#include <algorithm>
#include <set>

#include "causex/error.hpp"

namespace causex {

OutcomeSpec OutcomeSpec::make(const Schema& s, const std::string& name, const std::string& threshold,
                              const std::optional<std::vector<std::string>>& order_labels) {
  OutcomeSpec o;
  o.name = name;
  o.var = s.index(name);
  const Variable& v = s[o.var];
  if (order_labels) {
    std::set<int> seen;
    for (const auto& l : *order_labels) {
      int i = v.index_of(l);
      if (!seen.insert(i).second) fail(ErrorCode::Validation, "outcome order repeats " + l);
      o.order.push_back(i);
    }
    if (o.order.size() != v.domain.size()) {
      fail(ErrorCode::Validation, "outcome order must list every value of " + name);
    }
  } else {
    for (std::size_t i = v.domain.size(); i-- > 0;) o.order.push_back(static_cast<int>(i));
  }
  if (o.order.size() < 2) fail(ErrorCode::Validation, "outcome needs at least two classes");
  int t = v.find(threshold);
  if (t < 0) {
    fail(ErrorCode::Validation, "threshold '" + threshold + "' is not in the domain of " + name);
  }
  o.threshold = t;
  if (o.negative_values().empty()) {
    fail(ErrorCode::Validation, "threshold '" + threshold + "' leaves no negative outcome value");
  }
  return o;
}

int OutcomeSpec::rank(int value) const {
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] == value) return static_cast<int>(i);
  }
  fail(ErrorCode::Validation, "outcome value index out of range");
}

std::vector<int> OutcomeSpec::positive_values() const {
  std::vector<int> out;
  for (int v : order) {
    if (positive(v)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> OutcomeSpec::negative_values() const {
  std::vector<int> out;
  for (int v : order) {
    if (!positive(v)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ContrastQuery::validate(const Schema& s) const {
  if (x_vars.empty()) fail(ErrorCode::Validation, "query needs at least one attribute");
  if (x.size() != x_vars.size() || x_prime.size() != x_vars.size()) {
    fail(ErrorCode::Validation, "x and x' must assign every queried attribute");
  }
  std::set<std::string> xs;
  bool differs = false;
  for (std::size_t i = 0; i < x_vars.size(); ++i) {
    const Variable& v = s.variable(x_vars[i]);
    if (!xs.insert(x_vars[i]).second) fail(ErrorCode::Validation, "attribute listed twice: " + x_vars[i]);
    if (x_vars[i] == outcome.name) fail(ErrorCode::Validation, "the outcome cannot be an attribute");
    v.index_of(x[i]);
    v.index_of(x_prime[i]);
    differs = differs || x[i] != x_prime[i];
  }
  if (!differs) fail(ErrorCode::Validation, "x and x' must differ");
  std::set<std::string> ks;
  for (const auto& [name, value] : context) {
    if (xs.count(name) || name == outcome.name) {
      fail(ErrorCode::Validation, "context variable " + name + " overlaps the attributes or outcome");
    }
    if (!ks.insert(name).second) fail(ErrorCode::Validation, "context names " + name + " twice");
    s.variable(name).index_of(value);
  }
}

Event ContrastQuery::treatment(const Schema& s) const {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < x_vars.size(); ++i) pairs.emplace_back(x_vars[i], x[i]);
  return Event::point(s, pairs);
}

Event ContrastQuery::baseline(const Schema& s) const {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < x_vars.size(); ++i) pairs.emplace_back(x_vars[i], x_prime[i]);
  return Event::point(s, pairs);
}

Event ContrastQuery::context_event(const Schema& s) const { return Event::point(s, context); }

NameSet ContrastQuery::context_names() const {
  NameSet out;
  for (const auto& [n, v] : context) out.insert(n);
  return out;
}

const char* score_kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::Nec: return "nec";
    case ScoreKind::Suf: return "suf";
    case ScoreKind::NeSuf: return "nesuf";
  }
  return "?";
}

ScoreKind parse_score_kind(const std::string& s) {
  if (s == "nec") return ScoreKind::Nec;
  if (s == "suf") return ScoreKind::Suf;
  if (s == "nesuf") return ScoreKind::NeSuf;
  fail(ErrorCode::Validation, "unknown score kind '" + s + "' (expected nec, suf or nesuf)");
}

double pick(const ScoreTriple& t, ScoreKind k) {
  switch (k) {
    case ScoreKind::Nec: return t.nec;
    case ScoreKind::Suf: return t.suf;
    case ScoreKind::NeSuf: return t.nesuf;
  }
  return 0.0;
}

}  // namespace causex
