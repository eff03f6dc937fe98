#include "causex/explain.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "causex/blackbox.hpp"
#include "causex/error.hpp"

namespace causex {

namespace {

constexpr double kTieSlack = 1e-12;

std::vector<int> value_order(const ScoreSetting& st, const OutcomeSpec& outcome, const std::string& var,
                             const ExplainOptions& opts) {
  const Variable& v = st.graph->schema().variable(var);
  auto it = opts.orders.find(var);
  if (it == opts.orders.end()) {
    return infer_value_order(*st.est, *st.graph, outcome, st.inputs, var, opts.order_context,
                             opts.use_declared_order);
  }
  std::vector<int> order;
  std::set<int> seen;
  for (const auto& label : it->second) {
    int i = v.index_of(label);
    if (!seen.insert(i).second) fail(ErrorCode::Validation, "order for " + var + " repeats " + label);
    order.push_back(i);
  }
  if (order.size() != v.domain.size()) fail(ErrorCode::Validation, "order for " + var + " must list every value");
  return order;
}

struct PairScore {
  bool ok = false;
  double value = 0.0;
  std::optional<ScoreTriple> triple;
  std::optional<ScoreBounds> bounds;
  std::optional<ScoreDiagnostics> diagnostics;
};

// Score of one contrast; ConditioningOnNull and undefined scores yield !ok
// with a note, NotIdentifiable propagates.
PairScore score_pair(const ScoreSetting& st, const ContrastQuery& q, ScoreKind kind, ScoreMode mode,
                     std::vector<std::string>& skipped) {
  PairScore out;
  const std::string label = q.x_vars.front() + "=" + q.x.front() + " vs " + q.x_prime.front();
  const int k = static_cast<int>(kind);
  try {
    if (mode == ScoreMode::Point) {
      ScoreResult r = point_scores(st, q, std::nullopt, false);
      if (!r.diagnostics.defined[k]) {
        skipped.push_back(label + ": " + score_kind_name(kind) + " undefined (zero-mass conditioning event)");
        return out;
      }
      out.value = pick(r.triple, kind);
      out.triple = r.triple;
      out.diagnostics = std::move(r.diagnostics);
    } else {
      BoundsResult r = score_bounds(st, q);
      if (!r.diagnostics.defined[k]) {
        skipped.push_back(label + ": " + score_kind_name(kind) + " bounds undefined (zero-mass conditioning event)");
        return out;
      }
      const Interval& iv = kind == ScoreKind::Nec ? r.bounds.nec : kind == ScoreKind::Suf ? r.bounds.suf : r.bounds.nesuf;
      out.value = iv.lower;
      out.bounds = r.bounds;
      out.diagnostics = std::move(r.diagnostics);
    }
    out.ok = true;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConditioningOnNull) throw;
    skipped.push_back(label + ": " + e.what());
  }
  return out;
}

Assignment labels_of(const Schema& s, const std::vector<std::size_t>& vars, const std::vector<int>& row) {
  Assignment out;
  for (std::size_t v : vars) out.emplace_back(s[v].name, s[v].domain[static_cast<std::size_t>(row[v])]);
  return out;
}

std::vector<std::string> order_labels(const Variable& v, const std::vector<int>& order) {
  std::vector<std::string> out;
  for (int i : order) out.push_back(v.domain[static_cast<std::size_t>(i)]);
  return out;
}

void sort_entries(ExplanationReport& r) {
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const ExplanationEntry& a, const ExplanationEntry& b) { return a.score > b.score + kTieSlack; });
}

ExplanationEntry best_pair(const ScoreSetting& st, const OutcomeSpec& outcome, const std::string& var,
                           const std::vector<int>& order, const Assignment& context, const ExplainOptions& opts) {
  const Variable& v = st.graph->schema().variable(var);
  ExplanationEntry e;
  e.attribute = var;
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) pairs.emplace_back(order[i], order[j]);
  }
  std::sort(pairs.begin(), pairs.end());
  bool found = false;
  for (const auto& [hi, lo] : pairs) {
    ContrastQuery q{{var}, {v.domain[static_cast<std::size_t>(hi)]}, {v.domain[static_cast<std::size_t>(lo)]}, context, outcome};
    PairScore ps;
    try {
      ps = score_pair(st, q, opts.kind, opts.mode, e.skipped);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NotIdentifiable) throw;
      e.error = err.what();
      return e;
    }
    if (!ps.ok) continue;
    if (!found || ps.value > e.score + kTieSlack) {
      found = true;
      e.score = ps.value;
      e.x = q.x.front();
      e.x_prime = q.x_prime.front();
      e.triple = ps.triple;
      e.bounds = ps.bounds;
      e.diagnostics = std::move(ps.diagnostics);
    }
  }
  return e;
}

void check_context(const Schema& s, const OutcomeSpec& outcome, const Assignment& context) {
  std::set<std::string> seen;
  for (const auto& [name, value] : context) {
    if (name == outcome.name) fail(ErrorCode::Validation, "the context cannot fix the outcome");
    if (!seen.insert(name).second) fail(ErrorCode::Validation, "context names " + name + " twice");
    s.variable(name).index_of(value);
  }
}

}  // namespace

namespace {

// Runs fn(0..n-1) on up to `workers` threads; the first exception in index
// order is rethrown.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

const char* level_name(Level l) {
  switch (l) {
    case Level::Global: return "global";
    case Level::Contextual: return "contextual";
    case Level::Local: return "local";
  }
  return "?";
}

const char* score_mode_name(ScoreMode m) { return m == ScoreMode::Point ? "point" : "bounds"; }

ScoreMode parse_score_mode(const std::string& s) {
  if (s == "point") return ScoreMode::Point;
  if (s == "bounds") return ScoreMode::Bounds;
  fail(ErrorCode::Validation, "unknown score mode '" + s + "' (expected point or bounds)");
}

ExplanationReport contextual_explanation(const ScoreSetting& st, const OutcomeSpec& outcome,
                                         const std::string& x_var, const Assignment& context,
                                         const ExplainOptions& opts) {
  const Schema& s = st.graph->schema();
  check_context(s, outcome, context);
  const Event k = Event::point(s, context);
  if (!context.empty() && st.est->config().smoothing <= 0.0 && st.est->mass(k) <= 0.0) {
    fail(ErrorCode::ConditioningOnNull, "context " + k.describe(s) + " has zero mass");
  }
  ExplanationReport r;
  r.level = context.empty() ? Level::Global : Level::Contextual;
  r.kind = opts.kind;
  r.mode = opts.mode;
  r.outcome = outcome.name;
  r.threshold = s[outcome.var].domain[static_cast<std::size_t>(outcome.threshold)];
  r.context = context;

  std::vector<std::string> attrs;
  if (!x_var.empty()) {
    s.index(x_var);
    if (x_var == outcome.name) fail(ErrorCode::Validation, "the outcome cannot be an attribute");
    for (const auto& [name, value] : context) {
      if (name == x_var) fail(ErrorCode::Validation, "attribute " + x_var + " is fixed by the context");
    }
    attrs.push_back(x_var);
  } else {
    for (const auto& v : s.variables()) {
      if (v.name == outcome.name) continue;
      bool fixed = std::any_of(context.begin(), context.end(), [&](const auto& p) { return p.first == v.name; });
      if (!fixed) attrs.push_back(v.name);
    }
  }
  std::vector<ExplanationEntry> entries(attrs.size());
  std::vector<std::vector<std::string>> orders(attrs.size());
  parallel_for(attrs.size(), opts.workers, [&](std::size_t i) {
    const std::string& a = attrs[i];
    std::vector<int> order;
    try {
      order = value_order(st, outcome, a, opts);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NotIdentifiable) throw;
      entries[i].attribute = a;
      entries[i].error = err.what();
      return;
    }
    orders[i] = order_labels(s.variable(a), order);
    entries[i] = best_pair(st, outcome, a, order, context, opts);
  });
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (!orders[i].empty()) r.orders[attrs[i]] = orders[i];
    if (!x_var.empty() && entries[i].error) fail(ErrorCode::NotIdentifiable, *entries[i].error);
    r.entries.push_back(std::move(entries[i]));
  }
  if (r.level == Level::Global && !x_var.empty()) r.level = Level::Contextual;
  sort_entries(r);
  return r;
}

ExplanationReport global_explanations(const ScoreSetting& st, const OutcomeSpec& outcome, const ExplainOptions& opts) {
  ExplanationReport r = contextual_explanation(st, outcome, "", {}, opts);
  r.level = Level::Global;
  return r;
}

ExplanationReport local_explanation(const ScoreSetting& st, const OutcomeSpec& outcome, const BlackBox* bb,
                                    const Assignment& individual, const ExplainOptions& opts) {
  const CausalGraph& g = *st.graph;
  const Schema& s = g.schema();
  std::vector<int> row(s.size(), -1);
  for (const auto& [name, value] : individual) {
    std::size_t v = s.index(name);
    if (row[v] >= 0) fail(ErrorCode::Validation, "individual names " + name + " twice");
    row[v] = s[v].index_of(value);
  }
  for (std::size_t v = 0; v < s.size(); ++v) {
    if (row[v] < 0 && !(bb && v == outcome.var)) {
      fail(ErrorCode::Validation, "individual lacks a value for " + s[v].name);
    }
  }
  if (bb) row[outcome.var] = bb->predict(row);
  const bool positive = outcome.positive(row[outcome.var]);

  ExplanationReport r;
  r.level = Level::Local;
  r.kind = positive ? ScoreKind::Nec : ScoreKind::Suf;
  r.mode = opts.mode;
  r.outcome = outcome.name;
  r.threshold = s[outcome.var].domain[static_cast<std::size_t>(outcome.threshold)];
  std::vector<std::size_t> all(s.size());
  for (std::size_t v = 0; v < s.size(); ++v) all[v] = v;
  r.individual = labels_of(s, all, row);
  r.positive_outcome = positive;

  for (std::size_t xv = 0; xv < s.size(); ++xv) {
    if (xv == outcome.var) continue;
    const Variable& var = s[xv];
    ExplanationEntry e;
    e.attribute = var.name;
    e.value = var.domain[static_cast<std::size_t>(row[xv])];
    const auto desc = descendant_mask(g, {xv});
    std::vector<std::size_t> kvars;
    for (std::size_t v = 0; v < s.size(); ++v) {
      if (!desc[v] && v != outcome.var) kvars.push_back(v);
    }
    e.context = labels_of(s, kvars, row);

    std::vector<int> order;
    try {
      order = value_order(st, outcome, var.name, opts);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NotIdentifiable) throw;
      e.error = err.what();
      r.entries.push_back(std::move(e));
      continue;
    }
    r.orders[var.name] = order_labels(var, order);
    const auto at = std::find(order.begin(), order.end(), row[xv]) - order.begin();
    std::vector<int> higher(order.begin(), order.begin() + at);
    std::vector<int> lower(order.begin() + at + 1, order.end());
    std::sort(higher.begin(), higher.end());
    std::sort(lower.begin(), lower.end());

    // For each candidate value c, score the contrast (c vs current) or
    // (current vs c) and keep the maximum.
    auto contribution = [&](const std::vector<int>& range, bool current_is_baseline, ScoreKind kind) {
      Contribution c;
      if (range.empty()) {
        c.extreme = true;
        return c;
      }
      bool found = false;
      for (int other : range) {
        const std::string& cur = e.value;
        const std::string& oth = var.domain[static_cast<std::size_t>(other)];
        ContrastQuery q{{var.name}, {current_is_baseline ? oth : cur}, {current_is_baseline ? cur : oth},
                        e.context, outcome};
        PairScore ps = score_pair(st, q, kind, opts.mode, e.skipped);
        if (!ps.ok) continue;
        if (!found || ps.value > c.value + kTieSlack) {
          found = true;
          c.value = ps.value;
          c.from = q.x.front();
          c.to = q.x_prime.front();
        }
      }
      c.defined = found;
      return c;
    };
    try {
      if (!positive) {
        e.negative = contribution(higher, true, ScoreKind::Suf);
        e.positive = contribution(lower, false, ScoreKind::Suf);
      } else {
        e.positive = contribution(lower, false, ScoreKind::Nec);
        e.negative = contribution(higher, true, ScoreKind::Nec);
      }
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NotIdentifiable) throw;
      e.error = err.what();
      e.positive.reset();
      e.negative.reset();
    }
    if (e.positive && e.negative) e.score = std::max(e.positive->value, e.negative->value);
    r.entries.push_back(std::move(e));
  }
  sort_entries(r);
  return r;
}

std::vector<std::string> rank_attributes(const ExplanationReport& report, const Schema& s) {
  if (report.entries.empty()) fail(ErrorCode::Validation, "cannot rank an empty report");
  std::vector<const ExplanationEntry*> es;
  for (const auto& e : report.entries) es.push_back(&e);
  std::stable_sort(es.begin(), es.end(), [&](const ExplanationEntry* a, const ExplanationEntry* b) {
    if (a->score > b->score + kTieSlack) return true;
    if (b->score > a->score + kTieSlack) return false;
    return s.index(a->attribute) < s.index(b->attribute);
  });
  std::vector<std::string> out;
  for (const auto* e : es) out.push_back(e->attribute);
  return out;
}

}  // namespace causex
