#include "causex/scores.hpp"

#include <algorithm>
#include <cmath>

#include "causex/error.hpp"

namespace causex {

namespace {

constexpr double kClampSlack = 1e-12;

double clamp01(double raw, bool& clamped) {
  clamped = raw < -kClampSlack || raw > 1.0 + kClampSlack;
  return std::clamp(raw, 0.0, 1.0);
}

NameSet with(NameSet a, const NameSet& b) {
  a.insert(b.begin(), b.end());
  return a;
}

// The three identified formulas over adjustment cells `adj`.
void compute_point(const Estimator& est, const ContrastQuery& q, const std::vector<std::size_t>& adj,
                   bool require_all, ScoreResult& r) {
  const Schema& s = est.schema();
  const BinaryOutcome b = binarize(s, q.outcome);
  const Event x = q.treatment(s);
  const Event xp = q.baseline(s);
  const Event k = q.context_event(s);
  ScoreDiagnostics& d = r.diagnostics;

  auto guarded = [&](int which, const char* name, auto&& compute) {
    try {
      d.raw_value(which) = compute();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConditioningOnNull || require_all) throw;
      d.defined[which] = false;
      d.notes.push_back(std::string(name) + " undefined: " + e.what());
    }
  };
  auto track = [&](const Adjusted& a) {
    d.skipped_cells += a.skipped_cells;
    d.skipped_mass = std::max(d.skipped_mass, a.skipped_mass);
    return a.value;
  };
  auto positive_mass = [&](const Event& e, const Event& given, const char* label) {
    double p = est.prob(e, given);
    if (p <= 0.0) {
      fail(ErrorCode::ConditioningOnNull, std::string("conditioning event ") + label + " " +
                                              (e & given).describe(s) + " has zero mass");
    }
    return p;
  };

  guarded(0, "nec", [&] {
    const double den = positive_mass(b.positive, x & k, "(o, x, k)");
    const double sum = track(est.adjusted(b.negative, xp, x, k, adj));
    return (sum - est.prob(b.negative, x & k)) / den;
  });
  guarded(1, "suf", [&] {
    const double den = positive_mass(b.negative, xp & k, "(o', x', k)");
    const double sum = track(est.adjusted(b.positive, x, xp, k, adj));
    return (sum - est.prob(b.positive, xp & k)) / den;
  });
  guarded(2, "nesuf", [&] {
    return track(est.adjusted(b.positive, x, Event{}, k, adj)) -
           track(est.adjusted(b.positive, xp, Event{}, k, adj));
  });
  r.triple.nec = d.defined[0] ? clamp01(d.raw.nec, d.clamped[0]) : 0.0;
  r.triple.suf = d.defined[1] ? clamp01(d.raw.suf, d.clamped[1]) : 0.0;
  r.triple.nesuf = d.defined[2] ? clamp01(d.raw.nesuf, d.clamped[2]) : 0.0;
  for (int i = 0; i < 3; ++i) {
    if (d.clamped[i]) {
      d.notes.push_back(std::string(score_kind_name(static_cast<ScoreKind>(i))) +
                        " clamped to [0,1]; a raw value outside the range signals a monotonicity violation");
    }
  }
}

bool reaches_inputs(const ScoreSetting& st, const ContrastQuery& q) {
  const CausalGraph& g = *st.graph;
  const auto desc = descendant_mask(g, g.indices(q.x_set()));
  NameSet targets = st.inputs ? *st.inputs : NameSet{q.outcome.name};
  for (std::size_t v : g.indices(targets)) {
    if (desc[v]) return true;
  }
  return false;
}

void check_setting(const ScoreSetting& st) {
  if (!st.est || !st.graph) fail(ErrorCode::Validation, "score setting needs an estimator and a graph");
  if (!(st.est->schema() == st.graph->schema())) {
    fail(ErrorCode::Validation, "dataset schema differs from graph schema");
  }
  if (st.inputs) {
    for (const auto& n : *st.inputs) st.graph->schema().index(n);
  }
}

}  // namespace

double& ScoreDiagnostics::raw_value(int which) {
  return which == 0 ? raw.nec : which == 1 ? raw.suf : raw.nesuf;
}

NameSet outcome_inputs(const ScoreSetting& st, const NameSet& treatment, const NameSet& conditioning,
                       const std::string& outcome) {
  (void)outcome;
  if (st.inputs) return *st.inputs;
  return input_proxy(*st.graph, treatment, conditioning);
}

AdjustmentSet default_adjustment(const ScoreSetting& st, const ContrastQuery& q) {
  check_setting(st);
  const NameSet xs = q.x_set();
  const NameSet ks = q.context_names();
  const NameSet inputs = outcome_inputs(st, xs, ks, q.outcome.name);
  AdjustmentSet adj = default_adjustment_set(*st.graph, xs, inputs);
  adj.members.erase(q.outcome.name);
  for (const auto& k : ks) adj.members.erase(k);
  return adj;
}

BinaryOutcome binarize(const Schema& s, const OutcomeSpec& outcome) {
  return {outcome.positive_event(s), outcome.negative_event(s)};
}

ScoreResult point_scores(const ScoreSetting& st, const ContrastQuery& q, const std::optional<AdjustmentSet>& adj,
                         bool require_all) {
  check_setting(st);
  const CausalGraph& g = *st.graph;
  q.validate(g.schema());
  ScoreResult r;
  ScoreDiagnostics& d = r.diagnostics;
  d.adjustment = adj ? *adj : default_adjustment(st, q);
  const NameSet xs = q.x_set();
  const NameSet ks = q.context_names();
  d.outcome_inputs = outcome_inputs(st, xs, with(d.adjustment.members, ks), q.outcome.name);
  d.inputs_proxy = !st.inputs;
  if (d.adjustment.members.count(q.outcome.name)) {
    fail(ErrorCode::NotIdentifiable, "the outcome cannot be in the adjustment set");
  }
  require_admissible(g, xs, d.outcome_inputs, d.adjustment.members, ks);
  if (!reaches_inputs(st, q)) {
    d.notes.push_back("no directed path from the attributes to the outcome inputs; all scores are zero");
    return r;
  }
  compute_point(*st.est, q, g.indices(d.adjustment.members), require_all, r);
  return r;
}

BoundsResult score_bounds(const ScoreSetting& st, const ContrastQuery& q, const std::optional<AdjustmentSet>& adj) {
  check_setting(st);
  const CausalGraph& g = *st.graph;
  const Schema& s = g.schema();
  const Estimator& est = *st.est;
  q.validate(s);
  BoundsResult r;
  ScoreDiagnostics& d = r.diagnostics;
  d.adjustment = adj ? *adj : default_adjustment(st, q);
  const NameSet xs = q.x_set();
  const NameSet ks = q.context_names();
  d.outcome_inputs = outcome_inputs(st, xs, with(d.adjustment.members, ks), q.outcome.name);
  d.inputs_proxy = !st.inputs;
  require_admissible(g, xs, d.outcome_inputs, d.adjustment.members, ks);

  const BinaryOutcome b = binarize(s, q.outcome);
  const Event x = q.treatment(s);
  const Event xp = q.baseline(s);
  const Event k = q.context_event(s);
  const auto idx = g.indices(d.adjustment.members);
  auto track = [&](const Adjusted& a) {
    d.skipped_cells += a.skipped_cells;
    d.skipped_mass = std::max(d.skipped_mass, a.skipped_mass);
    return a.value;
  };

  r.p_ox = est.prob(b.positive & x, k);
  r.p_oxp = est.prob(b.positive & xp, k);
  r.p_opx = est.prob(b.negative & x, k);
  r.p_opxp = est.prob(b.negative & xp, k);
  if (!reaches_inputs(st, q)) {
    // The intervention cannot move the outcome: both do-terms equal Pr(o | k).
    r.do_x = r.do_xp = est.prob(b.positive, k);
    d.notes.push_back("no directed path from the attributes to the outcome inputs; all scores are zero");
    return r;
  }
  r.do_x = track(est.adjusted(b.positive, x, Event{}, k, idx));
  r.do_xp = track(est.adjusted(b.positive, xp, Event{}, k, idx));
  const double do_op_x = track(est.adjusted(b.negative, x, Event{}, k, idx));
  const double do_op_xp = track(est.adjusted(b.negative, xp, Event{}, k, idx));

  ScoreBounds& sb = r.bounds;
  if (r.p_ox > 0.0) {
    sb.nec.lower = std::max(0.0, (r.p_ox + r.p_oxp - r.do_xp) / r.p_ox);
    sb.nec.upper = std::min((do_op_xp - r.p_opxp) / r.p_ox, 1.0);
  } else {
    d.defined[0] = false;
    sb.nec = {0.0, 1.0};
    d.notes.push_back("nec bounds vacuous: (o, x, k) has zero mass");
  }
  if (r.p_opxp > 0.0) {
    sb.suf.lower = std::max(0.0, (r.p_opx + r.p_opxp - do_op_x) / r.p_opxp);
    sb.suf.upper = std::min((r.do_x - r.p_ox) / r.p_opxp, 1.0);
  } else {
    d.defined[1] = false;
    sb.suf = {0.0, 1.0};
    d.notes.push_back("suf bounds vacuous: (o', x', k) has zero mass");
  }
  sb.nesuf.lower = std::max(0.0, r.do_x - r.do_xp);
  sb.nesuf.upper = std::min(r.do_x, do_op_xp);

  Interval* all[3] = {&sb.nec, &sb.suf, &sb.nesuf};
  for (int i = 0; i < 3; ++i) {
    Interval& iv = *all[i];
    iv.lower = std::clamp(iv.lower, 0.0, 1.0);
    iv.upper = std::clamp(iv.upper, 0.0, 1.0);
    if (iv.lower > iv.upper) {
      d.clamped[i] = true;
      d.notes.push_back(std::string(score_kind_name(static_cast<ScoreKind>(i))) +
                        " bounds crossed on this sample; upper raised to the lower bound");
      iv.upper = iv.lower;
    }
  }
  return r;
}

ScoreResult naive_scores(const Estimator& est, const ContrastQuery& q, bool require_all) {
  q.validate(est.schema());
  ScoreResult r;
  r.diagnostics.inputs_proxy = true;
  r.diagnostics.notes.push_back("assumes no confounding between the attributes and the outcome");
  compute_point(est, q, {}, require_all, r);
  return r;
}

double nesuf_relation_gap(const ScoreTriple& t, const Estimator& est, const ContrastQuery& q) {
  const Schema& s = est.schema();
  const BinaryOutcome b = binarize(s, q.outcome);
  const Event x = q.treatment(s);
  const Event xp = q.baseline(s);
  const Event k = q.context_event(s);
  const double rhs = est.prob(b.positive & x, k) * t.nec + est.prob(b.negative & xp, k) * t.suf + 1.0 -
                     est.prob(x, k) - est.prob(xp, k);
  return rhs - t.nesuf;
}

nlohmann::ordered_json to_json(const ScoreTriple& t) {
  return {{"nec", t.nec}, {"suf", t.suf}, {"nesuf", t.nesuf}};
}

nlohmann::ordered_json to_json(const ScoreBounds& b) {
  auto iv = [](const Interval& i) { return nlohmann::ordered_json{{"lower", i.lower}, {"upper", i.upper}}; };
  return {{"nec", iv(b.nec)}, {"suf", iv(b.suf)}, {"nesuf", iv(b.nesuf)}};
}

nlohmann::ordered_json to_json(const ScoreDiagnostics& d, const Schema& s) {
  (void)s;
  nlohmann::ordered_json j;
  j["raw"] = to_json(d.raw);
  j["clamped"] = {{"nec", d.clamped[0]}, {"suf", d.clamped[1]}, {"nesuf", d.clamped[2]}};
  j["defined"] = {{"nec", d.defined[0]}, {"suf", d.defined[1]}, {"nesuf", d.defined[2]}};
  j["adjustment_set"] = std::vector<std::string>(d.adjustment.members.begin(), d.adjustment.members.end());
  j["outcome_inputs"] = std::vector<std::string>(d.outcome_inputs.begin(), d.outcome_inputs.end());
  j["inputs_proxy"] = d.inputs_proxy;
  j["skipped_cells"] = d.skipped_cells;
  j["skipped_mass"] = d.skipped_mass;
  j["notes"] = d.notes;
  return j;
}

}  // namespace causex
