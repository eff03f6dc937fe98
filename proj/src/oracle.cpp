#include "causex/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "causex/error.hpp"

namespace causex {

namespace {

constexpr std::uint64_t kMaxTableSize = std::uint64_t{1} << 22;
constexpr std::size_t kSampledChecks = 4096;

std::uint64_t checked_product(std::uint64_t a, std::uint64_t b) {
  if (b != 0 && a > std::numeric_limits<std::uint64_t>::max() / b) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

// Expression-backed mechanism: binds parents by name and maps the result
// back to a domain index of the target variable.
MechanismFn expression_mechanism(ExprPtr expr, const Schema& schema, std::size_t var,
                                 std::vector<std::size_t> endo, std::vector<std::size_t> exo,
                                 const std::vector<ExogenousVar>& exo_vars) {
  struct Binding {
    std::string name;
    std::vector<Value> values;
  };
  auto endo_b = std::make_shared<std::vector<Binding>>();
  auto exo_b = std::make_shared<std::vector<Binding>>();
  for (std::size_t p : endo) {
    const Variable& v = schema[p];
    Binding b{v.name, {}};
    for (const auto& l : v.domain) b.values.push_back(Value::from_label(l, v.ordered ? &v.domain : nullptr));
    endo_b->push_back(std::move(b));
  }
  for (std::size_t e : exo) {
    Binding b{exo_vars[e].name, {}};
    for (const auto& l : exo_vars[e].values) b.values.push_back(Value::from_label(l));
    exo_b->push_back(std::move(b));
  }
  auto targets = std::make_shared<std::vector<Value>>();
  const Variable& tv = schema[var];
  for (const auto& l : tv.domain) targets->push_back(Value::from_label(l));
  std::string name = tv.name;
  return [expr, endo_b, exo_b, targets, name](std::span<const int> en, std::span<const int> ex) {
    Env env;
    for (std::size_t i = 0; i < endo_b->size(); ++i) {
      env[(*endo_b)[i].name] = (*endo_b)[i].values[static_cast<std::size_t>(en[i])];
    }
    for (std::size_t i = 0; i < exo_b->size(); ++i) {
      env[(*exo_b)[i].name] = (*exo_b)[i].values[static_cast<std::size_t>(ex[i])];
    }
    Value out = evaluate(*expr, env);
    for (std::size_t i = 0; i < targets->size(); ++i) {
      if ((*targets)[i] == out) return static_cast<int>(i);
    }
    fail(ErrorCode::Evaluation,
         "equation for " + name + " produced '" + out.to_string() + "', outside its domain");
  };
}

struct CellCounter {
  const std::vector<ExogenousVar>& exo;
  std::vector<int> u;

  explicit CellCounter(const std::vector<ExogenousVar>& e) : exo(e), u(e.size(), 0) {}

  // Last variable varies fastest. Returns false after the final cell.
  bool next() {
    for (std::size_t i = u.size(); i-- > 0;) {
      if (static_cast<std::size_t>(++u[i]) < exo[i].values.size()) return true;
      u[i] = 0;
    }
    return false;
  }

  double prob() const {
    double p = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) p *= exo[i].probs[static_cast<std::size_t>(u[i])];
    return p;
  }
};

std::vector<int> forced_of(const Schema& s, const Intervention& iv) {
  std::vector<int> forced(s.size(), -1);
  for (const auto& [var, val] : iv) {
    if (var >= s.size()) fail(ErrorCode::Validation, "intervention variable out of range");
    if (val < 0 || static_cast<std::size_t>(val) >= s[var].domain.size()) {
      fail(ErrorCode::Validation, "intervention value out of domain for " + s[var].name);
    }
    if (forced[var] >= 0) fail(ErrorCode::Validation, "intervention sets " + s[var].name + " twice");
    forced[var] = val;
  }
  return forced;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
  auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::size_t Rng::discrete(std::span<const double> probs) {
  double r = uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (r < acc) return i;
  }
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

Scm::Scm(CausalGraph graph, std::vector<ExogenousVar> exogenous,
         const std::map<std::string, std::string>& equations)
    : graph_(std::move(graph)), exo_(std::move(exogenous)) {
  const Schema& s = graph_.schema();
  std::map<std::string, std::size_t> exo_index;
  for (std::size_t i = 0; i < exo_.size(); ++i) exo_index[exo_[i].name] = i;
  for (const auto& [name, src] : equations) {
    if (!s.find(name)) fail(ErrorCode::Validation, "equation for unknown variable " + name);
  }
  for (std::size_t v = 0; v < s.size(); ++v) {
    auto it = equations.find(s[v].name);
    if (it == equations.end()) fail(ErrorCode::Validation, "no equation for " + s[v].name);
    ExprPtr e = parse(it->second);
    Equation eq;
    eq.endo_parents = graph_.parents(v);
    std::set<std::string> allowed;
    for (std::size_t p : eq.endo_parents) allowed.insert(s[p].name);
    for (const auto& id : free_identifiers(*e)) {
      auto ex = exo_index.find(id);
      if (ex != exo_index.end()) {
        eq.exo_parents.push_back(ex->second);
        allowed.insert(id);
      }
    }
    std::sort(eq.exo_parents.begin(), eq.exo_parents.end());
    check_bound(*e, allowed, "equation for " + s[v].name);
    eq.source = it->second;
    eqs_.push_back(std::move(eq));
  }
  for (std::size_t v = 0; v < s.size(); ++v) {
    eqs_[v].fn = expression_mechanism(parse(eqs_[v].source), s, v, eqs_[v].endo_parents,
                                      eqs_[v].exo_parents, exo_);
  }
  compile();
}

Scm::Scm(CausalGraph graph, std::vector<ExogenousVar> exogenous, std::vector<Equation> equations)
    : graph_(std::move(graph)), exo_(std::move(exogenous)), eqs_(std::move(equations)) {
  if (eqs_.size() != graph_.size()) fail(ErrorCode::Validation, "one equation per variable required");
  for (std::size_t v = 0; v < eqs_.size(); ++v) {
    auto expected = graph_.parents(v);
    auto got = eqs_[v].endo_parents;
    std::sort(got.begin(), got.end());
    if (got != expected) {
      fail(ErrorCode::Validation, "equation parents of " + graph_.schema()[v].name + " differ from the graph");
    }
    for (std::size_t e : eqs_[v].exo_parents) {
      if (e >= exo_.size()) fail(ErrorCode::Validation, "exogenous index out of range");
    }
    if (!eqs_[v].fn) fail(ErrorCode::Validation, "missing mechanism for " + graph_.schema()[v].name);
  }
  compile();
}

void Scm::compile() {
  const Schema& s = graph_.schema();
  std::set<std::string> names;
  for (const auto& v : s.variables()) names.insert(v.name);
  cells_ = 1;
  for (const auto& e : exo_) {
    if (!names.insert(e.name).second) fail(ErrorCode::Validation, "duplicate variable name " + e.name);
    if (e.values.empty() || e.values.size() != e.probs.size()) {
      fail(ErrorCode::Validation, "exogenous " + e.name + " needs one probability per value");
    }
    std::set<std::string> vals(e.values.begin(), e.values.end());
    if (vals.size() != e.values.size()) fail(ErrorCode::Validation, "exogenous " + e.name + " repeats a value");
    double sum = 0.0;
    for (double p : e.probs) {
      if (!std::isfinite(p) || p < 0.0) fail(ErrorCode::Validation, "exogenous " + e.name + " has a negative probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "exogenous " << e.name << " probabilities sum to " << sum;
      fail(ErrorCode::Validation, os.str());
    }
    cells_ = checked_product(cells_, e.values.size());
  }

  tables_.assign(eqs_.size(), {});
  for (std::size_t v = 0; v < eqs_.size(); ++v) {
    const Equation& eq = eqs_[v];
    std::uint64_t size = 1;
    for (std::size_t p : eq.endo_parents) size = checked_product(size, s[p].domain.size());
    for (std::size_t e : eq.exo_parents) size = checked_product(size, exo_[e].values.size());
    if (size > kMaxTableSize) continue;
    std::vector<int> table(size, -1);
    std::vector<int> en(eq.endo_parents.size(), 0), ex(eq.exo_parents.size(), 0);
    for (std::uint64_t idx = 0; idx < size; ++idx) {
      std::uint64_t rem = idx;
      for (std::size_t i = ex.size(); i-- > 0;) {
        std::size_t d = exo_[eq.exo_parents[i]].values.size();
        ex[i] = static_cast<int>(rem % d);
        rem /= d;
      }
      for (std::size_t i = en.size(); i-- > 0;) {
        std::size_t d = s[eq.endo_parents[i]].domain.size();
        en[i] = static_cast<int>(rem % d);
        rem /= d;
      }
      try {
        int out = eq.fn(en, ex);
        if (out >= 0 && static_cast<std::size_t>(out) < s[v].domain.size()) table[idx] = out;
      } catch (const Error&) {
      }
    }
    tables_[v] = std::move(table);
  }
  check_cells_exhaustively();
}

void Scm::check_cells_exhaustively() const {
  std::vector<int> out(graph_.size());
  if (cells_ <= kMaxExhaustiveCells) {
    for_each_cell([&](std::span<const int> u, double) { solve(u, {}, out); });
    return;
  }
  Rng rng(0);
  std::vector<int> u(exo_.size());
  for (std::size_t k = 0; k < kSampledChecks; ++k) {
    for (std::size_t i = 0; i < exo_.size(); ++i) u[i] = static_cast<int>(rng.discrete(exo_[i].probs));
    solve(u, {}, out);
  }
}

int Scm::lookup(std::size_t v, std::span<const int> endo_vals, std::span<const int> u) const {
  const Equation& eq = eqs_[v];
  const Schema& s = graph_.schema();
  if (!tables_[v].empty()) {
    std::uint64_t idx = 0;
    for (std::size_t p : eq.endo_parents) {
      idx = idx * s[p].domain.size() + static_cast<std::uint64_t>(endo_vals[p]);
    }
    for (std::size_t e : eq.exo_parents) {
      idx = idx * exo_[e].values.size() + static_cast<std::uint64_t>(u[e]);
    }
    if (tables_[v][idx] >= 0) return tables_[v][idx];
  }
  std::vector<int> en(eq.endo_parents.size()), ex(eq.exo_parents.size());
  for (std::size_t i = 0; i < en.size(); ++i) en[i] = endo_vals[eq.endo_parents[i]];
  for (std::size_t i = 0; i < ex.size(); ++i) ex[i] = u[eq.exo_parents[i]];
  int out = eq.fn(en, ex);
  if (out < 0 || static_cast<std::size_t>(out) >= s[v].domain.size()) {
    fail(ErrorCode::Evaluation, "mechanism for " + s[v].name + " returned a value outside its domain");
  }
  return out;
}

void Scm::solve(std::span<const int> u, const Intervention& iv, std::span<int> out) const {
  std::vector<int> forced = forced_of(graph_.schema(), iv);
  solve_forced(u, forced, out);
}

void Scm::solve_forced(std::span<const int> u, std::span<const int> forced, std::span<int> out) const {
  for (std::size_t v : graph_.topological_order()) {
    out[v] = forced[v] >= 0 ? forced[v] : lookup(v, out, u);
  }
}

std::vector<int> Scm::forced_values(const Intervention& iv) const { return forced_of(graph_.schema(), iv); }

Scm Scm::with_mechanism(std::size_t var, std::vector<std::size_t> endo_parents, MechanismFn fn,
                        std::string source) const {
  const Schema& s = graph_.schema();
  if (var >= s.size()) fail(ErrorCode::Validation, "mechanism variable out of range");
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [p, c] : graph_.edges()) {
    if (c != s[var].name) edges.emplace_back(p, c);
  }
  // Keep caller's parent order for the mechanism, sorted order for the graph.
  std::vector<std::size_t> sorted = endo_parents;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorCode::Validation, "mechanism parents repeat a variable");
  }
  for (std::size_t p : sorted) {
    if (p >= s.size() || p == var) fail(ErrorCode::Validation, "invalid mechanism parent");
    edges.emplace_back(s[p].name, s[var].name);
  }
  CausalGraph g(s, edges);
  std::vector<Equation> eqs = eqs_;
  std::vector<std::size_t> pos(endo_parents.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    pos[i] = static_cast<std::size_t>(std::find(endo_parents.begin(), endo_parents.end(), sorted[i]) -
                                      endo_parents.begin());
  }
  MechanismFn wrapped = [fn = std::move(fn), pos](std::span<const int> en, std::span<const int> ex) {
    std::vector<int> reordered(en.size());
    for (std::size_t i = 0; i < en.size(); ++i) reordered[pos[i]] = en[i];
    return fn(reordered, ex);
  };
  eqs[var] = Equation{sorted, {}, std::move(wrapped), std::move(source)};
  return Scm(std::move(g), exo_, std::move(eqs));
}

void Scm::for_each_cell(const std::function<void(std::span<const int>, double)>& visit) const {
  if (cells_ > kMaxExhaustiveCells) {
    fail(ErrorCode::Limit, "exogenous joint has more than 2^20 cells");
  }
  CellCounter c(exo_);
  do {
    visit(c.u, c.prob());
  } while (c.next());
}

Dataset exhaustive_joint(const Scm& m) {
  std::vector<int> cells;
  std::vector<double> weights;
  std::vector<int> out(m.schema().size());
  m.for_each_cell([&](std::span<const int> u, double p) {
    m.solve(u, {}, out);
    cells.insert(cells.end(), out.begin(), out.end());
    weights.push_back(p);
  });
  return Dataset(m.schema(), std::move(cells), std::move(weights));
}

Dataset sample_dataset(const Scm& m, std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::Validation, "sample size must be at least 1");
  Rng rng(seed);
  const auto& exo = m.exogenous();
  std::vector<int> u(exo.size());
  std::vector<int> out(m.schema().size());
  std::vector<int> cells;
  cells.reserve(n * out.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < exo.size(); ++i) u[i] = static_cast<int>(rng.discrete(exo[i].probs));
    m.solve(u, {}, out);
    cells.insert(cells.end(), out.begin(), out.end());
  }
  return Dataset(m.schema(), std::move(cells));
}

double counterfactual_prob(const Scm& m, const CfQuery& q) {
  std::vector<std::vector<int>> forced;
  for (const auto& t : q.targets) forced.push_back(m.forced_values(t.intervention));
  std::vector<int> none(m.schema().size(), -1);
  double evidence_mass = 0.0;
  double hit_mass = 0.0;
  std::vector<int> factual(m.schema().size());
  std::vector<int> world(m.schema().size());
  m.for_each_cell([&](std::span<const int> u, double p) {
    if (p == 0.0) return;
    if (!q.evidence.empty()) {
      m.solve_forced(u, none, factual);
      if (!q.evidence.matches(factual)) return;
    }
    evidence_mass += p;
    for (std::size_t i = 0; i < q.targets.size(); ++i) {
      m.solve_forced(u, forced[i], world);
      if (!q.targets[i].target.matches(world)) return;
    }
    hit_mass += p;
  });
  if (evidence_mass <= 0.0) {
    fail(ErrorCode::ConditioningOnNull, "evidence " + q.evidence.describe(m.schema()) + " has probability zero");
  }
  return hit_mass / evidence_mass;
}

double interventional_prob(const Scm& m, const Event& outcome, const Intervention& treatment,
                           const Event& context) {
  return counterfactual_prob(m, CfQuery{{PotentialEvent{treatment, outcome}}, context});
}

Intervention intervention_of(const Schema& s, const std::vector<std::string>& vars,
                             const std::vector<std::string>& values) {
  if (vars.size() != values.size()) fail(ErrorCode::Validation, "intervention needs one value per variable");
  Intervention iv;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    std::size_t v = s.index(vars[i]);
    iv.emplace_back(v, s[v].index_of(values[i]));
  }
  return iv;
}

ScoreTriple ground_truth_scores(const Scm& m, const ContrastQuery& q) {
  const Schema& s = m.schema();
  q.validate(s);
  Intervention do_x = intervention_of(s, q.x_vars, q.x);
  Intervention do_xp = intervention_of(s, q.x_vars, q.x_prime);
  Event pos = q.outcome.positive_event(s);
  Event neg = q.outcome.negative_event(s);
  Event k = q.context_event(s);
  ScoreTriple t;
  t.nec = counterfactual_prob(m, CfQuery{{PotentialEvent{do_xp, neg}}, q.treatment(s) & pos & k});
  t.suf = counterfactual_prob(m, CfQuery{{PotentialEvent{do_x, pos}}, q.baseline(s) & neg & k});
  t.nesuf = counterfactual_prob(m, CfQuery{{PotentialEvent{do_x, pos}, PotentialEvent{do_xp, neg}}, k});
  return t;
}

Scm scm_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) fail(ErrorCode::Validation, "SCM document must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key != "graph" && key != "exogenous" && key != "equations") {
      fail(ErrorCode::Validation, "unknown SCM key '" + key + "'");
    }
  }
  if (!j.contains("graph") || !j.contains("exogenous") || !j.contains("equations")) {
    fail(ErrorCode::Validation, "SCM document needs graph, exogenous and equations");
  }
  CausalGraph g = graph_from_json(nlohmann::json::parse(j["graph"].dump()));
  std::vector<ExogenousVar> exo;
  if (!j["exogenous"].is_array()) fail(ErrorCode::Validation, "exogenous must be an array");
  for (const auto& e : j["exogenous"]) {
    if (!e.is_object() || !e.contains("name") || !e.contains("dist") || !e["dist"].is_object()) {
      fail(ErrorCode::Validation, "exogenous entries need name and dist");
    }
    for (const auto& [key, val] : e.items()) {
      if (key != "name" && key != "dist") fail(ErrorCode::Validation, "unknown exogenous key '" + key + "'");
    }
    ExogenousVar x;
    x.name = e["name"].get<std::string>();
    for (const auto& [value, p] : e["dist"].items()) {
      if (!p.is_number()) fail(ErrorCode::Validation, "probability of " + x.name + "=" + value + " must be a number");
      x.values.push_back(value);
      x.probs.push_back(p.get<double>());
    }
    exo.push_back(std::move(x));
  }
  if (!j["equations"].is_object()) fail(ErrorCode::Validation, "equations must be an object");
  std::map<std::string, std::string> eqs;
  for (const auto& [name, src] : j["equations"].items()) {
    if (!src.is_string()) fail(ErrorCode::Validation, "equation for " + name + " must be a string");
    eqs[name] = src.get<std::string>();
  }
  return Scm(std::move(g), std::move(exo), eqs);
}

nlohmann::ordered_json scm_to_json(const Scm& m) {
  nlohmann::ordered_json j;
  j["graph"] = nlohmann::ordered_json::parse(graph_to_json(m.graph()).dump());
  j["exogenous"] = nlohmann::ordered_json::array();
  for (const auto& e : m.exogenous()) {
    nlohmann::ordered_json d = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < e.values.size(); ++i) d[e.values[i]] = e.probs[i];
    j["exogenous"].push_back({{"name", e.name}, {"dist", d}});
  }
  nlohmann::ordered_json eqs = nlohmann::ordered_json::object();
  for (std::size_t v = 0; v < m.schema().size(); ++v) {
    if (m.equation(v).source.empty()) {
      fail(ErrorCode::Validation, "mechanism for " + m.schema()[v].name + " has no expression form");
    }
    eqs[m.schema()[v].name] = m.equation(v).source;
  }
  j["equations"] = eqs;
  return j;
}

Scm load_scm(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Validation, "cannot open SCM file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("malformed SCM JSON: ") + e.what());
  }
  return scm_from_json(j);
}

}  // namespace causex
