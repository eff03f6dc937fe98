#include "causex/graph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <sstream>

#include "causex/error.hpp"

namespace causex {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::Syntax: return "SYNTAX";
    case ErrorCode::Evaluation: return "EVALUATION";
    case ErrorCode::ConditioningOnNull: return "CONDITIONING_ON_NULL";
    case ErrorCode::NotIdentifiable: return "NOT_IDENTIFIABLE";
    case ErrorCode::Infeasible: return "INFEASIBLE";
    case ErrorCode::Backend: return "BACKEND";
    case ErrorCode::Convergence: return "CONVERGENCE";
    case ErrorCode::Limit: return "LIMIT";
    case ErrorCode::SchemaMismatch: return "SCHEMA_MISMATCH";
  }
  return "UNKNOWN";
}

int Variable::find(std::string_view label) const {
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (domain[i] == label) return static_cast<int>(i);
  }
  return -1;
}

int Variable::index_of(std::string_view label) const {
  int i = find(label);
  if (i < 0) {
    fail(ErrorCode::Validation,
         "value '" + std::string(label) + "' is not in the domain of " + name);
  }
  return i;
}

Schema::Schema(std::vector<Variable> variables) : vars_(std::move(variables)) {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto& v = vars_[i];
    if (v.name.empty()) fail(ErrorCode::Validation, "variable with empty name");
    if (v.domain.size() < 2) {
      fail(ErrorCode::Validation, "domain of " + v.name + " needs at least two values");
    }
    std::set<std::string> seen;
    for (const auto& d : v.domain) {
      if (!seen.insert(d).second) {
        fail(ErrorCode::Validation, "duplicate value '" + d + "' in domain of " + v.name);
      }
    }
    if (!index_.emplace(v.name, i).second) {
      fail(ErrorCode::Validation, "duplicate variable name " + v.name);
    }
  }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::index(std::string_view name) const {
  auto i = find(name);
  if (!i) fail(ErrorCode::Validation, "unknown variable " + std::string(name));
  return *i;
}

std::vector<std::string> Schema::names() const {
  std::vector<std::string> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(v.name);
  return out;
}

bool Schema::operator==(const Schema& other) const {
  if (vars_.size() != other.vars_.size()) return false;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto& a = vars_[i];
    const auto& b = other.vars_[i];
    if (a.name != b.name || a.domain != b.domain || a.ordered != b.ordered) return false;
  }
  return true;
}

CausalGraph::CausalGraph(Schema schema,
                         const std::vector<std::pair<std::string, std::string>>& edges)
    : schema_(std::move(schema)) {
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  idx.reserve(edges.size());
  for (const auto& [p, c] : edges) idx.emplace_back(schema_.index(p), schema_.index(c));
  build(idx);
}

void CausalGraph::build(const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  const std::size_t n = schema_.size();
  parents_.assign(n, {});
  children_.assign(n, {});
  for (const auto& [p, c] : edges) {
    if (p == c) fail(ErrorCode::Validation, "self loop on " + schema_[p].name);
    if (std::find(children_[p].begin(), children_[p].end(), c) != children_[p].end()) continue;
    children_[p].push_back(c);
    parents_[c].push_back(p);
  }
  for (auto& v : parents_) std::sort(v.begin(), v.end());
  for (auto& v : children_) std::sort(v.begin(), v.end());

  // Kahn's algorithm; ties resolved by schema order so the order is stable.
  std::vector<std::size_t> indeg(n);
  for (std::size_t v = 0; v < n; ++v) indeg[v] = parents_[v].size();
  std::set<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indeg[v] == 0) ready.insert(v);
  }
  topo_.clear();
  while (!ready.empty()) {
    std::size_t v = *ready.begin();
    ready.erase(ready.begin());
    topo_.push_back(v);
    for (std::size_t c : children_[v]) {
      if (--indeg[c] == 0) ready.insert(c);
    }
  }
  if (topo_.size() != n) {
    std::string members;
    for (std::size_t v = 0; v < n; ++v) {
      if (indeg[v] > 0) members += (members.empty() ? "" : ", ") + schema_[v].name;
    }
    fail(ErrorCode::Validation, "graph has a cycle through {" + members + "}");
  }
}

std::vector<std::pair<std::string, std::string>> CausalGraph::edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t p = 0; p < size(); ++p) {
    for (std::size_t c : children_[p]) out.emplace_back(schema_[p].name, schema_[c].name);
  }
  return out;
}

bool CausalGraph::has_edge(std::size_t parent, std::size_t child) const {
  const auto& ch = children_[parent];
  return std::binary_search(ch.begin(), ch.end(), child);
}

std::vector<std::size_t> CausalGraph::indices(const NameSet& names) const {
  std::vector<std::size_t> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(schema_.index(n));
  std::sort(out.begin(), out.end());
  return out;
}

NameSet CausalGraph::names(const std::vector<std::size_t>& indices) const {
  NameSet out;
  for (std::size_t i : indices) out.insert(schema_[i].name);
  return out;
}

CausalGraph CausalGraph::without_outgoing(const std::vector<std::size_t>& nodes) const {
  std::vector<bool> cut(size(), false);
  for (std::size_t v : nodes) cut[v] = true;
  std::vector<std::pair<std::size_t, std::size_t>> kept;
  for (std::size_t p = 0; p < size(); ++p) {
    if (cut[p]) continue;
    for (std::size_t c : children_[p]) kept.emplace_back(p, c);
  }
  CausalGraph g;
  g.schema_ = schema_;
  g.build(kept);
  return g;
}

CausalGraph CausalGraph::with_edge(std::size_t parent, std::size_t child) const {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t p = 0; p < size(); ++p) {
    for (std::size_t c : children_[p]) all.emplace_back(p, c);
  }
  all.emplace_back(parent, child);
  CausalGraph g;
  g.schema_ = schema_;
  g.build(all);
  return g;
}

namespace {

std::vector<bool> closure(const std::vector<std::vector<std::size_t>>& next,
                          const std::vector<std::size_t>& start) {
  std::vector<bool> seen(next.size(), false);
  std::vector<std::size_t> stack(start.begin(), start.end());
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    for (std::size_t w : next[v]) {
      if (!seen[w]) stack.push_back(w);
    }
  }
  return seen;
}

void require_disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                      const CausalGraph& g, const char* what) {
  for (std::size_t v : a) {
    if (std::find(b.begin(), b.end(), v) != b.end()) {
      fail(ErrorCode::Validation,
           std::string(what) + " share variable " + g.schema()[v].name);
    }
  }
}

// Reachability over (node, direction) states; `up` means the trail entered
// the node from one of its children. Returns predecessor links so that an
// active trail can be reconstructed.
struct TrailSearch {
  static constexpr int kUp = 0;
  static constexpr int kDown = 1;

  std::vector<std::array<bool, 2>> visited;
  std::vector<std::array<long, 2>> pred;  // encoded state, -1 for start

  TrailSearch(const CausalGraph& g, const std::vector<std::size_t>& xs,
              const std::vector<std::size_t>& zs) {
    const std::size_t n = g.size();
    std::vector<bool> in_z(n, false);
    for (std::size_t z : zs) in_z[z] = true;
    std::vector<std::vector<std::size_t>> par(n);
    for (std::size_t v = 0; v < n; ++v) par[v] = g.parents(v);
    const std::vector<bool> anc_z = closure(par, zs);

    visited.assign(n, {false, false});
    pred.assign(n, {-1, -1});
    std::deque<std::pair<std::size_t, int>> queue;
    for (std::size_t x : xs) {
      visited[x][kUp] = true;
      queue.emplace_back(x, kUp);
    }
    auto push = [&](std::size_t v, int d, std::size_t from, int from_d) {
      if (visited[v][d]) return;
      visited[v][d] = true;
      pred[v][d] = static_cast<long>(from * 2 + from_d);
      queue.emplace_back(v, d);
    };
    while (!queue.empty()) {
      auto [v, d] = queue.front();
      queue.pop_front();
      if (d == kUp && !in_z[v]) {
        for (std::size_t p : g.parents(v)) push(p, kUp, v, d);
        for (std::size_t c : g.children(v)) push(c, kDown, v, d);
      } else if (d == kDown) {
        if (!in_z[v]) {
          for (std::size_t c : g.children(v)) push(c, kDown, v, d);
        }
        if (anc_z[v]) {
          for (std::size_t p : g.parents(v)) push(p, kUp, v, d);
        }
      }
    }
    for (std::size_t z : zs) visited[z] = {false, false};
  }

  bool reached(std::size_t v) const { return visited[v][kUp] || visited[v][kDown]; }
};

}  // namespace

std::vector<bool> descendant_mask(const CausalGraph& g, const std::vector<std::size_t>& xs) {
  std::vector<std::vector<std::size_t>> ch(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) ch[v] = g.children(v);
  return closure(ch, xs);
}

std::vector<bool> ancestor_mask(const CausalGraph& g, const std::vector<std::size_t>& xs) {
  std::vector<std::vector<std::size_t>> par(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) par[v] = g.parents(v);
  return closure(par, xs);
}

NameSet descendants(const CausalGraph& g, const NameSet& xs) {
  const auto mask = descendant_mask(g, g.indices(xs));
  NameSet out;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (mask[v]) out.insert(g.schema()[v].name);
  }
  return out;
}

bool d_separated(const CausalGraph& g, const std::vector<std::size_t>& xs,
                 const std::vector<std::size_t>& ys, const std::vector<std::size_t>& zs) {
  require_disjoint(xs, ys, g, "d-separation sets X and Y");
  require_disjoint(xs, zs, g, "d-separation sets X and Z");
  require_disjoint(ys, zs, g, "d-separation sets Y and Z");
  TrailSearch search(g, xs, zs);
  for (std::size_t y : ys) {
    if (search.reached(y)) return false;
  }
  return true;
}

bool d_separated(const CausalGraph& g, const NameSet& xs, const NameSet& ys,
                 const NameSet& zs) {
  return d_separated(g, g.indices(xs), g.indices(ys), g.indices(zs));
}

namespace {

std::vector<std::size_t> minus(const std::vector<std::size_t>& a,
                               const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  for (std::size_t v : a) {
    if (std::find(b.begin(), b.end(), v) == b.end()) out.push_back(v);
  }
  return out;
}

bool admissible_idx(const CausalGraph& g, const std::vector<std::size_t>& t,
                    const std::vector<std::size_t>& inputs, const std::vector<std::size_t>& adj) {
  require_disjoint(adj, t, g, "adjustment set and treatment");
  const auto desc = descendant_mask(g, t);
  for (std::size_t c : adj) {
    if (desc[c]) return false;
  }
  // Inputs that coincide with the treatment or are conditioned on carry no
  // open path of their own.
  auto ys = minus(minus(inputs, t), adj);
  if (ys.empty()) return true;
  return d_separated(g.without_outgoing(t), t, ys, adj);
}

}  // namespace

bool backdoor_admissible(const CausalGraph& g, const NameSet& treatment,
                         const NameSet& outcome_inputs, const AdjustmentSet& adj) {
  return admissible_idx(g, g.indices(treatment), g.indices(outcome_inputs),
                        g.indices(adj.members));
}

std::string open_backdoor_path(const CausalGraph& g, const NameSet& treatment,
                               const NameSet& outcome_inputs, const NameSet& adj) {
  const auto t = g.indices(treatment);
  const auto z = g.indices(adj);
  const auto ys = minus(minus(g.indices(outcome_inputs), t), z);
  const auto desc = descendant_mask(g, t);
  for (std::size_t c : z) {
    if (desc[c]) return g.schema()[c].name + " is a descendant of the treatment";
  }
  const CausalGraph cut = g.without_outgoing(t);
  TrailSearch search(cut, t, z);
  for (std::size_t y : ys) {
    for (int d = 0; d < 2; ++d) {
      if (!search.visited[y][d]) continue;
      std::vector<std::pair<std::size_t, int>> trail;
      long state = static_cast<long>(y * 2 + d);
      while (state >= 0) {
        std::size_t v = static_cast<std::size_t>(state / 2);
        int dir = static_cast<int>(state % 2);
        trail.emplace_back(v, dir);
        state = search.pred[v][dir];
      }
      std::reverse(trail.begin(), trail.end());
      std::string out = g.schema()[trail[0].first].name;
      for (std::size_t i = 1; i < trail.size(); ++i) {
        out += trail[i].second == TrailSearch::kDown ? " -> " : " <- ";
        out += g.schema()[trail[i].first].name;
      }
      return out;
    }
  }
  return {};
}

NameSet input_proxy(const CausalGraph& g, const NameSet& treatment, const NameSet& conditioning) {
  NameSet out;
  for (const auto& v : g.schema().variables()) {
    if (!treatment.count(v.name) && !conditioning.count(v.name)) out.insert(v.name);
  }
  return out;
}

AdjustmentSet default_adjustment_set(const CausalGraph& g, const NameSet& treatment,
                                     const NameSet& outcome_inputs) {
  const auto t = g.indices(treatment);
  std::vector<std::size_t> pa;
  for (std::size_t v : t) {
    for (std::size_t p : g.parents(v)) {
      if (std::find(t.begin(), t.end(), p) == t.end() &&
          std::find(pa.begin(), pa.end(), p) == pa.end()) {
        pa.push_back(p);
      }
    }
  }
  std::sort(pa.begin(), pa.end());
  const auto inputs = g.indices(outcome_inputs);
  if (admissible_idx(g, t, inputs, pa)) return {g.names(pa)};

  const auto desc = descendant_mask(g, t);
  std::vector<std::size_t> nd;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!desc[v]) nd.push_back(v);
  }
  if (admissible_idx(g, t, inputs, nd)) return {g.names(nd)};

  fail(ErrorCode::NotIdentifiable,
       "no admissible adjustment set; open backdoor path " +
           open_backdoor_path(g, treatment, outcome_inputs, g.names(pa)));
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::Validation, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(ErrorCode::Validation, "unknown key '" + it.key() + "' in " + where);
  }
}

std::string label_of(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number()) {
    std::ostringstream os;
    os << v.get<double>();
    return os.str();
  }
  fail(ErrorCode::Validation, "domain values must be strings or numbers");
}

}  // namespace

Schema schema_from_json(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::Validation, "\"variables\" must be an array");
  std::vector<Variable> vars;
  for (const auto& v : j) {
    reject_unknown_keys(v, {"name", "domain", "ordered"}, "variable");
    if (!v.contains("name") || !v.contains("domain")) {
      fail(ErrorCode::Validation, "variable needs \"name\" and \"domain\"");
    }
    Variable var;
    var.name = v.at("name").get<std::string>();
    for (const auto& d : v.at("domain")) var.domain.push_back(label_of(d));
    var.ordered = v.value("ordered", false);
    vars.push_back(std::move(var));
  }
  return Schema(std::move(vars));
}

nlohmann::json schema_to_json(const Schema& s) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : s.variables()) {
    vars.push_back({{"name", v.name}, {"domain", v.domain}, {"ordered", v.ordered}});
  }
  return vars;
}

CausalGraph graph_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"variables", "edges"}, "graph");
  if (!j.contains("variables")) fail(ErrorCode::Validation, "graph needs \"variables\"");
  Schema schema = schema_from_json(j.at("variables"));
  std::vector<std::pair<std::string, std::string>> edges;
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) {
        fail(ErrorCode::Validation, "edge must be a [parent, child] pair");
      }
      edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
  }
  return CausalGraph(std::move(schema), edges);
}

nlohmann::json graph_to_json(const CausalGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [p, c] : g.edges()) edges.push_back({p, c});
  return {{"variables", schema_to_json(g.schema())}, {"edges", edges}};
}

CausalGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Validation, "cannot open graph file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, "graph file " + path + ": " + e.what());
  }
  return graph_from_json(j);
}

}  // namespace causex
