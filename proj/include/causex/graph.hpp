#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace causex {

using NameSet = std::set<std::string>;

/// A discrete variable. Domains are declared in ascending order: when
/// `ordered` is set, a later entry is greater (and, for outcomes, more
/// desirable) than an earlier one.
struct Variable {
  std::string name;
  std::vector<std::string> domain;
  bool ordered = false;

  /// Index of `label` in the domain, or -1.
  int find(std::string_view label) const;
  /// Index of `label`; throws Validation naming the variable otherwise.
  int index_of(std::string_view label) const;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<Variable> variables);

  std::size_t size() const { return vars_.size(); }
  const Variable& operator[](std::size_t i) const { return vars_[i]; }
  const std::vector<Variable>& variables() const { return vars_; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws Validation for unknown names.
  std::size_t index(std::string_view name) const;
  const Variable& variable(std::string_view name) const { return vars_[index(name)]; }
  std::vector<std::string> names() const;

  bool operator==(const Schema& other) const;

 private:
  std::vector<Variable> vars_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdjustmentSet {
  NameSet members;
};

/// Immutable DAG over the schema's variables. Acyclicity is checked at
/// construction, so every method may rely on a topological order existing.
class CausalGraph {
 public:
  CausalGraph() = default;
  CausalGraph(Schema schema, const std::vector<std::pair<std::string, std::string>>& edges);

  const Schema& schema() const { return schema_; }
  std::size_t size() const { return schema_.size(); }

  const std::vector<std::size_t>& parents(std::size_t v) const { return parents_[v]; }
  const std::vector<std::size_t>& children(std::size_t v) const { return children_[v]; }
  const std::vector<std::size_t>& topological_order() const { return topo_; }
  std::vector<std::pair<std::string, std::string>> edges() const;

  bool has_edge(std::size_t parent, std::size_t child) const;

  std::vector<std::size_t> indices(const NameSet& names) const;
  NameSet names(const std::vector<std::size_t>& indices) const;

  /// Copy of this graph with every edge out of `nodes` removed.
  CausalGraph without_outgoing(const std::vector<std::size_t>& nodes) const;
  /// Copy with one extra edge; throws Validation when it closes a cycle.
  CausalGraph with_edge(std::size_t parent, std::size_t child) const;

 private:
  void build(const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  Schema schema_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
};

// Reflexive-transitive closure of children.
NameSet descendants(const CausalGraph& g, const NameSet& xs);
std::vector<bool> descendant_mask(const CausalGraph& g, const std::vector<std::size_t>& xs);
std::vector<bool> ancestor_mask(const CausalGraph& g, const std::vector<std::size_t>& xs);

/// True iff every path between xs and ys is blocked by zs. Sets must be
/// pairwise disjoint.
bool d_separated(const CausalGraph& g, const NameSet& xs, const NameSet& ys, const NameSet& zs);
bool d_separated(const CausalGraph& g, const std::vector<std::size_t>& xs,
                 const std::vector<std::size_t>& ys, const std::vector<std::size_t>& zs);

/// Backdoor criterion for a (possibly set-valued) treatment: no member of
/// `adj` descends from the treatment, and `adj` d-separates treatment from
/// `outcome_inputs` once the treatment's outgoing edges are cut.
bool backdoor_admissible(const CausalGraph& g, const NameSet& treatment,
                         const NameSet& outcome_inputs, const AdjustmentSet& adj);

/// Parents of the treatment when admissible, else all non-descendants,
/// else NotIdentifiable naming an open backdoor path.
AdjustmentSet default_adjustment_set(const CausalGraph& g, const NameSet& treatment,
                                     const NameSet& outcome_inputs);

/// Outcome-input proxy used when the black box's inputs are unknown: every
/// variable outside treatment and conditioning set.
NameSet input_proxy(const CausalGraph& g, const NameSet& treatment, const NameSet& conditioning);

/// A shortest open backdoor path from treatment to outcome_inputs given
/// `adj`, rendered "A <- B -> C"; empty when none exists.
std::string open_backdoor_path(const CausalGraph& g, const NameSet& treatment,
                               const NameSet& outcome_inputs, const NameSet& adj);

// JSON graph file: {"variables":[{"name","domain","ordered"}],"edges":[[p,c],...]}
Schema schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const Schema& s);
CausalGraph graph_from_json(const nlohmann::json& j);
nlohmann::json graph_to_json(const CausalGraph& g);
CausalGraph load_graph(const std::string& path);

}  // namespace causex
