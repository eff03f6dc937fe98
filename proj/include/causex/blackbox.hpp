#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "causex/data.hpp"
#include "causex/graph.hpp"
#include "causex/query.hpp"

namespace causex {

class Scm;

/// Prediction backend. Receives feature vectors (domain indices aligned with
/// the black box's inputs) and returns outcome domain indices.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::vector<int> predict(const std::vector<std::vector<int>>& features) = 0;
  virtual std::string kind() const = 0;
};

/// Decision algorithm f: Dom(I) -> Dom(O) behind one of the backends, with a
/// session-scoped prediction cache keyed by feature vector.
class BlackBox {
 public:
  BlackBox(const Schema& schema, std::vector<std::string> inputs, OutcomeSpec outcome,
           std::shared_ptr<Backend> backend);

  const Schema& schema() const { return schema_; }
  const std::vector<std::string>& inputs() const { return inputs_; }
  const std::vector<std::size_t>& input_indices() const { return input_idx_; }
  NameSet input_set() const { return {inputs_.begin(), inputs_.end()}; }
  const OutcomeSpec& outcome() const { return outcome_; }
  std::string kind() const { return backend_->kind(); }

  /// One outcome index per row; rows are full schema assignments.
  std::vector<int> predict_batch(const std::vector<std::vector<int>>& rows) const;
  int predict(std::span<const int> row) const;
  /// Prediction from a feature vector aligned with inputs().
  int predict_features(const std::vector<int>& features) const;

  std::size_t cache_size() const;

 private:
  std::vector<int> run(const std::vector<std::vector<int>>& features) const;

  Schema schema_;
  std::vector<std::string> inputs_;
  std::vector<std::size_t> input_idx_;
  OutcomeSpec outcome_;
  std::shared_ptr<Backend> backend_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::vector<int>, int> cache_;
};

/// Outcome given by an expression over the inputs; the value must equal one
/// of the outcome's domain labels.
std::shared_ptr<Backend> expr_backend(const Schema& s, const std::vector<std::string>& inputs,
                                      std::size_t outcome_var, const std::string& source);

/// Logistic scorer: p = σ(bias + Σ_i w_i(x_i)); outputs `positive` when
/// p ≥ cutoff, else `negative`. A weight is either a coefficient applied to
/// the numeric value of the label (its domain index when non-numeric) or an
/// explicit per-label table.
struct LogisticSpec {
  double bias = 0.0;
  std::map<std::string, std::variant<double, std::map<std::string, double>>> weights;
  double cutoff = 0.5;
  std::string positive;
  std::string negative;
};
std::shared_ptr<Backend> logistic_backend(const Schema& s, const std::vector<std::string>& inputs,
                                          std::size_t outcome_var, const LogisticSpec& spec);

/// Looks predictions up by feature vector in a dataset's stored prediction
/// column (or its outcome column when none is stored). Conflicting rows are
/// rejected.
std::shared_ptr<Backend> column_backend(const Dataset& d, const std::vector<std::string>& inputs,
                                        std::size_t outcome_var);

/// External process speaking newline-delimited JSON on stdin/stdout:
/// request {"id":int,"features":{name:label}}, reply {"id":int,"output":label}.
std::shared_ptr<Backend> process_backend(const Schema& s, const std::vector<std::string>& inputs,
                                         std::size_t outcome_var, std::vector<std::string> command,
                                         std::chrono::milliseconds timeout = std::chrono::seconds(30));

/// Native mechanism; used by generators and tests.
std::shared_ptr<Backend> function_backend(std::function<int(const std::vector<int>&)> fn,
                                          std::string kind = "function");

/// Model file: {"kind":"expr"|"logistic"|"column"|"process", "output":..., "inputs":[...],
/// "threshold":..., "order":[...], ...}. `data` is needed for "column".
std::shared_ptr<BlackBox> blackbox_from_json(const nlohmann::json& j, const Schema& s,
                                             const Dataset* data = nullptr);
std::shared_ptr<BlackBox> load_blackbox(const std::string& path, const Schema& s,
                                        const Dataset* data = nullptr);

/// Copy of `d` whose outcome column holds the black box's predictions.
Dataset label_dataset(const BlackBox& b, const Dataset& d);

/// Values of `x_var`, best first, by Pr(O ∈ O^≥ | do(X=v), context) on the
/// labelled data. Ties fall back to the declared order, greatest first; so
/// does the whole order when some value's probability is undefined.
/// `use_declared` returns the declared order outright.
std::vector<int> infer_value_order(const BlackBox& b, const Estimator& est, const CausalGraph& g,
                                   const std::string& x_var,
                                   const std::vector<std::pair<std::string, std::string>>& context = {},
                                   bool use_declared = false);

/// As above for a known outcome and optional black-box inputs (the input
/// proxy stands in when they are unknown).
std::vector<int> infer_value_order(const Estimator& est, const CausalGraph& g, const OutcomeSpec& outcome,
                                   const std::optional<NameSet>& inputs, const std::string& x_var,
                                   const std::vector<std::pair<std::string, std::string>>& context = {},
                                   bool use_declared = false);

/// The SCM with the outcome's equation replaced by the black box.
Scm compose(const Scm& m, const BlackBox& b);

/// Λ_viol = Pr(O_{X←x} ∈ O^< | O ∈ O^≥, X = x', k) on the composed model.
double monotonicity_violation(const BlackBox& b, const Scm& m, const std::vector<std::string>& x_vars,
                              const std::vector<std::string>& x, const std::vector<std::string>& x_prime,
                              const std::vector<std::pair<std::string, std::string>>& context = {});

}  // namespace causex
