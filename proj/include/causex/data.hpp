#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "causex/graph.hpp"

namespace causex {

/// One conjunct of an event: variable `var` takes a value in `allowed`.
struct Condition {
  std::size_t var = 0;
  std::vector<bool> allowed;

  bool admits(int value) const { return allowed[static_cast<std::size_t>(value)]; }
  std::size_t allowed_count() const;
};

/// Conjunction of per-variable value sets; a point event (x, o, k) has one
/// allowed value per conjunct. At most one conjunct per variable.
class Event {
 public:
  Event() = default;

  static Event point(const Schema& s, const std::vector<std::pair<std::string, std::string>>& pairs);
  static Event point_idx(const Schema& s, const std::vector<std::pair<std::size_t, int>>& pairs);
  static Event values(const Schema& s, std::size_t var, const std::vector<int>& allowed);

  const std::vector<Condition>& conditions() const { return conds_; }
  bool empty() const { return conds_.empty(); }
  bool mentions(std::size_t var) const;
  std::vector<std::size_t> variables() const;

  /// Intersection of the two events (conjunction).
  Event operator&(const Event& other) const;

  bool matches(std::span<const int> row) const {
    for (const auto& c : conds_) {
      if (!c.admits(row[c.var])) return false;
    }
    return true;
  }

  /// True when some variable has no allowed value.
  bool unsatisfiable() const;

  /// Number of allowed joint cells, and of all joint cells, over this
  /// event's variables.
  double allowed_cells() const;
  double total_cells(const Schema& s) const;

  std::string describe(const Schema& s) const;

 private:
  std::vector<Condition> conds_;  // sorted by var
};

/// Discrete weighted sample. Cells hold domain indices; rows are complete.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, std::vector<int> cells, std::vector<double> weights = {});
  Dataset(Schema schema, const std::vector<std::vector<int>>& rows, std::vector<double> weights = {});

  const Schema& schema() const { return schema_; }
  std::size_t rows() const { return weights_.size(); }
  std::size_t width() const { return schema_.size(); }
  std::span<const int> row(std::size_t r) const { return {cells_.data() + r * width(), width()}; }
  int at(std::size_t r, std::size_t var) const { return cells_[r * width() + var]; }
  double weight(std::size_t r) const { return weights_[r]; }
  const std::vector<double>& weights() const { return weights_; }
  double total_weight() const;

  /// Copy with column `var` replaced.
  Dataset with_column(std::size_t var, const std::vector<int>& values) const;
  /// Copy with every weight multiplied by `factor` (> 0).
  Dataset scaled(double factor) const;
  /// Rows of this dataset followed by rows of `other` (same schema).
  Dataset concat(const Dataset& other) const;

  /// Optional stored black-box predictions (indices into the outcome
  /// variable's domain), as read from a prediction column.
  const std::optional<std::vector<int>>& predictions() const { return predictions_; }
  void set_predictions(std::vector<int> p);

 private:
  Schema schema_;
  std::vector<int> cells_;
  std::vector<double> weights_;
  std::optional<std::vector<int>> predictions_;
};

struct CsvOptions {
  /// Per-variable cut points; the column holds numbers mapped to interval
  /// labels (see bin_labels).
  std::map<std::string, std::vector<double>> binning;
  std::string weight_column = "__weight";
  std::string prediction_column = "__prediction";
  /// Variable whose domain the prediction column uses. When the variable's
  /// own column is absent it is filled from the predictions.
  std::optional<std::string> outcome;
  /// Accept a missing outcome column with no predictions; the column is
  /// filled with the first domain value and must be relabelled by a model.
  bool fill_missing_outcome = false;
};

/// Interval labels for strictly increasing cut points c1 < ... < ck:
/// "<c1", "[c1,c2)", ..., "≥ck".
std::vector<std::string> bin_labels(const std::vector<double>& cuts);

Dataset parse_csv(const std::string& text, const Schema& schema, const CsvOptions& opts = {});
Dataset load_csv(const std::string& path, const Schema& schema, const CsvOptions& opts = {});
std::string to_csv(const Dataset& d, bool with_weights = true);

/// RFC-4180 record splitting (quoted fields, doubled quotes, CRLF).
std::vector<std::vector<std::string>> split_csv(const std::string& text);

struct EstimatorConfig {
  /// Additive smoothing pseudo-count per joint cell.
  double smoothing = 0.0;
  /// Drop zero-mass adjustment cells and renormalise instead of failing.
  bool skip_empty_cells = false;
};

/// Result of an adjustment-formula evaluation.
struct Adjusted {
  double value = 0.0;
  std::size_t skipped_cells = 0;
  double skipped_mass = 0.0;
};

/// Weighted (optionally smoothed) counting estimator. Stateless per query.
class Estimator {
 public:
  Estimator(std::shared_ptr<const Dataset> data, EstimatorConfig config = {});

  const Dataset& data() const { return *data_; }
  const std::shared_ptr<const Dataset>& data_ptr() const { return data_; }
  const EstimatorConfig& config() const { return config_; }
  const Schema& schema() const { return data_->schema(); }

  double mass(const Event& e) const;

  /// Pr(event | given) = (w(event∧given) + λ·a) / (w(given) + λ·N), with a
  /// and N the allowed and total joint cells of the event's variables.
  /// Throws ConditioningOnNull when the denominator is zero.
  double prob(const Event& event, const Event& given = {}) const;

  /// Σ_c Pr(outcome | c, treatment, context) · Pr(c | weight_given, context)
  /// over the joint domain of `adj`. With weight_given empty this is the
  /// backdoor formula for Pr(outcome | do(treatment), context).
  Adjusted adjusted(const Event& outcome, const Event& treatment, const Event& weight_given,
                    const Event& context, const std::vector<std::size_t>& adj) const;

 private:
  std::shared_ptr<const Dataset> data_;
  EstimatorConfig config_;
};

/// Backdoor-adjusted interventional probability. Validates that adj ∪ context
/// is admissible relative to the treatment and `outcome_inputs` (default:
/// the outcome event's variables).
Adjusted do_prob(const Estimator& est, const CausalGraph& g, const Event& outcome,
                 const Event& treatment, const Event& context, const AdjustmentSet& adj,
                 const std::optional<NameSet>& outcome_inputs = std::nullopt);

/// Throws NotIdentifiable unless adj ∪ context is backdoor-admissible for
/// the treatment relative to `inputs`.
void require_admissible(const CausalGraph& g, const NameSet& treatment, const NameSet& inputs,
                        const NameSet& adj, const NameSet& context);

NameSet event_names(const Schema& s, const Event& e);

}  // namespace causex
