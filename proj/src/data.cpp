#include "causex/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "causex/error.hpp"

namespace causex {

std::size_t Condition::allowed_count() const {
  return static_cast<std::size_t>(std::count(allowed.begin(), allowed.end(), true));
}

Event Event::point(const Schema& s, const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<std::pair<std::size_t, int>> idx;
  for (const auto& [name, value] : pairs) {
    std::size_t v = s.index(name);
    idx.emplace_back(v, s[v].index_of(value));
  }
  return point_idx(s, idx);
}

Event Event::point_idx(const Schema& s, const std::vector<std::pair<std::size_t, int>>& pairs) {
  Event e;
  for (const auto& [var, value] : pairs) {
    if (var >= s.size()) fail(ErrorCode::Validation, "event variable out of range");
    if (value < 0 || static_cast<std::size_t>(value) >= s[var].domain.size()) {
      fail(ErrorCode::Validation, "event value out of domain for " + s[var].name);
    }
    if (e.mentions(var)) {
      fail(ErrorCode::Validation, "event names " + s[var].name + " twice");
    }
    Condition c{var, std::vector<bool>(s[var].domain.size(), false)};
    c.allowed[static_cast<std::size_t>(value)] = true;
    e.conds_.push_back(std::move(c));
  }
  std::sort(e.conds_.begin(), e.conds_.end(),
            [](const Condition& a, const Condition& b) { return a.var < b.var; });
  return e;
}

Event Event::values(const Schema& s, std::size_t var, const std::vector<int>& allowed) {
  Event e;
  Condition c{var, std::vector<bool>(s[var].domain.size(), false)};
  for (int v : allowed) {
    if (v < 0 || static_cast<std::size_t>(v) >= c.allowed.size()) {
      fail(ErrorCode::Validation, "event value out of domain for " + s[var].name);
    }
    c.allowed[static_cast<std::size_t>(v)] = true;
  }
  e.conds_.push_back(std::move(c));
  return e;
}

bool Event::mentions(std::size_t var) const {
  return std::any_of(conds_.begin(), conds_.end(),
                     [var](const Condition& c) { return c.var == var; });
}

std::vector<std::size_t> Event::variables() const {
  std::vector<std::size_t> out;
  for (const auto& c : conds_) out.push_back(c.var);
  return out;
}

Event Event::operator&(const Event& other) const {
  Event out = *this;
  for (const auto& c : other.conds_) {
    auto it = std::find_if(out.conds_.begin(), out.conds_.end(),
                           [&](const Condition& d) { return d.var == c.var; });
    if (it == out.conds_.end()) {
      out.conds_.push_back(c);
    } else {
      for (std::size_t i = 0; i < c.allowed.size(); ++i) {
        it->allowed[i] = it->allowed[i] && c.allowed[i];
      }
    }
  }
  std::sort(out.conds_.begin(), out.conds_.end(),
            [](const Condition& a, const Condition& b) { return a.var < b.var; });
  return out;
}

bool Event::unsatisfiable() const {
  return std::any_of(conds_.begin(), conds_.end(),
                     [](const Condition& c) { return c.allowed_count() == 0; });
}

double Event::allowed_cells() const {
  double n = 1.0;
  for (const auto& c : conds_) n *= static_cast<double>(c.allowed_count());
  return n;
}

double Event::total_cells(const Schema& s) const {
  double n = 1.0;
  for (const auto& c : conds_) n *= static_cast<double>(s[c.var].domain.size());
  return n;
}

std::string Event::describe(const Schema& s) const {
  if (conds_.empty()) return "{}";
  std::string out;
  for (const auto& c : conds_) {
    if (!out.empty()) out += ", ";
    const auto& var = s[c.var];
    std::vector<std::string> vals;
    for (std::size_t i = 0; i < c.allowed.size(); ++i) {
      if (c.allowed[i]) vals.push_back(var.domain[i]);
    }
    out += var.name + "=";
    if (vals.size() == 1) {
      out += vals[0];
    } else {
      out += "{";
      for (std::size_t i = 0; i < vals.size(); ++i) out += (i ? "," : "") + vals[i];
      out += "}";
    }
  }
  return out;
}

NameSet event_names(const Schema& s, const Event& e) {
  NameSet out;
  for (std::size_t v : e.variables()) out.insert(s[v].name);
  return out;
}

// --- Dataset -----------------------------------------------------------------

Dataset::Dataset(Schema schema, std::vector<int> cells, std::vector<double> weights)
    : schema_(std::move(schema)), cells_(std::move(cells)), weights_(std::move(weights)) {
  const std::size_t w = schema_.size();
  if (w == 0) fail(ErrorCode::Validation, "dataset schema has no variables");
  if (cells_.size() % w != 0) fail(ErrorCode::Validation, "ragged dataset cells");
  const std::size_t n = cells_.size() / w;
  if (weights_.empty()) weights_.assign(n, 1.0);
  if (weights_.size() != n) fail(ErrorCode::Validation, "weight count differs from row count");
  if (n == 0) fail(ErrorCode::Validation, "dataset has no rows");
  bool any_positive = false;
  for (std::size_t r = 0; r < n; ++r) {
    const double wt = weights_[r];
    if (!std::isfinite(wt) || wt < 0.0) {
      fail(ErrorCode::Validation, "row " + std::to_string(r + 1) + " has an invalid weight");
    }
    any_positive = any_positive || wt > 0.0;
    for (std::size_t v = 0; v < w; ++v) {
      const int c = cells_[r * w + v];
      if (c < 0 || static_cast<std::size_t>(c) >= schema_[v].domain.size()) {
        fail(ErrorCode::Validation, "row " + std::to_string(r + 1) + ": value out of domain for " +
                                        schema_[v].name);
      }
    }
  }
  if (!any_positive) fail(ErrorCode::Validation, "all dataset weights are zero");
}

Dataset::Dataset(Schema schema, const std::vector<std::vector<int>>& rows, std::vector<double> weights)
    : Dataset(schema, [&] {
        std::vector<int> cells;
        cells.reserve(rows.size() * schema.size());
        for (const auto& r : rows) {
          if (r.size() != schema.size()) fail(ErrorCode::Validation, "row width differs from schema");
          cells.insert(cells.end(), r.begin(), r.end());
        }
        return cells;
      }(), std::move(weights)) {}

double Dataset::total_weight() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

Dataset Dataset::with_column(std::size_t var, const std::vector<int>& values) const {
  if (values.size() != rows()) fail(ErrorCode::Validation, "column length differs from row count");
  std::vector<int> cells = cells_;
  for (std::size_t r = 0; r < rows(); ++r) cells[r * width() + var] = values[r];
  Dataset out(schema_, std::move(cells), weights_);
  out.predictions_ = predictions_;
  return out;
}

Dataset Dataset::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) fail(ErrorCode::Validation, "scale must be positive");
  std::vector<double> w = weights_;
  for (double& x : w) x *= factor;
  Dataset out(schema_, cells_, std::move(w));
  out.predictions_ = predictions_;
  return out;
}

Dataset Dataset::concat(const Dataset& other) const {
  if (!(schema_ == other.schema_)) fail(ErrorCode::Validation, "cannot concatenate datasets with different schemas");
  std::vector<int> cells = cells_;
  cells.insert(cells.end(), other.cells_.begin(), other.cells_.end());
  std::vector<double> w = weights_;
  w.insert(w.end(), other.weights_.begin(), other.weights_.end());
  return Dataset(schema_, std::move(cells), std::move(w));
}

void Dataset::set_predictions(std::vector<int> p) {
  if (p.size() != rows()) fail(ErrorCode::Validation, "prediction count differs from row count");
  predictions_ = std::move(p);
}

// --- CSV -----------------------------------------------------------------------

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  // Skip a UTF-8 byte order mark.
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) i = 3;
  auto end_record = [&] {
    rec.push_back(field);
    field.clear();
    field_started = false;
    if (!(rec.size() == 1 && rec[0].empty())) records.push_back(rec);
    rec.clear();
  };
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      rec.push_back(field);
      field.clear();
      field_started = false;
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) fail(ErrorCode::Validation, "unterminated quoted CSV field");
  if (field_started || !rec.empty()) end_record();
  return records;
}

namespace {

std::string format_cut(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool to_double(const std::string& s, double& out) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  if (b == e) return false;
  const char* first = s.data() + b;
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + e, out);
  return ec == std::errc() && ptr == s.data() + e && std::isfinite(out);
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::string> bin_labels(const std::vector<double>& cuts) {
  if (cuts.empty()) fail(ErrorCode::Validation, "binning needs at least one cut point");
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (!(cuts[i - 1] < cuts[i])) fail(ErrorCode::Validation, "cut points must be strictly increasing");
  }
  std::vector<std::string> out;
  out.push_back("<" + format_cut(cuts.front()));
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    out.push_back("[" + format_cut(cuts[i - 1]) + "," + format_cut(cuts[i]) + ")");
  }
  out.push_back("\xE2\x89\xA5" + format_cut(cuts.back()));  // "≥"
  return out;
}

Dataset parse_csv(const std::string& text, const Schema& schema, const CsvOptions& opts) {
  const auto records = split_csv(text);
  if (records.empty()) fail(ErrorCode::Validation, "CSV has no header row");
  const auto& header = records[0];

  std::vector<long> column_of(schema.size(), -1);
  long weight_col = -1;
  long pred_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h == opts.weight_column) {
      weight_col = static_cast<long>(c);
    } else if (h == opts.prediction_column) {
      pred_col = static_cast<long>(c);
    } else if (auto v = schema.find(h)) {
      if (column_of[*v] >= 0) fail(ErrorCode::Validation, "duplicate column " + h);
      column_of[*v] = static_cast<long>(c);
    } else {
      fail(ErrorCode::Validation, "unknown column " + h);
    }
  }
  std::optional<std::size_t> outcome_var;
  if (opts.outcome) outcome_var = schema.index(*opts.outcome);
  if (pred_col >= 0 && !outcome_var) {
    fail(ErrorCode::Validation, "prediction column present but no outcome variable configured");
  }

  std::vector<std::vector<std::string>> bins(schema.size());
  for (const auto& [name, cuts] : opts.binning) {
    std::size_t v = schema.index(name);
    bins[v] = bin_labels(cuts);
    if (bins[v] != schema[v].domain) {
      fail(ErrorCode::Validation, "domain of " + name + " does not match its bin labels");
    }
  }
  for (std::size_t v = 0; v < schema.size(); ++v) {
    const bool fillable = outcome_var && *outcome_var == v && (pred_col >= 0 || opts.fill_missing_outcome);
    if (column_of[v] < 0 && !fillable) {
      fail(ErrorCode::Validation, "missing column " + schema[v].name);
    }
  }

  auto cell_value = [&](std::size_t v, const std::string& raw, std::size_t rownum) -> int {
    if (!opts.binning.count(schema[v].name)) {
      int idx = schema[v].find(raw);
      if (idx < 0) {
        fail(ErrorCode::Validation, "row " + std::to_string(rownum) + ": value '" + raw +
                                        "' is not in the domain of " + schema[v].name);
      }
      return idx;
    }
    double x = 0.0;
    if (!to_double(raw, x)) {
      fail(ErrorCode::Validation, "row " + std::to_string(rownum) + ": cannot parse '" + raw +
                                      "' as a number for " + schema[v].name);
    }
    const auto& cuts = opts.binning.at(schema[v].name);
    return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
  };

  std::vector<int> cells;
  std::vector<double> weights;
  std::vector<int> preds;
  cells.reserve((records.size() - 1) * schema.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    // Data rows are numbered from 1; the header is not counted.
    const std::size_t rownum = r;
    if (rec.size() != header.size()) {
      fail(ErrorCode::Validation, "row " + std::to_string(rownum) + " has " +
                                      std::to_string(rec.size()) + " fields, header has " +
                                      std::to_string(header.size()));
    }
    int pred = -1;
    if (pred_col >= 0) {
      pred = schema[*outcome_var].find(rec[static_cast<std::size_t>(pred_col)]);
      if (pred < 0) {
        fail(ErrorCode::Validation, "row " + std::to_string(rownum) + ": prediction '" +
                                        rec[static_cast<std::size_t>(pred_col)] +
                                        "' is not in the domain of " + *opts.outcome);
      }
      preds.push_back(pred);
    }
    for (std::size_t v = 0; v < schema.size(); ++v) {
      if (column_of[v] < 0) {
        cells.push_back(pred < 0 ? 0 : pred);
      } else {
        cells.push_back(cell_value(v, rec[static_cast<std::size_t>(column_of[v])], rownum));
      }
    }
    if (weight_col >= 0) {
      double w = 0.0;
      if (!to_double(rec[static_cast<std::size_t>(weight_col)], w) || w < 0.0) {
        fail(ErrorCode::Validation, "row " + std::to_string(rownum) + ": invalid weight");
      }
      weights.push_back(w);
    }
  }
  Dataset d(schema, std::move(cells), std::move(weights));
  if (pred_col >= 0) d.set_predictions(std::move(preds));
  return d;
}

Dataset load_csv(const std::string& path, const Schema& schema, const CsvOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Validation, "cannot open CSV file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, opts);
}

std::string to_csv(const Dataset& d, bool with_weights) {
  std::ostringstream os;
  os.precision(17);
  const auto& s = d.schema();
  for (std::size_t v = 0; v < s.size(); ++v) os << (v ? "," : "") << quote_csv(s[v].name);
  if (with_weights) os << ",__weight";
  os << "\n";
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t v = 0; v < s.size(); ++v) {
      os << (v ? "," : "") << quote_csv(s[v].domain[static_cast<std::size_t>(d.at(r, v))]);
    }
    if (with_weights) os << "," << d.weight(r);
    os << "\n";
  }
  return os.str();
}

// --- Estimator -------------------------------------------------------------------

Estimator::Estimator(std::shared_ptr<const Dataset> data, EstimatorConfig config)
    : data_(std::move(data)), config_(config) {
  if (!data_) fail(ErrorCode::Validation, "estimator needs a dataset");
  if (!(config_.smoothing >= 0.0) || !std::isfinite(config_.smoothing)) {
    fail(ErrorCode::Validation, "smoothing must be a finite non-negative number");
  }
}

double Estimator::mass(const Event& e) const {
  double m = 0.0;
  const Dataset& d = *data_;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (e.matches(d.row(r))) m += d.weight(r);
  }
  return m;
}

double Estimator::prob(const Event& event, const Event& given) const {
  const Dataset& d = *data_;
  const Event joint = event & given;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto row = d.row(r);
    if (!given.matches(row)) continue;
    den += d.weight(r);
    if (joint.matches(row)) num += d.weight(r);
  }
  const double lambda = config_.smoothing;
  if (lambda > 0.0) {
    num += lambda * event.allowed_cells();
    den += lambda * event.total_cells(d.schema());
  }
  if (den <= 0.0) {
    fail(ErrorCode::ConditioningOnNull,
         "conditioning event " + given.describe(d.schema()) + " has zero mass");
  }
  return num / den;
}

Adjusted Estimator::adjusted(const Event& outcome, const Event& treatment, const Event& weight_given,
                             const Event& context, const std::vector<std::size_t>& adj) const {
  const Dataset& d = *data_;
  const Schema& s = d.schema();
  std::vector<std::uint64_t> radix;
  double n_cells = 1.0;
  for (std::size_t v : adj) {
    radix.push_back(s[v].domain.size());
    n_cells *= static_cast<double>(s[v].domain.size());
  }
  const double lambda = config_.smoothing;
  if (lambda > 0.0 && n_cells > 1e7) {
    fail(ErrorCode::Limit, "adjustment set domain too large to smooth");
  }

  struct Cell {
    double weight = 0.0;     // rows matching weight_given ∧ context
    double treated = 0.0;    // rows matching treatment ∧ context
    double positive = 0.0;   // rows matching outcome ∧ treatment ∧ context
  };
  std::unordered_map<std::uint64_t, Cell> cells;
  double total = 0.0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const auto row = d.row(r);
    if (!context.matches(row)) continue;
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < adj.size(); ++i) {
      key = key * radix[i] + static_cast<std::uint64_t>(row[adj[i]]);
    }
    const double w = d.weight(r);
    Cell& c = cells[key];
    if (weight_given.matches(row)) {
      c.weight += w;
      total += w;
    }
    if (treatment.matches(row)) {
      c.treated += w;
      if (outcome.matches(row)) c.positive += w;
    }
  }

  const double o_allowed = outcome.allowed_cells();
  const double o_total = outcome.total_cells(s);
  Adjusted out;
  auto describe_cell = [&](std::uint64_t key) {
    std::vector<std::pair<std::size_t, int>> vals(adj.size());
    for (std::size_t i = adj.size(); i-- > 0;) {
      vals[i] = {adj[i], static_cast<int>(key % radix[i])};
      key /= radix[i];
    }
    return Event::point_idx(s, vals).describe(s);
  };

  if (lambda > 0.0) {
    const double denom_c = total + lambda * n_cells;
    const auto n = static_cast<std::uint64_t>(n_cells);
    for (std::uint64_t key = 0; key < n; ++key) {
      auto it = cells.find(key);
      const Cell c = it == cells.end() ? Cell{} : it->second;
      const double p_c = (c.weight + lambda) / denom_c;
      const double p_o = (c.positive + lambda * o_allowed) / (c.treated + lambda * o_total);
      out.value += p_o * p_c;
    }
    return out;
  }

  if (total <= 0.0) {
    fail(ErrorCode::ConditioningOnNull, "conditioning event " +
                                            (weight_given & context).describe(s) +
                                            " has zero mass");
  }
  std::vector<std::pair<std::uint64_t, Cell>> ordered(cells.begin(), cells.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double kept = 0.0;
  for (const auto& [key, c] : ordered) {
    if (c.weight <= 0.0) continue;
    if (c.treated <= 0.0) {
      if (!config_.skip_empty_cells) {
        fail(ErrorCode::ConditioningOnNull,
             "adjustment cell " + describe_cell(key) + " has no rows with " +
                 (treatment & context).describe(s));
      }
      ++out.skipped_cells;
      out.skipped_mass += c.weight / total;
      continue;
    }
    out.value += (c.positive / c.treated) * c.weight;
    kept += c.weight;
  }
  if (kept <= 0.0) {
    fail(ErrorCode::ConditioningOnNull, "every adjustment cell lacks rows with " +
                                            (treatment & context).describe(s));
  }
  out.value /= kept;
  return out;
}

void require_admissible(const CausalGraph& g, const NameSet& treatment, const NameSet& inputs,
                        const NameSet& adj, const NameSet& context) {
  NameSet cond = adj;
  cond.insert(context.begin(), context.end());
  for (const auto& t : treatment) {
    if (cond.count(t)) {
      fail(ErrorCode::NotIdentifiable, "treatment variable " + t + " also appears in the conditioning set");
    }
  }
  if (!backdoor_admissible(g, treatment, inputs, {cond})) {
    fail(ErrorCode::NotIdentifiable,
         "adjustment/context set is not backdoor-admissible: " +
             open_backdoor_path(g, treatment, inputs, cond));
  }
}

Adjusted do_prob(const Estimator& est, const CausalGraph& g, const Event& outcome,
                 const Event& treatment, const Event& context, const AdjustmentSet& adj,
                 const std::optional<NameSet>& outcome_inputs) {
  const Schema& s = est.schema();
  if (!(s == g.schema())) fail(ErrorCode::Validation, "dataset schema differs from graph schema");
  const NameSet t = event_names(s, treatment);
  const NameSet k = event_names(s, context);
  const NameSet inputs = outcome_inputs ? *outcome_inputs : event_names(s, outcome);
  require_admissible(g, t, inputs, adj.members, k);
  return est.adjusted(outcome, treatment, Event{}, context, g.indices(adj.members));
}

}  // namespace causex
