#include "causex/recourse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include <Eigen/Dense>

#include "causex/error.hpp"
#include "causex/expr.hpp"
#include "causex/oracle.hpp"

namespace causex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kScoreSlack = 1e-12;
constexpr double kPruneSlack = 1e-9;
constexpr double kCostSlack = 1e-9;
constexpr double kBruteForceLimit = 1e7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<std::size_t> resolve(const Schema& s, const std::vector<std::string>& names, std::size_t outcome,
                                 const char* what) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    std::size_t v = s.index(n);
    if (v == outcome) fail(ErrorCode::Validation, std::string("the outcome cannot be ") + what);
    if (std::find(out.begin(), out.end(), v) != out.end()) {
      fail(ErrorCode::Validation, std::string(what) + " variable listed twice: " + n);
    }
    out.push_back(v);
  }
  return out;
}

double plan_cost(const RecourseProblem& p, const std::vector<int>& a) {
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += p.cost[i][static_cast<std::size_t>(a[i])];
  return c;
}

RecoursePlan make_plan(const RecourseProblem& p, const SufficiencyConstraint& c, std::vector<int> a, std::size_t nodes) {
  RecoursePlan plan;
  plan.constraint_count = p.constraint_count();
  plan.nodes = nodes;
  if (a.empty()) return plan;
  plan.feasible = true;
  plan.assignment = std::move(a);
  plan.cost = plan_cost(p, plan.assignment);
  for (std::size_t i = 0; i < p.actionable.size(); ++i) {
    const std::size_t v = p.actionable[i];
    const int from = p.individual[v];
    const int to = plan.assignment[i];
    if (from == to) continue;
    plan.changes.push_back({p.schema[v].name, p.schema[v].domain[static_cast<std::size_t>(from)],
                            p.schema[v].domain[static_cast<std::size_t>(to)], p.cost[i][static_cast<std::size_t>(to)]});
  }
  plan.surrogate_probability = sigmoid(c.score(plan.assignment));
  plan.surrogate_sufficiency =
      c.p_current < 1.0 ? (plan.surrogate_probability - c.p_current) / (1.0 - c.p_current) : 0.0;
  return plan;
}

class Deadline {
 public:
  explicit Deadline(std::optional<double> seconds) {
    if (seconds) end_ = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                               std::chrono::duration<double>(*seconds));
  }
  void check(std::size_t nodes) const {
    if (end_ && (nodes & 1023) == 0 && std::chrono::steady_clock::now() > *end_) {
      fail(ErrorCode::Limit, "recourse solver timed out");
    }
  }

 private:
  std::optional<std::chrono::steady_clock::time_point> end_;
};

// Per-attribute options and suffix bounds for a fixed attribute order. The
// bound is the LP relaxation of the remaining multiple-choice knapsack: the
// upper convex hull of each attribute's (cost, gain) options, with hull
// segments taken greedily by gain per unit cost. Suffix segment sets are
// versions of a persistent sum tree over all segments in ratio order.
struct SearchTables {
  struct Segment {
    double cost, gain;
  };
  struct TreeNode {
    int left = -1, right = -1;
    double cost = 0.0, gain = 0.0;
  };
  std::vector<std::size_t> order;                       // attribute positions
  std::vector<std::vector<std::pair<int, double>>> opt;  // (value, cost) per depth
  std::vector<double> max_gain;                          // suffix sum of max gain
  std::vector<double> free_gain;                         // suffix sum of gain at zero cost
  std::vector<TreeNode> tree;                            // node 0 is the empty tree
  std::vector<int> root;                                 // per depth
  std::size_t leaves = 0;

  SearchTables(const RecourseProblem& p, const SufficiencyConstraint& c, std::vector<std::size_t> ord, bool by_cost)
      : order(std::move(ord)) {
    const std::size_t m = order.size();
    opt.resize(m);
    max_gain.assign(m + 1, 0.0);
    free_gain.assign(m + 1, 0.0);
    std::vector<std::pair<std::size_t, Segment>> all;  // (depth, segment)
    std::vector<std::pair<double, double>> pts, hull;  // (cost, gain)
    for (std::size_t d = 0; d < m; ++d) {
      const std::size_t i = order[d];
      for (std::size_t v = 0; v < p.cost[i].size(); ++v) {
        if (std::isfinite(p.cost[i][v])) opt[d].emplace_back(static_cast<int>(v), p.cost[i][v]);
      }
      if (by_cost) {
        std::stable_sort(opt[d].begin(), opt[d].end(), [](const auto& a, const auto& b) { return a.second < b.second; });
      }
      pts.clear();
      double base = 0.0, top = 0.0;
      for (const auto& [v, cost] : opt[d]) {
        const double gain = c.gain[i][static_cast<std::size_t>(v)];
        top = std::max(top, gain);
        if (cost <= 0.0) {
          base = std::max(base, gain);
        } else {
          pts.emplace_back(cost, gain);
        }
      }
      std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first < b.first : a.second > b.second;
      });
      hull.assign(1, {0.0, base});
      for (const auto& q : pts) {
        if (q.second <= hull.back().second) continue;
        while (hull.size() >= 2) {
          const auto& a = hull[hull.size() - 2];
          const auto& b = hull.back();
          if ((b.second - a.second) * (q.first - b.first) <= (q.second - b.second) * (b.first - a.first)) {
            hull.pop_back();
          } else {
            break;
          }
        }
        hull.push_back(q);
      }
      for (std::size_t k = 1; k < hull.size(); ++k) {
        all.push_back({d, {hull[k].first - hull[k - 1].first, hull[k].second - hull[k - 1].second}});
      }
      max_gain[d] = top;
      free_gain[d] = base;
    }
    for (std::size_t d = m; d-- > 0;) {
      max_gain[d] += max_gain[d + 1];
      free_gain[d] += free_gain[d + 1];
    }

    std::vector<std::size_t> rank(all.size());
    for (std::size_t k = 0; k < rank.size(); ++k) rank[k] = k;
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
      return all[a].second.gain * all[b].second.cost > all[b].second.gain * all[a].second.cost;
    });
    std::vector<std::size_t> leaf(all.size());
    for (std::size_t pos = 0; pos < rank.size(); ++pos) leaf[rank[pos]] = pos;
    leaves = std::max<std::size_t>(all.size(), 1);
    std::size_t levels = 1;
    while ((std::size_t{1} << (levels - 1)) < leaves) ++levels;
    tree.assign(1, TreeNode{0, 0, 0.0, 0.0});
    tree.reserve(1 + all.size() * levels);
    root.assign(m + 1, 0);
    // `all` is grouped by depth in increasing order; insert deepest first.
    std::size_t k = all.size();
    for (std::size_t d = m; d-- > 0;) {
      int r = root[d + 1];
      for (; k > 0 && all[k - 1].first == d; --k) r = insert(r, leaf[k - 1], all[k - 1].second);
      root[d] = r;
    }
  }

  // Path copy from `node` down to `leaf`, adding `seg` along the way.
  int insert(int node, std::size_t leaf, const Segment& seg) {
    const int top = static_cast<int>(tree.size());
    std::size_t lo = 0, hi = leaves;
    while (true) {
      TreeNode n = tree[static_cast<std::size_t>(node)];
      n.cost += seg.cost;
      n.gain += seg.gain;
      const std::size_t self = tree.size();
      tree.push_back(n);
      if (hi - lo <= 1) break;
      const std::size_t mid = lo + (hi - lo) / 2;
      const int next = static_cast<int>(self + 1);
      if (leaf < mid) {
        node = n.left;
        tree[self].left = next;
        hi = mid;
      } else {
        node = n.right;
        tree[self].right = next;
        lo = mid;
      }
    }
    return top;
  }

  // Lower bound on the extra cost needed from depth d with current score s;
  // nullopt when the constraint cannot be reached.
  std::optional<double> extra(std::size_t d, double s, double rhs) const {
    double need = rhs - s;
    if (need <= 0.0) return 0.0;
    if (max_gain[d] < need - kPruneSlack) return std::nullopt;
    need -= free_gain[d];
    if (need <= 0.0) return 0.0;
    const TreeNode* n = &tree[static_cast<std::size_t>(root[d])];
    if (n->gain <= need) return n->cost;
    double cost = 0.0;
    std::size_t lo = 0, hi = leaves;
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      const TreeNode& left = tree[static_cast<std::size_t>(n->left)];
      if (left.gain >= need) {
        n = &left;
        hi = mid;
      } else {
        cost += left.cost;
        need -= left.gain;
        n = &tree[static_cast<std::size_t>(n->right)];
        lo = mid;
      }
    }
    // A leaf holds a single segment; take the fraction still needed.
    return n->gain > 0.0 ? cost + n->cost * std::min(1.0, need / n->gain) : cost;
  }
};

}  // namespace

double LogitModel::coefficient(std::size_t var, int value) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].var == var && columns[j].value == value) return coef[j];
  }
  return 0.0;
}

double LogitModel::linear_score(std::span<const int> row) const {
  double z = intercept;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (row[columns[j].var] == columns[j].value) z += coef[j];
  }
  return z;
}

double LogitModel::probability(std::span<const int> row) const { return sigmoid(linear_score(row)); }

LogitModel fit_logit(const Dataset& labeled, const OutcomeSpec& outcome, const std::vector<std::string>& actionable,
                     const std::vector<std::string>& context, const LogitOptions& opts) {
  const Schema& s = labeled.schema();
  LogitModel m;
  m.actionable = resolve(s, actionable, outcome.var, "actionable");
  m.context = resolve(s, context, outcome.var, "context");
  std::vector<std::size_t> vars = m.actionable;
  for (std::size_t v : m.context) {
    if (std::find(vars.begin(), vars.end(), v) != vars.end()) {
      fail(ErrorCode::Validation, "variable " + s[v].name + " is both actionable and context");
    }
    vars.push_back(v);
  }
  for (std::size_t v : vars) {
    for (std::size_t val = 1; val < s[v].domain.size(); ++val) m.columns.push_back({v, static_cast<int>(val)});
  }

  std::map<std::vector<int>, std::pair<double, double>> patterns;  // pattern -> (positive, total)
  double pos = 0.0, total = 0.0;
  std::vector<int> key(vars.size());
  for (std::size_t r = 0; r < labeled.rows(); ++r) {
    const double w = labeled.weight(r);
    if (w <= 0.0) continue;
    for (std::size_t i = 0; i < vars.size(); ++i) key[i] = labeled.at(r, vars[i]);
    auto& cell = patterns[key];
    const bool y = outcome.positive(labeled.at(r, outcome.var));
    cell.first += y ? w : 0.0;
    cell.second += w;
    pos += y ? w : 0.0;
    total += w;
  }
  if (pos <= 0.0 || pos >= total) fail(ErrorCode::Validation, "outcome has a single class; the logit model is undefined");

  const Eigen::Index P = static_cast<Eigen::Index>(patterns.size());
  const Eigen::Index K = static_cast<Eigen::Index>(m.columns.size()) + 1;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(P, K);
  Eigen::VectorXd y(P), n(P);
  Eigen::Index row = 0;
  for (const auto& [pattern, cell] : patterns) {
    X(row, 0) = 1.0;
    for (std::size_t j = 0; j < m.columns.size(); ++j) {
      const std::size_t i = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), m.columns[j].var) - vars.begin());
      if (pattern[i] == m.columns[j].value) X(row, static_cast<Eigen::Index>(j) + 1) = 1.0;
    }
    y(row) = cell.first / total;
    n(row) = cell.second / total;
    ++row;
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(K, opts.ridge);
  penalty(0) = 0.0;

  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < P; ++i) {
      // y log σ(η) + (n - y) log(1 - σ(η)), computed stably.
      const double e = eta(i);
      const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
      ll += y(i) * e - n(i) * log1pexp;
    }
    return ll - 0.5 * (penalty.array() * b.array().square()).sum();
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(K);
  beta(0) = std::log(pos / (total - pos));
  double obj = objective(beta);
  Eigen::VectorXd grad(K);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    const Eigen::VectorXd mu = (X * beta).unaryExpr([](double z) { return sigmoid(z); });
    grad = X.transpose() * (y - n.cwiseProduct(mu)) - penalty.cwiseProduct(beta);
    const Eigen::VectorXd w = n.cwiseProduct(mu.cwiseProduct((1.0 - mu.array()).matrix()));
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    H.diagonal() += penalty;
    H.diagonal().array() += 1e-12;
    Eigen::VectorXd step = H.ldlt().solve(grad);
    if (!step.allFinite()) break;
    double t = 1.0;
    Eigen::VectorXd next = beta + step;
    double next_obj = objective(next);
    for (int h = 0; h < 40 && next_obj < obj - 1e-15; ++h) {
      t *= 0.5;
      next = beta + t * step;
      next_obj = objective(next);
    }
    const double change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    obj = next_obj;
    m.iterations = it;
    if (change < opts.tolerance) {
      const Eigen::VectorXd mu2 = (X * beta).unaryExpr([](double z) { return sigmoid(z); });
      m.gradient_norm = (X.transpose() * (y - n.cwiseProduct(mu2)) - penalty.cwiseProduct(beta)).norm();
      m.intercept = beta(0);
      m.coef.assign(beta.data() + 1, beta.data() + K);
      return m;
    }
  }
  fail(ErrorCode::Convergence, "logit fit did not converge in " + std::to_string(opts.max_iterations) +
                                   " iterations (gradient norm " + std::to_string(grad.norm()) + ")");
}

RecourseConfig recourse_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::Validation, "recourse config must be an object");
  for (const auto& [key, val] : j.items()) {
    if (key != "actionable" && key != "alpha" && key != "costs" && key != "timeout_s") {
      fail(ErrorCode::Validation, "unknown recourse key '" + key + "'");
    }
  }
  RecourseConfig c;
  try {
    c.actionable = j.at("actionable").get<std::vector<std::string>>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("costs")) c.costs = j["costs"].get<std::map<std::string, std::string>>();
    if (j.contains("timeout_s")) c.timeout_s = j["timeout_s"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("malformed recourse config: ") + e.what());
  }
  return c;
}

RecourseProblem make_problem(const CausalGraph& g, const OutcomeSpec& outcome, const std::vector<int>& individual,
                             const RecourseConfig& cfg) {
  const Schema& s = g.schema();
  RecourseProblem p;
  p.schema = s;
  p.outcome = outcome;
  p.alpha = cfg.alpha;
  p.timeout_s = cfg.timeout_s;
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) fail(ErrorCode::Validation, "alpha must lie in (0, 1]");
  if (cfg.actionable.empty()) fail(ErrorCode::Validation, "at least one actionable variable is required");
  if (individual.size() != s.size()) fail(ErrorCode::Validation, "individual must assign every variable");
  for (std::size_t v = 0; v < s.size(); ++v) {
    if (individual[v] < 0 || static_cast<std::size_t>(individual[v]) >= s[v].domain.size()) {
      fail(ErrorCode::Validation, "individual value out of domain for " + s[v].name);
    }
  }
  if (outcome.positive(individual[outcome.var])) {
    fail(ErrorCode::Validation, "the individual already has a positive decision");
  }
  p.individual = individual;
  p.actionable = resolve(s, cfg.actionable, outcome.var, "actionable");
  std::sort(p.actionable.begin(), p.actionable.end());
  for (const auto& [name, src] : cfg.costs) {
    std::size_t v = s.index(name);
    if (std::find(p.actionable.begin(), p.actionable.end(), v) == p.actionable.end()) {
      fail(ErrorCode::Validation, "cost given for non-actionable variable " + name);
    }
  }
  const auto desc = descendant_mask(g, p.actionable);
  for (std::size_t v = 0; v < s.size(); ++v) {
    if (!desc[v] && v != outcome.var) p.context.push_back(v);
  }

  const ExprPtr unit = parse("if a_hat_rank >= a_rank then a_hat_rank - a_rank else a_rank - a_hat_rank");
  const std::set<std::string> bound = {"a", "a_hat", "a_rank", "a_hat_rank", "inf"};
  for (std::size_t v : p.actionable) {
    const Variable& var = s[v];
    auto it = cfg.costs.find(var.name);
    ExprPtr e = it == cfg.costs.end() ? unit : parse(it->second);
    check_bound(*e, bound, "cost for " + var.name);
    const auto* ord = var.ordered ? &var.domain : nullptr;
    auto eval = [&](std::size_t from, std::size_t to) {
      Env env{{"a", Value::from_label(var.domain[from], ord)},
              {"a_hat", Value::from_label(var.domain[to], ord)},
              {"a_rank", Value::num(static_cast<double>(from))},
              {"a_hat_rank", Value::num(static_cast<double>(to))},
              {"inf", Value::num(kInf)}};
      Value c = evaluate(*e, env);
      if (!c.is_number() || std::isnan(c.number) || c.number < 0.0) {
        fail(ErrorCode::Validation, "cost for " + var.name + " must be a non-negative number, got " + c.to_string());
      }
      return c.number;
    };
    for (std::size_t a = 0; a < var.domain.size(); ++a) {
      if (eval(a, a) != 0.0) fail(ErrorCode::Validation, "cost for " + var.name + " must be zero when nothing changes");
    }
    const std::size_t cur = static_cast<std::size_t>(individual[v]);
    std::vector<double> row(var.domain.size());
    for (std::size_t to = 0; to < var.domain.size(); ++to) row[to] = eval(cur, to);
    p.cost.push_back(std::move(row));
  }
  return p;
}

double SufficiencyConstraint::score(const std::vector<int>& a) const {
  double s = base;
  for (std::size_t i = 0; i < a.size(); ++i) s += gain[i][static_cast<std::size_t>(a[i])];
  return s;
}

bool SufficiencyConstraint::satisfied(const std::vector<int>& a) const {
  return !infeasible && score(a) >= rhs - kScoreSlack;
}

SufficiencyConstraint sufficiency_constraint(const RecourseProblem& p, const LogitModel& m, const Estimator& est) {
  std::vector<std::size_t> ma = m.actionable;
  std::sort(ma.begin(), ma.end());
  if (ma != p.actionable) fail(ErrorCode::Validation, "logit model was fitted on different actionable variables");
  if (!(est.schema() == p.schema)) fail(ErrorCode::Validation, "dataset schema differs from the problem schema");
  SufficiencyConstraint c;
  std::vector<std::vector<double>> coef(p.schema.size());
  for (std::size_t v : p.actionable) coef[v].assign(p.schema[v].domain.size(), 0.0);
  for (std::size_t j = 0; j < m.columns.size(); ++j) {
    auto& row = coef[m.columns[j].var];
    if (!row.empty()) row[static_cast<std::size_t>(m.columns[j].value)] += m.coef[j];
  }
  for (std::size_t v : p.actionable) {
    const double current = coef[v][static_cast<std::size_t>(p.individual[v])];
    std::vector<double> g(coef[v].size());
    for (std::size_t val = 0; val < g.size(); ++val) g[val] = coef[v][val] - current;
    c.gain.push_back(std::move(g));
  }
  c.base = m.linear_score(p.individual);

  std::vector<std::pair<std::size_t, int>> cond;
  for (std::size_t v : p.actionable) cond.emplace_back(v, p.individual[v]);
  for (std::size_t v : p.context) cond.emplace_back(v, p.individual[v]);
  try {
    c.p_current = est.prob(p.outcome.positive_event(p.schema), Event::point_idx(p.schema, cond));
    c.threshold_source = "empirical";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConditioningOnNull) throw;
    c.p_current = sigmoid(c.base);
    c.threshold_source = "surrogate";
  }
  c.threshold = c.p_current + p.alpha * (1.0 - c.p_current);
  if (c.threshold >= 1.0) {
    c.infeasible = true;
    c.rhs = kInf;
  } else {
    c.rhs = std::log(c.threshold / (1.0 - c.threshold));
  }
  return c;
}

RecoursePlan solve(const RecourseProblem& p, const SufficiencyConstraint& c) {
  const std::size_t m = p.actionable.size();
  if (c.infeasible) return make_plan(p, c, {}, 0);
  Deadline deadline(p.timeout_s);

  // Best-first search for the optimal cost, attributes by coefficient spread.
  std::vector<std::size_t> by_spread(m);
  std::vector<double> spread(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    by_spread[i] = i;
    double lo = kInf, hi = -kInf;
    for (std::size_t v = 0; v < p.cost[i].size(); ++v) {
      if (!std::isfinite(p.cost[i][v])) continue;
      lo = std::min(lo, c.gain[i][v]);
      hi = std::max(hi, c.gain[i][v]);
    }
    spread[i] = hi - lo;
  }
  std::stable_sort(by_spread.begin(), by_spread.end(), [&](std::size_t a, std::size_t b) { return spread[a] > spread[b]; });
  const SearchTables best(p, c, by_spread, true);
  // With whole-number costs every completion costs a whole number, so the
  // relaxation bound can be rounded up.
  bool integral = true;
  for (const auto& row : p.cost) {
    for (double v : row) {
      if (std::isfinite(v) && v != std::floor(v)) integral = false;
    }
  }
  auto tighten = [&](double bound) { return integral ? std::ceil(bound - kCostSlack) : bound; };

  struct Node {
    std::size_t parent;
    int value;
    std::size_t depth;
    double cost;
    double score;
  };
  struct Entry {
    double bound;
    std::size_t depth;
    std::size_t seq;
    std::size_t node;
    bool operator>(const Entry& o) const {
      if (bound != o.bound) return bound > o.bound;
      if (depth != o.depth) return depth < o.depth;
      return seq > o.seq;
    }
  };
  std::vector<Node> arena;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
  std::size_t nodes = 0;
  if (auto ex = best.extra(0, c.base, c.rhs)) {
    arena.push_back({0, -1, 0, 0.0, c.base});
    open.push({tighten(*ex), 0, 0, 0});
  }
  std::optional<double> optimum;
  std::vector<int> incumbent;
  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    deadline.check(++nodes);
    const Node n = arena[e.node];
    if (n.depth == m) {
      std::vector<int> a(m);
      for (std::size_t k = e.node; arena[k].depth > 0; k = arena[k].parent) a[best.order[arena[k].depth - 1]] = arena[k].value;
      if (!c.satisfied(a)) continue;
      optimum = plan_cost(p, a);
      incumbent = std::move(a);
      break;
    }
    const std::size_t i = best.order[n.depth];
    for (const auto& [v, cost] : best.opt[n.depth]) {
      const double nc = n.cost + cost;
      const double ns = n.score + c.gain[i][static_cast<std::size_t>(v)];
      auto ex = best.extra(n.depth + 1, ns, c.rhs);
      if (!ex) continue;
      arena.push_back({e.node, v, n.depth + 1, nc, ns});
      open.push({tighten(nc + *ex), n.depth + 1, arena.size() - 1, arena.size() - 1});
    }
  }
  if (!optimum) return make_plan(p, c, {}, nodes);

  // Lexicographically smallest assignment (schema order, value order) at the
  // optimal cost.
  std::vector<std::size_t> schema_order(m);
  for (std::size_t i = 0; i < m; ++i) schema_order[i] = i;
  const SearchTables lex(p, c, schema_order, false);
  const double budget = *optimum + kCostSlack;
  std::vector<int> a(m, 0);
  std::vector<int> found;
  std::function<bool(std::size_t, double, double)> dfs = [&](std::size_t d, double cost, double score) {
    deadline.check(++nodes);
    if (d == m) {
      if (!c.satisfied(a) || plan_cost(p, a) > budget) return false;
      found = a;
      return true;
    }
    for (const auto& [v, vc] : lex.opt[d]) {
      const double nc = cost + vc;
      const double ns = score + c.gain[d][static_cast<std::size_t>(v)];
      auto ex = lex.extra(d + 1, ns, c.rhs);
      if (!ex || nc + *ex > budget) continue;
      a[d] = v;
      if (dfs(d + 1, nc, ns)) return true;
    }
    return false;
  };
  dfs(0, 0.0, c.base);
  return make_plan(p, c, found.empty() ? incumbent : found, nodes);
}

RecoursePlan brute_force(const RecourseProblem& p, const SufficiencyConstraint& c) {
  const std::size_t m = p.actionable.size();
  double space = 1.0;
  for (const auto& row : p.cost) space *= static_cast<double>(row.size());
  if (space > kBruteForceLimit) fail(ErrorCode::Limit, "brute-force enumeration exceeds 10^7 assignments");
  if (c.infeasible) return make_plan(p, c, {}, 0);

  auto visit = [&](auto&& fn) {
    std::vector<int> a(m, 0);
    while (true) {
      fn(a);
      std::size_t i = m;
      while (i-- > 0) {
        if (static_cast<std::size_t>(++a[i]) < p.cost[i].size()) break;
        a[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) return;
    }
  };
  std::size_t count = 0;
  std::optional<double> best;
  visit([&](const std::vector<int>& a) {
    ++count;
    const double cost = plan_cost(p, a);
    if (std::isfinite(cost) && c.satisfied(a) && (!best || cost < *best)) best = cost;
  });
  if (!best) return make_plan(p, c, {}, count);
  std::vector<int> chosen;
  visit([&](const std::vector<int>& a) {
    if (!chosen.empty()) return;
    const double cost = plan_cost(p, a);
    if (std::isfinite(cost) && c.satisfied(a) && cost <= *best + kCostSlack) chosen = a;
  });
  return make_plan(p, c, chosen, count);
}

double validate_plan(const RecourseProblem& p, const RecoursePlan& plan, const Scm& m) {
  if (!plan.feasible) fail(ErrorCode::Infeasible, "cannot validate an infeasible plan");
  if (!(m.schema() == p.schema)) fail(ErrorCode::Validation, "SCM schema differs from the problem schema");
  Intervention iv;
  std::vector<std::pair<std::size_t, int>> ev;
  for (std::size_t i = 0; i < p.actionable.size(); ++i) {
    iv.emplace_back(p.actionable[i], plan.assignment[i]);
    ev.emplace_back(p.actionable[i], p.individual[p.actionable[i]]);
  }
  for (std::size_t v : p.context) ev.emplace_back(v, p.individual[v]);
  const Event evidence = Event::point_idx(p.schema, ev) & p.outcome.negative_event(p.schema);
  return counterfactual_prob(m, CfQuery{{PotentialEvent{iv, p.outcome.positive_event(p.schema)}}, evidence});
}

nlohmann::ordered_json to_json(const RecoursePlan& plan, const RecourseProblem& p, const SufficiencyConstraint& c) {
  nlohmann::ordered_json j;
  j["feasible"] = plan.feasible;
  j["cost"] = plan.cost;
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : plan.changes) {
    steps.push_back({{"attribute", s.attribute}, {"from", s.from}, {"to", s.to}, {"cost", s.cost}});
  }
  j["changes"] = steps;
  nlohmann::ordered_json assign = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < p.actionable.size() && plan.feasible; ++i) {
    const Variable& v = p.schema[p.actionable[i]];
    assign[v.name] = v.domain[static_cast<std::size_t>(plan.assignment[i])];
  }
  j["assignment"] = assign;
  j["alpha"] = p.alpha;
  j["threshold"] = c.threshold;
  j["threshold_source"] = c.threshold_source;
  j["current_probability"] = c.p_current;
  j["surrogate_probability"] = plan.feasible ? nlohmann::ordered_json(plan.surrogate_probability) : nlohmann::ordered_json();
  j["surrogate_sufficiency"] = plan.feasible ? nlohmann::ordered_json(plan.surrogate_sufficiency) : nlohmann::ordered_json();
  j["constraint_count"] = plan.constraint_count;
  nlohmann::ordered_json ctx = nlohmann::ordered_json::object();
  for (std::size_t v : p.context) ctx[p.schema[v].name] = p.schema[v].domain[static_cast<std::size_t>(p.individual[v])];
  j["context"] = ctx;
  return j;
}

}  // namespace causex
