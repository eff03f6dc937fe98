#include "causex/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "causex/error.hpp"

namespace causex::fixtures {

namespace {

std::vector<std::string> labels(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

Variable var(std::string name, std::size_t n, bool ordered = true) { return {std::move(name), labels(n), ordered}; }

std::vector<double> jittered(Rng& rng, std::size_t n, double lo = 0.1) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& x : p) sum += (x = lo + (1.0 - lo) * rng.uniform());
  for (auto& x : p) x /= sum;
  return p;
}

ExogenousVar coin(const std::string& name) { return {name, {"0", "1"}, {0.5, 0.5}}; }

// Nested conditional over `vars` (name, domain size) returning a random
// value below `out` in every leaf.
std::string table_expr(Rng& rng, const std::vector<std::pair<std::string, std::size_t>>& vars, std::size_t k,
                       std::size_t out, std::vector<int>& leaves) {
  if (k == vars.size()) {
    const int v = static_cast<int>(rng.below(out));
    leaves.push_back(v);
    return std::to_string(v);
  }
  const auto& [name, n] = vars[k];
  std::string s = table_expr(rng, vars, k + 1, out, leaves);
  for (std::size_t i = n - 1; i-- > 0;) {
    s = "if " + name + " == " + std::to_string(i) + " then " + table_expr(rng, vars, k + 1, out, leaves) +
        " else (" + s + ")";
  }
  return s;
}

bool varied(const std::vector<int>& leaves) {
  return std::adjacent_find(leaves.begin(), leaves.end(), std::not_equal_to<>()) != leaves.end();
}

std::string threshold_expr(Rng& rng, const std::vector<std::string>& parents, const std::string& noise, bool force_weight,
                           std::size_t noise_max, int parent_max_sum) {
  std::ostringstream os;
  int total = 0;
  bool first = true;
  for (const auto& p : parents) {
    int w = static_cast<int>(rng.below(3));
    if (force_weight && w == 0) w = 1;
    total += w;
    if (w == 0) continue;
    os << (first ? "" : " + ") << w << " * " << p;
    first = false;
  }
  if (!noise.empty()) {
    os << (first ? "" : " + ") << noise;
    first = false;
  }
  if (first) os << "0";
  const int reach = total * parent_max_sum + static_cast<int>(noise_max);
  const int t = reach <= 0 ? 1 : 1 + static_cast<int>(rng.below(static_cast<std::size_t>(reach)));
  return "if " + os.str() + " >= " + std::to_string(t) + " then 1 else 0";
}

double logistic_quantile(double q) { return std::log(q / (1.0 - q)); }

}  // namespace

Scm f1() {
  Schema s({var("Z", 2), var("X", 2), var("O", 2)});
  CausalGraph g(s, {{"Z", "X"}, {"Z", "O"}, {"X", "O"}});
  return Scm(g, {coin("U_Z"), coin("U_X"), coin("U_O")},
             {{"Z", "U_Z"},
              {"X", "if (Z == 1 and U_X == 1) then 1 else 0"},
              {"O", "if (X == 1 or (Z == 1 and U_O == 1)) then 1 else 0"}});
}

Scm f1_unconfounded() {
  Schema s({var("Z", 2), var("X", 2), var("O", 2)});
  CausalGraph g(s, {{"Z", "X"}, {"X", "O"}});
  return Scm(g, {coin("U_Z"), coin("U_X"), coin("U_O")},
             {{"Z", "U_Z"}, {"X", "if (Z == 1 and U_X == 1) then 1 else 0"}, {"O", "if (X == 1 or U_O == 1) then 1 else 0"}});
}

RandomScm random_scm(std::uint64_t seed, const RandomScmOptions& o) {
  if (o.endogenous < 2) fail(ErrorCode::Validation, "a random model needs at least two variables");
  Rng rng(seed);
  const std::size_t k = o.endogenous - 1;  // V0..V{k-1}
  std::vector<Variable> vars;
  for (std::size_t i = 0; i < k; ++i) vars.push_back(var("V" + std::to_string(i), i == 0 && o.ternary_first ? 3 : 2));
  if (o.unreachable_extra) vars.push_back(var("W", 2));
  vars.push_back(var("O", 2));
  Schema s(vars);
  const std::size_t n = s.size();
  const std::size_t out = n - 1;

  std::vector<std::vector<std::size_t>> parents(n);
  for (std::size_t j = 1; j < k; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (rng.uniform() < o.edge_probability) parents[j].push_back(i);
    }
  }
  if (o.unreachable_extra) {
    const std::size_t w = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (rng.uniform() < o.edge_probability) parents[w].push_back(i);
    }
    if (parents[w].empty()) parents[w].push_back(rng.below(k));
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (rng.uniform() < std::max(o.edge_probability, 0.5)) parents[out].push_back(i);
  }
  if (parents[out].empty()) parents[out].push_back(rng.below(k));

  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t p : parents[c]) edges.emplace_back(s[p].name, s[c].name);
  }
  CausalGraph g(s, edges);

  std::vector<ExogenousVar> exo;
  std::map<std::string, std::string> eqs;
  for (std::size_t v = 0; v < out; ++v) {
    const std::string u = "U_" + s[v].name;
    const std::size_t dom = s[v].domain.size();
    const std::size_t levels = o.monotone ? (v == 0 && o.ternary_first ? 3 : 3) : 2 + rng.below(3);
    exo.push_back({u, labels(levels), jittered(rng, levels)});
    std::vector<std::string> pnames;
    for (std::size_t p : parents[v]) pnames.push_back(s[p].name);
    if (o.monotone) {
      if (parents[v].empty()) {
        eqs[s[v].name] = dom == 3 ? u : threshold_expr(rng, {}, u, false, levels - 1, 0);
      } else {
        eqs[s[v].name] = threshold_expr(rng, pnames, u, false, levels - 1, 1);
      }
      continue;
    }
    std::vector<std::pair<std::string, std::size_t>> tv;
    for (std::size_t p : parents[v]) tv.emplace_back(s[p].name, s[p].domain.size());
    tv.emplace_back(u, levels);
    std::vector<int> leaves;
    std::string e;
    do {
      leaves.clear();
      e = table_expr(rng, tv, 0, dom, leaves);
    } while (!varied(leaves));
    eqs[s[v].name] = e;
  }
  std::vector<std::string> inputs;
  for (std::size_t p : parents[out]) inputs.push_back(s[p].name);
  if (o.monotone) {
    const int top = o.ternary_first ? 2 : 1;
    eqs["O"] = threshold_expr(rng, inputs, "", true, 0, top);
  } else {
    std::vector<std::pair<std::string, std::size_t>> tv;
    for (std::size_t p : parents[out]) tv.emplace_back(s[p].name, s[p].domain.size());
    std::vector<int> leaves;
    std::string e;
    do {
      leaves.clear();
      e = table_expr(rng, tv, 0, 2, leaves);
    } while (!varied(leaves));
    eqs["O"] = e;
  }
  return {Scm(g, std::move(exo), eqs), inputs};
}

GermanSyn german_syn(std::uint64_t seed, double renter_share) {
  if (!(renter_share >= 0.0 && renter_share <= 1.0)) fail(ErrorCode::Validation, "renter share must lie in [0, 1]");
  Rng rng(seed);
  Schema s({{"Age", {"young", "middle", "old"}, true},
            {"Sex", {"female", "male"}, false},
            {"Status", {"low", "medium", "high"}, true},
            {"Saving", {"low", "medium", "high"}, true},
            {"Housing", {"rent", "own"}, false},
            {"Credit", {"bad", "good"}, true}});
  CausalGraph g(s, {{"Age", "Status"}, {"Sex", "Status"}, {"Age", "Saving"}, {"Status", "Saving"},
                    {"Age", "Credit"}, {"Sex", "Credit"}, {"Status", "Credit"}, {"Saving", "Credit"},
                    {"Housing", "Credit"}});
  auto jitter = [&](double x) { return x * (0.85 + 0.3 * rng.uniform()); };
  std::vector<ExogenousVar> exo = {
      {"U_Age", labels(3), jittered(rng, 3, 0.6)},
      {"U_Sex", labels(2), jittered(rng, 2, 0.6)},
      {"U_Status", labels(4), jittered(rng, 4, 0.5)},
      {"U_Saving", labels(4), jittered(rng, 4, 0.5)},
      {"U_Housing", {"0", "1"}, {1.0 - renter_share, renter_share}},
  };
  const double w_status = jitter(1.0), w_saving = jitter(1.4), w_sex = jitter(0.3), w_own = jitter(0.6);
  const double w_age = jitter(0.9), w_age_rent = jitter(0.5), cut = jitter(2.6);
  auto rule = [=](int age, int sex, int status, int saving, int housing) {
    const double age_term = housing == 1 ? w_age * age : -w_age_rent * age;
    const double score = w_status * status + w_saving * saving + w_sex * sex + w_own * housing + age_term;
    return score >= cut ? 1 : 0;
  };
  auto same = [](std::span<const int>, std::span<const int> u) { return u[0]; };
  std::vector<Equation> eqs(6);
  eqs[0] = {{}, {0}, same, {}};
  eqs[1] = {{}, {1}, same, {}};
  // Every parent cell reaches every value, so adjustment cells are never empty.
  auto clamp2 = [](int v) { return std::clamp(v, 0, 2); };
  eqs[2] = {{0, 1}, {2}, [clamp2](std::span<const int> e, std::span<const int> u) { return clamp2(u[0] + (e[0] + e[1]) / 2 - 1); }, {}};
  eqs[3] = {{0, 2}, {3}, [clamp2](std::span<const int> e, std::span<const int> u) {
              return clamp2(u[0] + (e[1] + (e[0] == 2 ? 1 : 0)) / 2 - 1);
            }, {}};
  eqs[4] = {{}, {4}, [](std::span<const int>, std::span<const int> u) { return u[0] == 1 ? 0 : 1; }, {}};
  eqs[5] = {{0, 1, 2, 3, 4}, {},
            [rule](std::span<const int> e, std::span<const int>) { return rule(e[0], e[1], e[2], e[3], e[4]); }, {}};
  Scm m(g, std::move(exo), std::move(eqs));
  OutcomeSpec outcome = OutcomeSpec::make(s, "Credit", "good");
  auto backend = function_backend([rule](const std::vector<int>& f) { return rule(f[0], f[1], f[2], f[3], f[4]); },
                                  "german-syn");
  auto bb = std::make_shared<BlackBox>(s, std::vector<std::string>{"Age", "Sex", "Status", "Saving", "Housing"}, outcome,
                                       backend);
  return {std::move(m), std::move(bb), outcome};
}

RecourseInstance recourse_instance(std::uint64_t seed, const RecourseInstanceOptions& o) {
  Rng rng(seed);
  std::vector<std::size_t> dom(1 + rng.below(o.max_attributes));
  // The exact noise has one level per distinct score, so its joint grows
  // quadratically in the number of attribute cells.
  const std::size_t cap = o.noise_levels == 0 ? 256 : 1024;
  std::size_t product = 1;
  for (auto& d : dom) {
    d = 2 + rng.below(o.max_domain - 1);
    if (product * d > cap) d = 2;
    product *= d;
  }
  while (product > cap) product /= dom.back(), dom.pop_back();
  const std::size_t m = dom.size();
  std::vector<Variable> vars;
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t i = 0; i < m; ++i) {
    vars.push_back(var("A" + std::to_string(i + 1), dom[i]));
    edges.emplace_back(vars.back().name, "O");
  }
  vars.push_back(var("C", 2, false));
  vars.push_back(var("O", 2));
  edges.emplace_back("C", "O");
  Schema s(vars);
  CausalGraph g(s, edges);

  std::vector<std::vector<double>> beta(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = 0.5 + 2.0 * rng.uniform();
    for (std::size_t v = 0; v < dom[i]; ++v) {
      const double step = static_cast<double>(v) / static_cast<double>(dom[i] - 1);
      beta[i].push_back(v == 0 ? 0.0 : w * step + 0.6 * (rng.uniform() - 0.5));
    }
  }
  const double intercept = -1.0 - 2.0 * rng.uniform();
  const double gamma = 2.0 * rng.uniform() - 1.0;

  std::vector<ExogenousVar> exo;
  for (std::size_t i = 0; i < m; ++i) exo.push_back({"U_A" + std::to_string(i + 1), labels(dom[i]), jittered(rng, dom[i], 0.4)});
  exo.push_back({"U_C", {"0", "1"}, jittered(rng, 2, 0.6)});
  auto score = [=](std::span<const int> e) {
    double z = intercept + gamma * e[m];
    for (std::size_t i = 0; i < m; ++i) z += beta[i][static_cast<std::size_t>(e[i])];
    return z;
  };

  // O := [score + noise > 0]. The quantile grid approximates a logistic;
  // the exact variant cuts [0, 1) at σ(score) for every reachable score, so
  // Pr(O = 1 | a, c) = σ(score) holds exactly.
  std::vector<double> noise, noise_p;
  if (o.noise_levels > 0) {
    for (std::size_t j = 0; j < o.noise_levels; ++j) {
      noise.push_back(logistic_quantile((static_cast<double>(j) + 0.5) / static_cast<double>(o.noise_levels)));
      noise_p.push_back(1.0 / static_cast<double>(o.noise_levels));
    }
  } else {
    std::vector<double> cuts = {0.0, 1.0};
    std::vector<int> cell(m + 1, 0);
    for (bool more = true; more;) {
      cuts.push_back(1.0 / (1.0 + std::exp(-score(cell))));
      more = false;
      for (std::size_t i = 0; i <= m; ++i) {
        const std::size_t n = i < m ? dom[i] : 2;
        if (++cell[i] < static_cast<int>(n)) {
          more = true;
          break;
        }
        cell[i] = 0;
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t j = 1; j < cuts.size(); ++j) {
      // Level with uniform draw in [cuts[j-1], cuts[j]): O = 1 iff σ(score) > draw.
      const double mid = 0.5 * (cuts[j - 1] + cuts[j]);
      noise.push_back(logistic_quantile(1.0 - mid));
      noise_p.push_back(cuts[j] - cuts[j - 1]);
    }
  }
  exo.push_back({"U_O", labels(noise.size()), noise_p});
  std::vector<Equation> eqs;
  auto same = [](std::span<const int>, std::span<const int> u) { return u[0]; };
  for (std::size_t i = 0; i <= m; ++i) eqs.push_back({{}, {i}, same, {}});
  std::vector<std::size_t> parents(m + 1);
  for (std::size_t i = 0; i <= m; ++i) parents[i] = i;
  eqs.push_back({parents, {m + 1},
                 [score, noise](std::span<const int> e, std::span<const int> u) {
                   return score(e) + noise[static_cast<std::size_t>(u[0])] > 0.0 ? 1 : 0;
                 },
                 {}});
  Scm scm(g, std::move(exo), std::move(eqs));

  const double lowest = *std::min_element(noise.begin(), noise.end());
  std::vector<int> individual(s.size(), 0);
  for (int attempt = 0;; ++attempt) {
    for (std::size_t i = 0; i <= m; ++i) individual[i] = static_cast<int>(rng.below(s[i].domain.size()));
    if (score(individual) + lowest <= 0.0 || attempt > 1000) break;
  }
  RecourseInstance inst{std::move(scm), OutcomeSpec::make(s, "O", "1"), individual, {}};
  for (std::size_t i = 0; i < m; ++i) {
    inst.config.actionable.push_back(s[i].name);
    if (rng.uniform() < 0.3) {
      inst.config.costs[s[i].name] = "if a_hat_rank < a_rank then inf else 2 * (a_hat_rank - a_rank)";
    } else if (rng.uniform() < 0.2) {
      inst.config.costs[s[i].name] = "if a_hat_rank == a_rank then 0 else 1";
    }
  }
  inst.config.alpha = o.alpha;
  return inst;
}

LinearInstance linear_instance(std::uint64_t seed, std::size_t attributes, double alpha) {
  if (attributes == 0) fail(ErrorCode::Validation, "at least one attribute is required");
  Rng rng(seed);
  std::vector<Variable> vars;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> actionable;
  for (std::size_t i = 0; i < attributes; ++i) {
    vars.push_back(var("A" + std::to_string(i + 1), 3));
    actionable.push_back(vars.back().name);
    edges.emplace_back(actionable.back(), "O");
  }
  vars.push_back(var("C", 2, false));
  vars.push_back(var("O", 2));
  edges.emplace_back("C", "O");
  Schema s(vars);
  CausalGraph g(s, edges);
  const std::size_t c = attributes, o = attributes + 1;

  LogitModel model;
  double total = 0.0;
  for (std::size_t i = 0; i < attributes; ++i) {
    const double b1 = 0.2 + 0.6 * rng.uniform();
    const double b2 = b1 + 0.2 + 0.6 * rng.uniform();
    model.columns.push_back({i, 1});
    model.coef.push_back(b1);
    model.columns.push_back({i, 2});
    model.coef.push_back(b2);
    model.actionable.push_back(i);
    total += b2;
  }
  model.columns.push_back({c, 1});
  model.coef.push_back(0.5);
  model.context.push_back(c);
  // Intercept such that the surrogate threshold needs about 40% of the total gain.
  const double target = std::log(1.0 / (1.0 - alpha)) + 0.4 * total;
  auto need = [&](double b0) {
    const double p = 1.0 / (1.0 + std::exp(-b0));
    const double t = p + alpha * (1.0 - p);
    return std::log(t / (1.0 - t)) - b0;
  };
  double lo = -60.0, hi = 20.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (need(mid) > target ? lo : hi) = mid;
  }
  model.intercept = 0.5 * (lo + hi);

  std::vector<std::vector<int>> rows;
  for (int r = 0; r < 200; ++r) {
    std::vector<int> row(s.size());
    for (std::size_t i = 0; i < o; ++i) row[i] = static_cast<int>(rng.below(s[i].domain.size()));
    row[o] = rng.uniform() < model.probability(row) ? 1 : 0;
    rows.push_back(std::move(row));
  }
  auto data = std::make_shared<const Dataset>(s, rows);
  std::vector<int> individual(s.size(), 0);
  RecourseConfig cfg;
  cfg.actionable = actionable;
  cfg.alpha = alpha;
  RecourseProblem problem = make_problem(g, OutcomeSpec::make(s, "O", "1"), individual, cfg);
  return {std::move(data), std::move(problem), std::move(model)};
}

}  // namespace causex::fixtures
