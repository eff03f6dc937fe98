#include "causex/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "causex/error.hpp"
#include "causex/report.hpp"
#include "causex/scores.hpp"
#include "causex/service.hpp"

namespace causex {

using ojson = nlohmann::ordered_json;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotIdentifiable:
      return 2;
    case ErrorCode::Infeasible:
      return 3;
    default:
      return 1;
  }
}

BoundsCheck validate_bounds(const Scm& m, const OutcomeSpec& outcome, std::size_t trials, std::uint64_t seed,
                            double tolerance) {
  const Schema& s = m.schema();
  auto data = std::make_shared<const Dataset>(exhaustive_joint(m));
  Estimator est(data);
  ScoreSetting st{&est, &m.graph(), std::nullopt};
  std::vector<std::size_t> candidates;
  for (std::size_t v = 0; v < s.size(); ++v) {
    if (v != outcome.var) candidates.push_back(v);
  }
  if (candidates.empty()) fail(ErrorCode::Validation, "the model has no attribute besides the outcome");

  BoundsCheck out;
  out.trials = trials;
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t x = candidates[rng.below(candidates.size())];
    const std::size_t n = s[x].domain.size();
    const std::size_t a = rng.below(n);
    std::size_t b = rng.below(n - 1);
    if (b >= a) ++b;
    ContrastQuery q;
    q.x_vars = {s[x].name};
    q.x = {s[x].domain[a]};
    q.x_prime = {s[x].domain[b]};
    q.outcome = outcome;
    const auto desc = descendant_mask(m.graph(), {x});
    for (std::size_t v = 0; v < s.size(); ++v) {
      if (desc[v] || v == outcome.var || rng.uniform() >= 0.5) continue;
      q.context.emplace_back(s[v].name, s[v].domain[rng.below(s[v].domain.size())]);
    }
    ScoreTriple truth;
    BoundsResult bounds;
    try {
      truth = ground_truth_scores(m, q);
      bounds = score_bounds(st, q);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConditioningOnNull && e.code() != ErrorCode::NotIdentifiable) throw;
      ++out.skipped;
      continue;
    }
    ++out.checked;
    const std::pair<double, Interval> parts[] = {
        {truth.nec, bounds.bounds.nec}, {truth.suf, bounds.bounds.suf}, {truth.nesuf, bounds.bounds.nesuf}};
    double worst = 0.0;
    for (const auto& [v, iv] : parts) worst = std::max({worst, iv.lower - v, v - iv.upper});
    if (worst > tolerance) {
      ++out.violations;
      out.max_violation = std::max(out.max_violation, worst);
      if (out.failures.size() < 5) {
        std::ostringstream os;
        os << q.x_vars[0] << "=" << q.x[0] << " vs " << q.x_prime[0] << " (" << q.context.size()
           << " context values): excess " << worst;
        out.failures.push_back(os.str());
      }
    }
  }
  return out;
}

ojson to_json(const BoundsCheck& c) {
  ojson j;
  j["kind"] = "bounds_check";
  j["trials"] = c.trials;
  j["checked"] = c.checked;
  j["skipped"] = c.skipped;
  j["violations"] = c.violations;
  j["max_violation"] = c.max_violation;
  j["failures"] = c.failures;
  return j;
}

namespace {

struct Globals {
  std::string graph, data, scm, blackbox, format = "json", outcome, threshold;
  std::optional<double> smoothing;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t workers = 1;
  bool skip_empty = false;
};

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Validation, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, "malformed JSON in " + path + ": " + e.what());
  }
}

// "A=1" items into a JSON object.
nlohmann::json pairs(const std::vector<std::string>& items, const char* what) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorCode::Validation, std::string(what) + " expects NAME=VALUE, got '" + item + "'");
    }
    j[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return j;
}

std::shared_ptr<service::Session> open_session(const Globals& g) {
  if (g.graph.empty()) throw Usage("--graph is required");
  nlohmann::json spec;
  spec["graph"] = {{"path", g.graph}};
  if (!g.data.empty()) {
    spec["dataset"] = {{"path", g.data}};
  } else if (!g.scm.empty()) {
    nlohmann::json ds = {{"scm", {{"path", g.scm}}}};
    if (g.samples > 0) {
      ds["sample"] = g.samples;
      ds["seed"] = g.seed;
    } else {
      ds["exhaustive"] = true;
    }
    spec["dataset"] = ds;
  } else {
    throw Usage("--data or --scm is required");
  }
  if (!g.blackbox.empty()) spec["blackbox"] = {{"path", g.blackbox}};
  nlohmann::json config = nlohmann::json::object();
  if (g.smoothing) config["smoothing"] = *g.smoothing;
  if (!g.outcome.empty()) config["outcome"] = g.outcome;
  if (!g.threshold.empty()) config["threshold"] = g.threshold;
  if (g.skip_empty) config["skip_empty_cells"] = true;
  config["workers"] = g.workers;
  spec["config"] = config;
  return service::load_session(spec, ".");
}

OutcomeSpec scm_outcome(const Scm& m, const Globals& g) {
  const Schema& s = m.schema();
  const std::string name = g.outcome.empty() ? s[s.size() - 1].name : g.outcome;
  const Variable& o = s.variable(name);
  return OutcomeSpec::make(s, name, g.threshold.empty() ? o.domain.back() : g.threshold);
}

void emit(std::ostream& out, const Globals& g, const ojson& payload) {
  if (g.format == "table") {
    out << render_table(payload);
  } else {
    out << payload.dump(2) << "\n";
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"causex: causal explanation scores and recourse for black-box decisions"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--graph", g.graph, "causal graph JSON");
  app.add_option("--data", g.data, "dataset CSV");
  app.add_option("--scm", g.scm, "structural causal model JSON (dataset source, or the model for simulate)");
  app.add_option("--samples", g.samples, "sample this many rows from --scm instead of its exact joint");
  app.add_option("--blackbox", g.blackbox, "black-box model JSON");
  app.add_option("--smoothing", g.smoothing, "additive smoothing for empirical probabilities");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "table"}));
  app.add_option("--outcome", g.outcome, "outcome variable when no black box is given");
  app.add_option("--threshold", g.threshold, "least desirable positive outcome value");
  app.add_flag("--skip-empty-cells", g.skip_empty, "drop empty adjustment cells instead of failing");
  app.add_option("--workers", g.workers, "worker threads for explanation reports");

  std::vector<std::string> x, xp, context, individual, overrides, actionable, order_context;
  std::vector<std::string> adjustment;
  std::string mode = "point", score = "nesuf", x_var, request, config_path, orders_path;
  std::optional<double> alpha;
  bool declared_order = false;

  auto add_query = [&](CLI::App* c) {
    c->add_option("--x", x, "treatment values NAME=VALUE")->delimiter(',');
    c->add_option("--x-prime", xp, "baseline values NAME=VALUE")->delimiter(',');
    c->add_option("--context", context, "context values NAME=VALUE")->delimiter(',');
  };

  auto* scores = app.add_subcommand("scores", "necessity and sufficiency scores for one contrast");
  add_query(scores);
  scores->add_option("--mode", mode, "point, bounds or naive")->check(CLI::IsMember({"point", "bounds", "naive"}));
  scores->add_option("--adjustment", adjustment, "backdoor adjustment set")->delimiter(',');
  scores->add_option("--request", request, "request body JSON; flags override it");

  auto* explain = app.add_subcommand("explain", "attribute rankings");
  explain->require_subcommand(1);
  explain->fallthrough();
  explain->add_option("--score", score, "nec, suf or nesuf")->check(CLI::IsMember({"nec", "suf", "nesuf"}));
  explain->add_option("--mode", mode, "point or bounds")->check(CLI::IsMember({"point", "bounds"}));
  explain->add_option("--orders", orders_path, "JSON object of value orders per attribute");
  explain->add_flag("--use-declared-order", declared_order, "rank values by their declared order");
  explain->add_option("--order-context", order_context, "context for learned value orders")->delimiter(',');
  explain->add_option("--request", request, "request body JSON; flags override it");
  auto* global = explain->add_subcommand("global", "population-level ranking");
  auto* contextual = explain->add_subcommand("contextual", "ranking within a sub-population");
  contextual->add_option("--x-var", x_var, "single attribute to score");
  contextual->add_option("--context", context, "context values NAME=VALUE")->delimiter(',');
  auto* local = explain->add_subcommand("local", "contributions for one individual");
  local->add_option("--individual", individual, "attribute values NAME=VALUE")->delimiter(',');

  auto* recourse = app.add_subcommand("recourse", "minimal-cost action plan");
  recourse->add_option("--individual", individual, "attribute values NAME=VALUE")->delimiter(',');
  recourse->add_option("--config", config_path, "recourse config JSON");
  recourse->add_option("--alpha", alpha, "required sufficiency");
  recourse->add_option("--actionable", actionable, "actionable attributes")->delimiter(',');
  recourse->add_option("--request", request, "request body JSON; flags override it");

  auto* whatif = app.add_subcommand("whatif", "prediction and sufficiency after changing attributes");
  whatif->add_option("--individual", individual, "attribute values NAME=VALUE")->delimiter(',');
  whatif->add_option("--overrides", overrides, "new values NAME=VALUE")->delimiter(',');
  whatif->add_option("--request", request, "request body JSON; flags override it");

  auto* simulate = app.add_subcommand("simulate", "work with a structural causal model");
  std::size_t sample = 0, trials = 100;
  bool ground_truth = false, check_bounds = false;
  simulate->add_option("--sample", sample, "print this many sampled rows as CSV");
  simulate->add_flag("--ground-truth", ground_truth, "exact scores for the query");
  simulate->add_flag("--validate-bounds", check_bounds, "check estimated bounds against exact scores");
  simulate->add_option("--trials", trials, "random queries for --validate-bounds");
  add_query(simulate);

  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  service::ServerOptions so;
  std::string persist, static_dir;
  serve->add_option("--host", so.host, "bind address");
  serve->add_option("--port", so.port, "port, 0 for any free port");
  serve->add_option("--data-dir", so.data_dir, "base directory for relative paths in requests");
  serve->add_option("--persist-dir", persist, "directory for session snapshots");
  serve->add_option("--static-dir", static_dir, "UI assets served at /");
  serve->add_option("--cors-origin", so.cors_origin, "allowed CORS origin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  auto body_base = [&]() -> nlohmann::json {
    return request.empty() ? nlohmann::json::object() : read_json(request);
  };

  try {
    if (*scores) {
      auto s = open_session(g);
      nlohmann::json body = body_base();
      if (!x.empty()) body["query"]["x"] = pairs(x, "--x");
      if (!xp.empty()) body["query"]["x_prime"] = pairs(xp, "--x-prime");
      if (!context.empty()) body["query"]["context"] = pairs(context, "--context");
      if (scores->count("--mode")) body["mode"] = mode;
      if (!adjustment.empty()) body["adjustment"] = adjustment;
      emit(out, g, service::handle_scores(*s, body));
      return 0;
    }
    if (*explain) {
      auto s = open_session(g);
      nlohmann::json body = body_base();
      if (explain->count("--score")) body["score"] = score;
      if (explain->count("--mode")) body["mode"] = mode;
      if (!orders_path.empty()) body["orders"] = read_json(orders_path);
      if (declared_order) body["use_declared_order"] = true;
      if (!order_context.empty()) body["order_context"] = pairs(order_context, "--order-context");
      Level level = Level::Global;
      if (*contextual) {
        level = Level::Contextual;
        if (!x_var.empty()) body["x_var"] = x_var;
        if (!context.empty()) body["context"] = pairs(context, "--context");
      } else if (*local) {
        level = Level::Local;
        if (!individual.empty()) body["individual"] = pairs(individual, "--individual");
      }
      (void)global;
      emit(out, g, service::handle_explain(*s, level, body));
      return 0;
    }
    if (*recourse) {
      auto s = open_session(g);
      nlohmann::json body = body_base();
      if (!individual.empty()) body["individual"] = pairs(individual, "--individual");
      if (!config_path.empty()) body["config"] = read_json(config_path);
      if (alpha) body["config"]["alpha"] = *alpha;
      if (!actionable.empty()) body["config"]["actionable"] = actionable;
      const ojson plan = service::handle_recourse(*s, body);
      emit(out, g, plan);
      return plan["feasible"].get<bool>() ? 0 : 3;
    }
    if (*whatif) {
      auto s = open_session(g);
      nlohmann::json body = body_base();
      if (!individual.empty()) body["individual"] = pairs(individual, "--individual");
      if (!overrides.empty()) body["overrides"] = pairs(overrides, "--overrides");
      emit(out, g, service::handle_whatif(*s, body));
      return 0;
    }
    if (*simulate) {
      if (g.scm.empty()) throw Usage("simulate needs --scm");
      const Scm m = load_scm(g.scm);
      if (sample > 0) {
        out << to_csv(sample_dataset(m, sample, g.seed));
        return 0;
      }
      const OutcomeSpec outcome = scm_outcome(m, g);
      if (check_bounds) {
        const BoundsCheck c = validate_bounds(m, outcome, trials, g.seed);
        emit(out, g, to_json(c));
        return c.violations == 0 ? 0 : 1;
      }
      if (ground_truth) {
        const nlohmann::json xj = pairs(x, "--x"), xpj = pairs(xp, "--x-prime");
        ContrastQuery q;
        for (const auto& [k, v] : xj.items()) {
          if (!xpj.contains(k)) fail(ErrorCode::Validation, "--x-prime lacks " + k);
          q.x_vars.push_back(k);
          q.x.push_back(v.get<std::string>());
          q.x_prime.push_back(xpj[k].get<std::string>());
        }
        for (const auto& [k, v] : pairs(context, "--context").items()) q.context.emplace_back(k, v.get<std::string>());
        q.outcome = outcome;
        q.validate(m.schema());
        ojson p;
        p["kind"] = "scores";
        p["mode"] = "ground_truth";
        ojson qj;
        qj["x"] = ojson::parse(xj.dump());
        qj["x_prime"] = ojson::parse(xpj.dump());
        qj["context"] = to_json(q.context);
        qj["outcome"] = outcome.name;
        qj["threshold"] = m.schema()[outcome.var].domain[static_cast<std::size_t>(outcome.threshold)];
        p["query"] = qj;
        p["triple"] = to_json(ground_truth_scores(m, q));
        emit(out, g, p);
        return 0;
      }
      throw Usage("simulate needs one of --sample, --ground-truth or --validate-bounds");
    }
    if (*serve) {
      if (!persist.empty()) so.persist_dir = persist;
      if (!static_dir.empty()) so.static_dir = static_dir;
      service::Server server(so);
      server.run();
      return 0;
    }
  } catch (const Usage& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace causex
