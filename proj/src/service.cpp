#include "causex/service.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "causex/error.hpp"
#include "causex/oracle.hpp"
#include "causex/recourse.hpp"
#include "causex/report.hpp"

namespace causex::service {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::Validation, "cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path resolve(const std::string& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : fs::path(base) / path;
}

bool is_path_ref(const nlohmann::json& j) { return j.is_object() && j.size() == 1 && j.contains("path"); }

template <class Json>
Json document(const nlohmann::json& j, const std::string& base, const char* what) {
  if (is_path_ref(j)) {
    const std::string text = read_file(resolve(base, j["path"].get<std::string>()));
    try {
      return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Validation, std::string("malformed ") + what + " file: " + e.what());
    }
  }
  if (!j.is_object()) fail(ErrorCode::Validation, std::string(what) + " must be an object or {\"path\": file}");
  return Json::parse(j.dump());
}

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string random_id() {
  static std::mutex m;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard<std::mutex> lock(m);
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << gen();
  return os.str();
}

[[noreturn]] void mismatch(const std::string& what) { fail(ErrorCode::SchemaMismatch, what); }

// Object of variable -> label, checked against the schema and returned in
// schema order.
Assignment assignment(const Schema& s, const nlohmann::json& j, const char* what) {
  if (j.is_null()) return {};
  if (!j.is_object()) fail(ErrorCode::Validation, std::string(what) + " must be an object of variable: value");
  std::vector<std::pair<std::size_t, std::string>> items;
  for (const auto& [name, value] : j.items()) {
    auto v = s.find(name);
    if (!v) mismatch(std::string(what) + " names unknown variable " + name);
    if (!value.is_string()) fail(ErrorCode::Validation, std::string(what) + " values must be strings (" + name + ")");
    const std::string label = value.get<std::string>();
    if (s[*v].find(label) < 0) mismatch(std::string(what) + ": '" + label + "' is not a value of " + name);
    items.emplace_back(*v, label);
  }
  std::sort(items.begin(), items.end());
  Assignment out;
  for (auto& [v, label] : items) out.emplace_back(s[v].name, std::move(label));
  return out;
}

// Full row for an individual; the decision comes from the black box when
// there is one, else from the individual's outcome value.
std::vector<int> individual_row(const Session& s, const nlohmann::json& j) {
  const Schema& schema = s.graph.schema();
  std::vector<int> row(schema.size(), -1);
  for (const auto& [name, label] : assignment(schema, j, "individual")) {
    const std::size_t v = schema.index(name);
    row[v] = schema[v].index_of(label);
  }
  for (std::size_t v = 0; v < schema.size(); ++v) {
    if (row[v] < 0 && !(s.bb && v == s.outcome.var)) {
      fail(ErrorCode::Validation, "individual lacks a value for " + schema[v].name);
    }
  }
  if (s.bb) row[s.outcome.var] = s.bb->predict(row);
  return row;
}

Assignment row_labels(const Schema& s, const std::vector<int>& row, const std::vector<std::size_t>& vars) {
  Assignment a;
  for (std::size_t v : vars) a.emplace_back(s[v].name, s[v].domain[static_cast<std::size_t>(row[v])]);
  return a;
}

ojson estimator_json(const Session& s) {
  return {{"smoothing", s.est->config().smoothing}, {"skip_empty_cells", s.est->config().skip_empty_cells}};
}

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::Validation, std::string("field '") + key + "' has the wrong type");
  }
}

void only_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* what) {
  if (j.is_null()) return;
  if (!j.is_object()) fail(ErrorCode::Validation, std::string(what) + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; })) {
      fail(ErrorCode::Validation, std::string("unknown ") + what + " key '" + k + "'");
    }
  }
}

Dataset load_data(const nlohmann::json& j, const Schema& schema, const CsvOptions& csv, const std::string& base) {
  if (!j.is_object()) fail(ErrorCode::Validation, "dataset must be an object");
  auto parse = [&](const std::string& text) {
    try {
      return parse_csv(text, schema, csv);
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (e.code() == ErrorCode::Validation && (msg.rfind("unknown column", 0) == 0 || msg.rfind("missing column", 0) == 0)) {
        mismatch(msg);
      }
      throw;
    }
  };
  if (j.contains("csv")) return parse(j["csv"].get<std::string>());
  if (j.contains("scm")) {
    only_keys(j, {"scm", "exhaustive", "sample", "seed"}, "dataset");
    Scm m = scm_from_json(document<nlohmann::ordered_json>(j["scm"], base, "SCM"));
    if (!(m.schema() == schema)) mismatch("SCM variables differ from the graph");
    if (j.contains("sample")) return sample_dataset(m, j["sample"].get<std::size_t>(), field<std::uint64_t>(j, "seed", 0));
    return exhaustive_joint(m);
  }
  if (j.contains("path")) return parse(read_file(resolve(base, j["path"].get<std::string>())));
  fail(ErrorCode::Validation, "dataset needs one of path, csv or scm");
}

}  // namespace

ScoreSetting Session::setting() const {
  ScoreSetting st{est.get(), &graph, std::nullopt};
  if (bb) st.inputs = bb->input_set();
  return st;
}

std::shared_ptr<Session> load_session(const nlohmann::json& spec, const std::string& base) {
  only_keys(spec, {"graph", "dataset", "blackbox", "config"}, "session");
  if (!spec.contains("graph")) fail(ErrorCode::Validation, "session needs a graph");
  if (!spec.contains("dataset")) fail(ErrorCode::Validation, "session needs a dataset");
  const nlohmann::json config = spec.value("config", nlohmann::json::object());
  only_keys(config, {"outcome", "threshold", "order", "smoothing", "skip_empty_cells", "workers", "binning",
                     "weight_column", "prediction_column"},
            "config");

  auto s = std::make_shared<Session>();
  s->spec = spec;
  s->created = now_iso();
  s->graph = graph_from_json(document<nlohmann::json>(spec["graph"], base, "graph"));
  const Schema& schema = s->graph.schema();

  std::optional<nlohmann::json> model;
  if (spec.contains("blackbox") && !spec["blackbox"].is_null()) model = document<nlohmann::json>(spec["blackbox"], base, "model");

  std::string outcome = field<std::string>(config, "outcome", "");
  if (model && model->contains("output")) {
    const std::string out = (*model)["output"].get<std::string>();
    if (!outcome.empty() && outcome != out) mismatch("config outcome " + outcome + " differs from the model output " + out);
    outcome = out;
  }
  if (outcome.empty()) outcome = schema[schema.size() - 1].name;
  if (!schema.find(outcome)) mismatch("outcome " + outcome + " is not a graph variable");

  CsvOptions csv;
  csv.outcome = outcome;
  csv.fill_missing_outcome = model.has_value();
  csv.binning = field<std::map<std::string, std::vector<double>>>(config, "binning", {});
  csv.weight_column = field<std::string>(config, "weight_column", csv.weight_column);
  csv.prediction_column = field<std::string>(config, "prediction_column", csv.prediction_column);
  Dataset raw = load_data(spec["dataset"], schema, csv, base);

  if (model) {
    s->bb = blackbox_from_json(*model, schema, &raw);
    s->outcome = s->bb->outcome();
    s->data = std::make_shared<const Dataset>(label_dataset(*s->bb, raw));
  } else {
    const Variable& o = schema.variable(outcome);
    std::optional<std::vector<std::string>> order;
    if (config.contains("order")) order = config["order"].get<std::vector<std::string>>();
    const std::string fallback = order ? order->front() : o.domain.back();
    s->outcome = OutcomeSpec::make(schema, outcome, field<std::string>(config, "threshold", fallback), order);
    s->data = std::make_shared<const Dataset>(std::move(raw));
  }
  EstimatorConfig ec;
  ec.smoothing = field<double>(config, "smoothing", 0.0);
  ec.skip_empty_cells = field<bool>(config, "skip_empty_cells", false);
  s->est = std::make_shared<const Estimator>(s->data, ec);
  s->workers = std::max<std::size_t>(1, field<std::size_t>(config, "workers", 1));
  return s;
}

ojson handle_schema(const Session& s) {
  ojson j;
  j["kind"] = "schema";
  j["id"] = s.id;
  j["created"] = s.created;
  j["variables"] = ojson::parse(schema_to_json(s.graph.schema()).dump());
  j["edges"] = s.graph.edges();
  j["outcome"] = s.outcome.name;
  j["threshold"] = s.graph.schema()[s.outcome.var].domain[static_cast<std::size_t>(s.outcome.threshold)];
  j["blackbox"] = s.bb ? ojson(s.bb->kind()) : ojson();
  j["inputs"] = s.bb ? ojson(s.bb->inputs()) : ojson();
  j["rows"] = s.data->rows();
  j["estimator"] = estimator_json(s);
  return j;
}

ojson handle_scores(const Session& s, const nlohmann::json& body) {
  only_keys(body, {"query", "mode", "adjustment"}, "scores request");
  const Schema& schema = s.graph.schema();
  const nlohmann::json q = body.value("query", nlohmann::json::object());
  only_keys(q, {"x", "x_prime", "context"}, "query");
  const Assignment x = assignment(schema, q.value("x", nlohmann::json()), "x");
  const Assignment xp = assignment(schema, q.value("x_prime", nlohmann::json()), "x_prime");
  if (x.empty()) fail(ErrorCode::Validation, "query needs x");
  if (x.size() != xp.size()) fail(ErrorCode::Validation, "x and x_prime must assign the same variables");
  ContrastQuery cq;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].first != xp[i].first) fail(ErrorCode::Validation, "x and x_prime must assign the same variables");
    cq.x_vars.push_back(x[i].first);
    cq.x.push_back(x[i].second);
    cq.x_prime.push_back(xp[i].second);
  }
  cq.context = assignment(schema, q.value("context", nlohmann::json()), "context");
  cq.outcome = s.outcome;
  cq.validate(schema);
  std::optional<AdjustmentSet> adj;
  if (body.contains("adjustment") && !body["adjustment"].is_null()) {
    AdjustmentSet a;
    for (const auto& n : body["adjustment"].get<std::vector<std::string>>()) {
      if (!schema.find(n)) mismatch("adjustment names unknown variable " + n);
      a.members.insert(n);
    }
    adj = a;
  }
  const std::string mode = field<std::string>(body, "mode", "point");

  ojson j;
  j["kind"] = "scores";
  j["mode"] = mode;
  ojson qj;
  qj["x"] = to_json(x);
  qj["x_prime"] = to_json(xp);
  qj["context"] = to_json(cq.context);
  qj["outcome"] = s.outcome.name;
  qj["threshold"] = schema[s.outcome.var].domain[static_cast<std::size_t>(s.outcome.threshold)];
  j["query"] = qj;
  if (mode == "point" || mode == "naive") {
    ScoreResult r = mode == "point" ? point_scores(s.setting(), cq, adj, false) : naive_scores(*s.est, cq, false);
    const bool* defined = r.diagnostics.defined;
    if (!defined[0] && !defined[1] && !defined[2]) {
      fail(ErrorCode::ConditioningOnNull, "no score is defined: every conditioning event has zero mass");
    }
    ojson triple = to_json(r.triple);
    const char* keys[] = {"nec", "suf", "nesuf"};
    for (int i = 0; i < 3; ++i) {
      if (!defined[i]) triple[keys[i]] = nullptr;
    }
    j["triple"] = triple;
    j["diagnostics"] = to_json(r.diagnostics, schema);
  } else if (mode == "bounds") {
    BoundsResult r = score_bounds(s.setting(), cq, adj);
    j["bounds"] = to_json(r.bounds);
    j["terms"] = {{"do_x", r.do_x}, {"do_x_prime", r.do_xp}, {"p_o_x", r.p_ox},
                  {"p_o_x_prime", r.p_oxp}, {"p_not_o_x", r.p_opx}, {"p_not_o_x_prime", r.p_opxp}};
    j["diagnostics"] = to_json(r.diagnostics, schema);
  } else {
    fail(ErrorCode::Validation, "unknown mode '" + mode + "' (expected point, bounds or naive)");
  }
  j["estimator"] = estimator_json(s);
  return j;
}

ojson handle_explain(const Session& s, Level level, const nlohmann::json& body) {
  only_keys(body, {"score", "mode", "x_var", "context", "individual", "orders", "use_declared_order", "order_context"},
            "explain request");
  const Schema& schema = s.graph.schema();
  ExplainOptions opts;
  opts.kind = parse_score_kind(field<std::string>(body, "score", "nesuf"));
  opts.mode = parse_score_mode(field<std::string>(body, "mode", "point"));
  opts.orders = field<std::map<std::string, std::vector<std::string>>>(body, "orders", {});
  for (const auto& [name, order] : opts.orders) {
    if (!schema.find(name)) mismatch("orders name unknown variable " + name);
  }
  opts.use_declared_order = field<bool>(body, "use_declared_order", false);
  opts.order_context = assignment(schema, body.value("order_context", nlohmann::json()), "order_context");
  opts.workers = s.workers;

  ExplanationReport r;
  switch (level) {
    case Level::Global:
      r = global_explanations(s.setting(), s.outcome, opts);
      break;
    case Level::Contextual: {
      const std::string x_var = field<std::string>(body, "x_var", "");
      if (!x_var.empty() && !schema.find(x_var)) mismatch("x_var names unknown variable " + x_var);
      r = contextual_explanation(s.setting(), s.outcome, x_var,
                                 assignment(schema, body.value("context", nlohmann::json()), "context"), opts);
      break;
    }
    case Level::Local: {
      const std::vector<int> row = individual_row(s, body.value("individual", nlohmann::json()));
      std::vector<std::size_t> all(schema.size());
      for (std::size_t v = 0; v < all.size(); ++v) all[v] = v;
      r = local_explanation(s.setting(), s.outcome, s.bb.get(), row_labels(schema, row, all), opts);
      break;
    }
  }
  ojson j = to_json(r, schema);
  j["estimator"] = estimator_json(s);
  return j;
}

ojson handle_recourse(const Session& s, const nlohmann::json& body) {
  only_keys(body, {"individual", "config"}, "recourse request");
  const Schema& schema = s.graph.schema();
  const std::vector<int> row = individual_row(s, body.value("individual", nlohmann::json()));
  if (!body.contains("config")) fail(ErrorCode::Validation, "recourse request needs a config");
  RecourseConfig cfg = recourse_config_from_json(body["config"]);
  for (const auto& a : cfg.actionable) {
    if (!schema.find(a)) mismatch("actionable names unknown variable " + a);
  }
  RecourseProblem p = make_problem(s.graph, s.outcome, row, cfg);
  std::vector<std::string> actionable, context;
  for (std::size_t v : p.actionable) actionable.push_back(schema[v].name);
  for (std::size_t v : p.context) context.push_back(schema[v].name);
  LogitModel model = fit_logit(*s.data, s.outcome, actionable, context);
  SufficiencyConstraint c = sufficiency_constraint(p, model, *s.est);
  RecoursePlan plan = solve(p, c);
  ojson j;
  j["kind"] = "recourse";
  const ojson body_json = to_json(plan, p, c);
  for (const auto& [k, v] : body_json.items()) j[k] = v;
  j["individual"] = to_json(row_labels(schema, row, [&] {
    std::vector<std::size_t> all(schema.size());
    for (std::size_t v = 0; v < all.size(); ++v) all[v] = v;
    return all;
  }()));
  j["model"] = {{"iterations", model.iterations}, {"gradient_norm", model.gradient_norm}};
  return j;
}

ojson handle_whatif(const Session& s, const nlohmann::json& body) {
  only_keys(body, {"individual", "overrides"}, "what-if request");
  const Schema& schema = s.graph.schema();
  const std::vector<int> row = individual_row(s, body.value("individual", nlohmann::json()));
  std::vector<int> changed_row = row;
  std::vector<std::size_t> changed;
  for (const auto& [name, label] : assignment(schema, body.value("overrides", nlohmann::json()), "overrides")) {
    const std::size_t v = schema.index(name);
    if (v == s.outcome.var) fail(ErrorCode::Validation, "the outcome cannot be overridden");
    const int value = schema[v].index_of(label);
    if (value != row[v]) {
      changed_row[v] = value;
      changed.push_back(v);
    }
  }
  const auto label_of = [&](int value) { return schema[s.outcome.var].domain[static_cast<std::size_t>(value)]; };
  const bool positive = s.outcome.positive(row[s.outcome.var]);
  ojson j;
  j["kind"] = "whatif";
  j["changed"] = to_json(row_labels(schema, changed_row, changed));
  j["original_prediction"] = label_of(row[s.outcome.var]);
  if (s.bb) {
    changed_row[s.outcome.var] = s.bb->predict(changed_row);
    j["prediction"] = label_of(changed_row[s.outcome.var]);
  } else {
    j["prediction"] = changed.empty() ? ojson(label_of(row[s.outcome.var])) : ojson();
  }
  j["original_sufficiency"] = 0.0;
  ojson suf = 0.0;
  std::vector<std::string> notes;
  if (positive) {
    suf = ojson();
    notes.push_back("the individual already has a positive decision");
  } else if (!changed.empty()) {
    ContrastQuery q;
    for (std::size_t v : changed) {
      q.x_vars.push_back(schema[v].name);
      q.x.push_back(schema[v].domain[static_cast<std::size_t>(changed_row[v])]);
      q.x_prime.push_back(schema[v].domain[static_cast<std::size_t>(row[v])]);
    }
    const auto desc = descendant_mask(s.graph, changed);
    std::vector<std::size_t> k;
    for (std::size_t v = 0; v < schema.size(); ++v) {
      if (!desc[v] && v != s.outcome.var) k.push_back(v);
    }
    q.context = row_labels(schema, row, k);
    q.outcome = s.outcome;
    ScoreResult r = point_scores(s.setting(), q, std::nullopt, false);
    if (r.diagnostics.defined[1]) {
      suf = r.triple.suf;
    } else {
      suf = ojson();
      notes.push_back("sufficiency is undefined: the individual's cell has no matching rows");
    }
  }
  j["sufficiency"] = suf;
  j["delta"] = suf.is_number() ? ojson(suf.get<double>()) : ojson();
  j["notes"] = notes;
  return j;
}

ojson envelope(ojson result, double elapsed_ms, const std::string& session_id) {
  ojson j;
  j["result"] = std::move(result);
  j["meta"] = {{"elapsed_ms", elapsed_ms}, {"session", session_id}};
  return j;
}

ojson openapi() {
  auto op = [](const char* summary, const char* body) {
    ojson o;
    o["summary"] = summary;
    if (body[0]) o["requestBody"] = {{"description", body}};
    o["responses"] = {{"200", {{"description", "{\"result\": payload, \"meta\": {...}}"}}},
                      {"400", {{"description", "{\"code\", \"message\"}"}}},
                      {"404", {{"description", "unknown session"}}},
                      {"422", {{"description", "request does not fit the session schema"}}}};
    return o;
  };
  ojson paths;
  paths["/v1/sessions"]["post"] = op("Load a session", "{graph, dataset, blackbox, config}");
  paths["/v1/sessions/{id}/schema"]["get"] = op("Session schema", "");
  paths["/v1/sessions/{id}/scores"]["post"] = op("Explanation scores", "{query, mode: point|bounds|naive}");
  paths["/v1/sessions/{id}/explain/global"]["post"] = op("Global explanation", "{score, mode}");
  paths["/v1/sessions/{id}/explain/contextual"]["post"] = op("Contextual explanation", "{score, mode, x_var, context}");
  paths["/v1/sessions/{id}/explain/local"]["post"] = op("Local explanation", "{individual}");
  paths["/v1/sessions/{id}/recourse"]["post"] = op("Minimal-cost recourse", "{individual, config}");
  paths["/v1/sessions/{id}/whatif"]["post"] = op("What-if prediction", "{individual, overrides}");
  paths["/v1/openapi"]["get"] = op("This document", "");
  ojson j;
  j["openapi"] = "3.0.3";
  j["info"] = {{"title", "causex"}, {"version", "1.0.0"}};
  j["paths"] = paths;
  return j;
}

SessionStore::SessionStore(std::string base_dir, std::optional<std::string> persist_dir)
    : base_dir_(std::move(base_dir)), persist_dir_(std::move(persist_dir)) {
  if (!persist_dir_) return;
  fs::create_directories(*persist_dir_);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(*persist_dir_)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      const auto snap = nlohmann::json::parse(read_file(f));
      auto s = load_session(snap.at("spec"), base_dir_);
      s->id = snap.at("id").get<std::string>();
      s->created = snap.value("created", s->created);
      sessions_[s->id] = s;
    } catch (const std::exception& e) {
      std::cerr << "skipping session snapshot " << f << ": " << e.what() << "\n";
    }
  }
}

std::shared_ptr<Session> SessionStore::create(const nlohmann::json& spec) {
  auto s = load_session(spec, base_dir_);
  std::lock_guard<std::mutex> lock(mutex_);
  do {
    s->id = random_id();
  } while (sessions_.count(s->id));
  sessions_[s->id] = s;
  if (persist_dir_) {
    std::ofstream out(fs::path(*persist_dir_) / (s->id + ".json"));
    out << nlohmann::json{{"id", s->id}, {"created", s->created}, {"spec", s->spec}}.dump(2);
  }
  return s;
}

std::shared_ptr<const Session> SessionStore::get(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t SessionStore::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return sessions_.size();
}

int http_status(ErrorCode code) { return code == ErrorCode::SchemaMismatch ? 422 : 400; }

struct Server::Impl {
  ServerOptions opts;
  SessionStore store;
  httplib::Server http;
  std::thread thread;

  explicit Impl(ServerOptions o) : opts(std::move(o)), store(opts.data_dir, opts.persist_dir) {}

  static void send(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
    send(res, status, ojson{{"code", code}, {"message", msg}});
  }

  using Handler = std::function<ojson(const Session&, const nlohmann::json&)>;

  void session_route(const std::string& pattern, Handler h) {
    http.Post(pattern, [this, h](const httplib::Request& req, httplib::Response& res) {
      auto s = store.get(req.matches[1]);
      if (!s) return send_error(res, 404, "SESSION_NOT_FOUND", "no session " + std::string(req.matches[1]));
      const auto start = std::chrono::steady_clock::now();
      try {
        const nlohmann::json body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
        ojson result = h(*s, body);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (result.value("kind", "") == "recourse" && !result["feasible"].get<bool>()) {
          ojson e = envelope(std::move(result), ms, s->id);
          e["code"] = "INFEASIBLE";
          e["message"] = "no action plan reaches the requested sufficiency";
          return send(res, 400, e);
        }
        send(res, 200, envelope(std::move(result), ms, s->id));
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "VALIDATION", std::string("malformed JSON: ") + e.what());
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
      }
    });
  }

  void routes() {
    http.set_default_headers({{"Access-Control-Allow-Origin", opts.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
    http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http.Get("/v1/openapi", [](const httplib::Request&, httplib::Response& res) { send(res, 200, openapi()); });
    http.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        auto s = store.create(nlohmann::json::parse(req.body));
        send(res, 201, ojson{{"id", s->id}});
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, "VALIDATION", std::string("malformed JSON: ") + e.what());
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
      }
    });
    http.Get(R"(/v1/sessions/([^/]+)/schema)", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = store.get(req.matches[1]);
      if (!s) return send_error(res, 404, "SESSION_NOT_FOUND", "no session " + std::string(req.matches[1]));
      send(res, 200, envelope(handle_schema(*s), 0.0, s->id));
    });
    session_route(R"(/v1/sessions/([^/]+)/scores)", handle_scores);
    session_route(R"(/v1/sessions/([^/]+)/explain/global)",
                  [](const Session& s, const nlohmann::json& b) { return handle_explain(s, Level::Global, b); });
    session_route(R"(/v1/sessions/([^/]+)/explain/contextual)",
                  [](const Session& s, const nlohmann::json& b) { return handle_explain(s, Level::Contextual, b); });
    session_route(R"(/v1/sessions/([^/]+)/explain/local)",
                  [](const Session& s, const nlohmann::json& b) { return handle_explain(s, Level::Local, b); });
    session_route(R"(/v1/sessions/([^/]+)/recourse)", handle_recourse);
    session_route(R"(/v1/sessions/([^/]+)/whatif)", handle_whatif);
    if (opts.static_dir) http.set_mount_point("/", *opts.static_dir);
  }
};

Server::Server(ServerOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) { impl_->routes(); }

Server::~Server() { stop(); }

int Server::start() {
  auto& o = impl_->opts;
  port_ = o.port == 0 ? impl_->http.bind_to_any_port(o.host) : (impl_->http.bind_to_port(o.host, o.port) ? o.port : -1);
  if (port_ < 0) fail(ErrorCode::Validation, "cannot bind " + o.host + ":" + std::to_string(o.port));
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return port_;
}

void Server::run() {
  auto& o = impl_->opts;
  port_ = o.port == 0 ? impl_->http.bind_to_any_port(o.host) : (impl_->http.bind_to_port(o.host, o.port) ? o.port : -1);
  if (port_ < 0) fail(ErrorCode::Validation, "cannot bind " + o.host + ":" + std::to_string(o.port));
  std::cerr << "listening on http://" << o.host << ":" << port_ << "/v1\n";
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace causex::service
