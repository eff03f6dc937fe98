#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "causex/blackbox.hpp"
#include "causex/data.hpp"
#include "causex/error.hpp"
#include "causex/explain.hpp"
#include "causex/graph.hpp"
#include "causex/scores.hpp"

namespace causex::service {

using ojson = nlohmann::ordered_json;

/// A loaded bundle: graph, labelled dataset, optional black box and
/// estimator configuration. Immutable after load.
struct Session {
  std::string id;
  std::string created;
  CausalGraph graph;
  std::shared_ptr<const Dataset> data;  // outcome column holds the decisions
  std::shared_ptr<BlackBox> bb;         // null when decisions come from the data
  OutcomeSpec outcome;
  std::shared_ptr<const Estimator> est;
  std::size_t workers = 1;
  nlohmann::json spec;  // the load request, kept for persistence

  ScoreSetting setting() const;
};

/// Loads a session from {"graph", "dataset", "blackbox", "config"}. Each of
/// graph, dataset and blackbox is inline JSON or {"path": file}; the dataset
/// may also be {"csv": text} or {"scm": ..., "exhaustive": true} or
/// {"scm": ..., "sample": n, "seed": s}. Relative paths resolve against
/// `base_dir`.
std::shared_ptr<Session> load_session(const nlohmann::json& spec, const std::string& base_dir = ".");

// Request handlers shared by the CLI and the HTTP API. Each returns the
// result payload; timing lives in the envelope added by the caller.
ojson handle_schema(const Session& s);
/// {"query": {"x": {...}, "x_prime": {...}, "context": {...}}, "mode": "point"|"bounds"|"naive",
///  "adjustment": [...]}
ojson handle_scores(const Session& s, const nlohmann::json& body);
/// {"score": "nec"|"suf"|"nesuf", "mode": "point"|"bounds", "x_var", "context", "individual",
///  "orders", "use_declared_order", "order_context"}
ojson handle_explain(const Session& s, Level level, const nlohmann::json& body);
/// {"individual": {...}, "config": {"actionable", "alpha", "costs", "timeout_s"}}; an infeasible
/// plan is returned with "feasible": false.
ojson handle_recourse(const Session& s, const nlohmann::json& body);
/// {"individual": {...}, "overrides": {...}}
ojson handle_whatif(const Session& s, const nlohmann::json& body);

/// {"result": payload, "meta": {"elapsed_ms": ..., "session": id}}
ojson envelope(ojson result, double elapsed_ms, const std::string& session_id);

/// The OpenAPI description served at /v1/openapi.
ojson openapi();

/// In-memory sessions with optional JSON snapshots in `persist_dir`.
class SessionStore {
 public:
  explicit SessionStore(std::string base_dir = ".", std::optional<std::string> persist_dir = std::nullopt);

  std::shared_ptr<Session> create(const nlohmann::json& spec);
  std::shared_ptr<const Session> get(const std::string& id) const;
  std::size_t size() const;

 private:
  std::string base_dir_;
  std::optional<std::string> persist_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string data_dir = ".";
  std::optional<std::string> persist_dir;
  std::string cors_origin = "*";
  std::optional<std::string> static_dir;  // UI assets served at /
};

/// HTTP/1.1 JSON API under /v1.
class Server {
 public:
  explicit Server(ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// HTTP status and machine-readable code for an engine error.
int http_status(ErrorCode code);

}  // namespace causex::service
