#include "causex/blackbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "causex/error.hpp"
#include "causex/expr.hpp"
#include "causex/oracle.hpp"

namespace causex {

namespace {

std::vector<std::size_t> resolve_inputs(const Schema& s, const std::vector<std::string>& inputs,
                                        std::size_t outcome_var) {
  std::vector<std::size_t> out;
  std::set<std::string> seen;
  for (const auto& name : inputs) {
    if (!seen.insert(name).second) fail(ErrorCode::Validation, "black-box input listed twice: " + name);
    std::size_t v = s.index(name);
    if (v == outcome_var) fail(ErrorCode::Validation, "the outcome cannot be a black-box input");
    out.push_back(v);
  }
  return out;
}

// Index of `out` in the outcome domain, matching numerically when both sides
// read as numbers ("1" == "1.0").
int match_label(const Variable& v, const Value& out) {
  for (std::size_t i = 0; i < v.domain.size(); ++i) {
    if (Value::from_label(v.domain[i]) == out) return static_cast<int>(i);
  }
  return -1;
}

class ExprBackend : public Backend {
 public:
  ExprBackend(const Schema& s, const std::vector<std::string>& inputs, std::size_t outcome_var,
              const std::string& source)
      : outcome_(s[outcome_var]), names_(inputs), expr_(parse(source)) {
    std::set<std::string> bound(inputs.begin(), inputs.end());
    check_bound(*expr_, bound, "model expression");
    for (const auto& name : inputs) {
      const Variable& v = s.variable(name);
      std::vector<Value> vals;
      for (const auto& l : v.domain) vals.push_back(Value::from_label(l, v.ordered ? &v.domain : nullptr));
      values_.push_back(std::move(vals));
    }
  }

  std::vector<int> predict(const std::vector<std::vector<int>>& features) override {
    std::vector<int> out;
    out.reserve(features.size());
    Env env;
    for (std::size_t r = 0; r < features.size(); ++r) {
      for (std::size_t i = 0; i < names_.size(); ++i) {
        env[names_[i]] = values_[i][static_cast<std::size_t>(features[r][i])];
      }
      Value v;
      try {
        v = evaluate(*expr_, env);
      } catch (const Error& e) {
        fail(ErrorCode::Backend, "row " + std::to_string(r) + ": " + e.what());
      }
      int idx = match_label(outcome_, v);
      if (idx < 0) {
        fail(ErrorCode::Backend, "row " + std::to_string(r) + ": model output '" + v.to_string() +
                                     "' is not in the domain of " + outcome_.name);
      }
      out.push_back(idx);
    }
    return out;
  }

  std::string kind() const override { return "expr"; }

 private:
  Variable outcome_;
  std::vector<std::string> names_;
  std::vector<std::vector<Value>> values_;
  ExprPtr expr_;
};

class LogisticBackend : public Backend {
 public:
  LogisticBackend(const Schema& s, const std::vector<std::string>& inputs, std::size_t outcome_var,
                  const LogisticSpec& spec)
      : bias_(spec.bias), cutoff_(spec.cutoff) {
    const Variable& o = s[outcome_var];
    positive_ = o.index_of(spec.positive);
    negative_ = o.index_of(spec.negative);
    if (!(cutoff_ > 0.0 && cutoff_ < 1.0)) fail(ErrorCode::Validation, "logistic cutoff must lie in (0,1)");
    for (const auto& [name, w] : spec.weights) {
      if (std::find(inputs.begin(), inputs.end(), name) == inputs.end()) {
        fail(ErrorCode::Validation, "logistic weight for non-input " + name);
      }
    }
    for (const auto& name : inputs) {
      const Variable& v = s.variable(name);
      std::vector<double> contrib(v.domain.size(), 0.0);
      auto it = spec.weights.find(name);
      if (it != spec.weights.end()) {
        if (const double* coef = std::get_if<double>(&it->second)) {
          for (std::size_t i = 0; i < v.domain.size(); ++i) {
            Value x = Value::from_label(v.domain[i]);
            contrib[i] = *coef * (x.is_number() ? x.number : static_cast<double>(i));
          }
        } else {
          for (const auto& [label, w] : std::get<std::map<std::string, double>>(it->second)) {
            contrib[static_cast<std::size_t>(v.index_of(label))] = w;
          }
        }
      }
      table_.push_back(std::move(contrib));
    }
  }

  std::vector<int> predict(const std::vector<std::vector<int>>& features) override {
    std::vector<int> out;
    out.reserve(features.size());
    for (const auto& f : features) {
      double z = bias_;
      for (std::size_t i = 0; i < f.size(); ++i) z += table_[i][static_cast<std::size_t>(f[i])];
      double p = 1.0 / (1.0 + std::exp(-z));
      out.push_back(p >= cutoff_ ? positive_ : negative_);
    }
    return out;
  }

  std::string kind() const override { return "logistic"; }

 private:
  double bias_;
  double cutoff_;
  int positive_ = 0;
  int negative_ = 0;
  std::vector<std::vector<double>> table_;
};

class ColumnBackend : public Backend {
 public:
  ColumnBackend(const Dataset& d, const std::vector<std::size_t>& input_idx, std::size_t outcome_var) {
    const auto& preds = d.predictions();
    for (std::size_t r = 0; r < d.rows(); ++r) {
      std::vector<int> key;
      for (std::size_t v : input_idx) key.push_back(d.at(r, v));
      int y = preds ? (*preds)[r] : d.at(r, outcome_var);
      auto [it, inserted] = table_.emplace(key, y);
      if (!inserted && it->second != y) {
        fail(ErrorCode::Validation, "prediction column is not a function of the inputs (row " +
                                        std::to_string(r + 2) + ")");
      }
    }
  }

  std::vector<int> predict(const std::vector<std::vector<int>>& features) override {
    std::vector<int> out;
    out.reserve(features.size());
    for (std::size_t r = 0; r < features.size(); ++r) {
      auto it = table_.find(features[r]);
      if (it == table_.end()) {
        fail(ErrorCode::Backend, "row " + std::to_string(r) + ": feature vector has no stored prediction");
      }
      out.push_back(it->second);
    }
    return out;
  }

  std::string kind() const override { return "column"; }

 private:
  std::map<std::vector<int>, int> table_;
};

class FunctionBackend : public Backend {
 public:
  FunctionBackend(std::function<int(const std::vector<int>&)> fn, std::string kind)
      : fn_(std::move(fn)), kind_(std::move(kind)) {}

  std::vector<int> predict(const std::vector<std::vector<int>>& features) override {
    std::vector<int> out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(fn_(f));
    return out;
  }

  std::string kind() const override { return kind_; }

 private:
  std::function<int(const std::vector<int>&)> fn_;
  std::string kind_;
};

class ProcessBackend : public Backend {
 public:
  ProcessBackend(const Schema& s, const std::vector<std::string>& inputs, std::size_t outcome_var,
                 std::vector<std::string> command, std::chrono::milliseconds timeout)
      : outcome_(s[outcome_var]), names_(inputs), command_(std::move(command)), timeout_(timeout) {
    if (command_.empty()) fail(ErrorCode::Validation, "process backend needs a command");
    for (const auto& name : inputs) labels_.push_back(s.variable(name).domain);
  }

  ~ProcessBackend() override { stop(); }

  std::vector<int> predict(const std::vector<std::vector<int>>& features) override {
    std::lock_guard<std::mutex> lock(mutex_);
    if (pid_ <= 0) start();
    try {
      return exchange(features);
    } catch (...) {
      stop();
      throw;
    }
  }

  std::string kind() const override { return "process"; }

 private:
  void start() {
    struct sigaction ign {};
    ign.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ign, nullptr);
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      fail(ErrorCode::Backend, std::string("cannot create pipes: ") + std::strerror(errno));
    }
    pid_t pid = fork();
    if (pid < 0) fail(ErrorCode::Backend, std::string("cannot fork: ") + std::strerror(errno));
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> argv;
      for (auto& a : command_) argv.push_back(a.data());
      argv.push_back(nullptr);
      execvp(argv[0], argv.data());
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    pid_ = pid;
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    fcntl(write_fd_, F_SETFL, fcntl(write_fd_, F_GETFL) | O_NONBLOCK);
    buffer_.clear();
  }

  void stop() {
    if (write_fd_ >= 0) close(write_fd_);
    if (read_fd_ >= 0) close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      int status = 0;
      if (waitpid(pid_, &status, WNOHANG) == 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, &status, 0);
      }
    }
    pid_ = -1;
  }

  std::vector<int> exchange(const std::vector<std::vector<int>>& features) {
    std::string out;
    std::map<long long, std::size_t> pending;  // request id -> row
    for (std::size_t r = 0; r < features.size(); ++r) {
      nlohmann::json f = nlohmann::json::object();
      for (std::size_t i = 0; i < names_.size(); ++i) {
        f[names_[i]] = labels_[i][static_cast<std::size_t>(features[r][i])];
      }
      long long id = next_id_++;
      pending[id] = r;
      out += nlohmann::json{{"id", id}, {"features", f}}.dump() + "\n";
    }
    std::vector<int> result(features.size(), -1);
    std::size_t written = 0;
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    auto first_pending = [&]() { return std::to_string(pending.begin()->second); };
    while (!pending.empty()) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) fail(ErrorCode::Backend, "row " + first_pending() + ": black-box process timed out");
      pollfd fds[2] = {{read_fd_, POLLIN, 0}, {write_fd_, POLLOUT, 0}};
      nfds_t n = written < out.size() ? 2 : 1;
      int rc = poll(fds, n, static_cast<int>(std::min<long long>(left.count(), 1000)));
      if (rc < 0 && errno != EINTR) fail(ErrorCode::Backend, std::string("poll failed: ") + std::strerror(errno));
      if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        ssize_t k = write(write_fd_, out.data() + written, out.size() - written);
        if (k < 0 && errno != EAGAIN && errno != EINTR) {
          fail(ErrorCode::Backend, "row " + first_pending() + ": black-box process closed its input");
        }
        if (k > 0) written += static_cast<std::size_t>(k);
      }
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        ssize_t k = read(read_fd_, buf, sizeof buf);
        if (k == 0) fail(ErrorCode::Backend, "row " + first_pending() + ": black-box process exited");
        if (k < 0) {
          if (errno == EINTR || errno == EAGAIN) continue;
          fail(ErrorCode::Backend, std::string("read failed: ") + std::strerror(errno));
        }
        buffer_.append(buf, static_cast<std::size_t>(k));
        std::size_t nl;
        while ((nl = buffer_.find('\n')) != std::string::npos) {
          std::string line = buffer_.substr(0, nl);
          buffer_.erase(0, nl + 1);
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          accept_reply(line, pending, result);
        }
      }
    }
    return result;
  }

  void accept_reply(const std::string& line, std::map<long long, std::size_t>& pending,
                    std::vector<int>& result) {
    const std::string row0 = std::to_string(pending.begin()->second);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::Backend, "row " + row0 + ": malformed reply '" + line + "'");
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer() || !j.contains("output")) {
      fail(ErrorCode::Backend, "row " + row0 + ": reply lacks id or output");
    }
    auto it = pending.find(j["id"].get<long long>());
    if (it == pending.end()) fail(ErrorCode::Backend, "row " + row0 + ": reply with unknown id");
    const std::size_t row = it->second;
    const auto& o = j["output"];
    std::string label;
    if (o.is_string()) {
      label = o.get<std::string>();
    } else if (o.is_number()) {
      label = o.dump();
    } else {
      fail(ErrorCode::Backend, "row " + std::to_string(row) + ": output must be a string or number");
    }
    int idx = outcome_.find(label);
    if (idx < 0) idx = match_label(outcome_, Value::from_label(label));
    if (idx < 0) {
      fail(ErrorCode::Backend, "row " + std::to_string(row) + ": output '" + label +
                                   "' is not in the domain of " + outcome_.name);
    }
    result[row] = idx;
    pending.erase(it);
  }

  Variable outcome_;
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> labels_;
  std::vector<std::string> command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
  long long next_id_ = 0;
};

OutcomeSpec outcome_from_json(const nlohmann::json& j, const Schema& s, const std::string& name) {
  const Variable& o = s.variable(name);
  std::string threshold = o.domain.back();
  std::optional<std::vector<std::string>> order;
  if (j.contains("order")) order = j["order"].get<std::vector<std::string>>();
  if (j.contains("threshold")) {
    threshold = j["threshold"].get<std::string>();
  } else if (order) {
    threshold = order->front();
  }
  return OutcomeSpec::make(s, name, threshold, order);
}

}  // namespace

BlackBox::BlackBox(const Schema& schema, std::vector<std::string> inputs, OutcomeSpec outcome,
                   std::shared_ptr<Backend> backend)
    : schema_(schema), inputs_(std::move(inputs)), outcome_(std::move(outcome)), backend_(std::move(backend)) {
  if (!backend_) fail(ErrorCode::Validation, "black box needs a backend");
  if (outcome_.var >= schema_.size() || schema_[outcome_.var].name != outcome_.name) {
    fail(ErrorCode::Validation, "outcome does not belong to the schema");
  }
  input_idx_ = resolve_inputs(schema_, inputs_, outcome_.var);
}

std::vector<int> BlackBox::run(const std::vector<std::vector<int>>& features) const {
  std::vector<int> out = backend_->predict(features);
  if (out.size() != features.size()) fail(ErrorCode::Backend, "backend returned a wrong number of predictions");
  const std::size_t n = schema_[outcome_.var].domain.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (out[r] < 0 || static_cast<std::size_t>(out[r]) >= n) {
      fail(ErrorCode::Backend, "row " + std::to_string(r) + ": prediction outside the outcome domain");
    }
  }
  return out;
}

std::vector<int> BlackBox::predict_batch(const std::vector<std::vector<int>>& rows) const {
  std::vector<std::vector<int>> keys(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != schema_.size()) fail(ErrorCode::Validation, "row " + std::to_string(r) + " is not a full assignment");
    for (std::size_t v : input_idx_) {
      const int x = rows[r][v];
      if (x < 0 || static_cast<std::size_t>(x) >= schema_[v].domain.size()) {
        fail(ErrorCode::Validation, "row " + std::to_string(r) + ": value out of domain for " + schema_[v].name);
      }
      keys[r].push_back(x);
    }
  }
  std::vector<int> out(rows.size(), -1);
  std::vector<std::vector<int>> missing;
  std::vector<std::size_t> missing_rows;
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    std::map<std::vector<int>, std::size_t> queued;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto it = cache_.find(keys[r]);
      if (it != cache_.end()) {
        out[r] = it->second;
      } else if (!queued.count(keys[r])) {
        queued[keys[r]] = missing.size();
        missing.push_back(keys[r]);
        missing_rows.push_back(r);
      }
    }
  }
  if (!missing.empty()) {
    std::vector<int> fresh;
    try {
      fresh = run(missing);
    } catch (const Error& e) {
      // Rewrite "row i" of the distinct batch into the caller's row index.
      std::string msg = e.what();
      if (msg.rfind("row ", 0) == 0) {
        std::size_t end = msg.find(':');
        std::size_t i = std::stoul(msg.substr(4, end - 4));
        if (i < missing_rows.size()) msg = "row " + std::to_string(missing_rows[i]) + msg.substr(end);
      }
      fail(e.code(), msg);
    }
    std::lock_guard<std::mutex> lock(cache_mutex_);
    for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i], fresh[i]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (out[r] < 0) out[r] = cache_.at(keys[r]);
    }
  }
  return out;
}

int BlackBox::predict(std::span<const int> row) const {
  return predict_batch({std::vector<int>(row.begin(), row.end())}).front();
}

int BlackBox::predict_features(const std::vector<int>& features) const {
  if (features.size() != input_idx_.size()) fail(ErrorCode::Validation, "feature vector has the wrong length");
  std::vector<int> row(schema_.size(), 0);
  for (std::size_t i = 0; i < input_idx_.size(); ++i) row[input_idx_[i]] = features[i];
  return predict(row);
}

std::size_t BlackBox::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  return cache_.size();
}

std::shared_ptr<Backend> expr_backend(const Schema& s, const std::vector<std::string>& inputs,
                                      std::size_t outcome_var, const std::string& source) {
  return std::make_shared<ExprBackend>(s, inputs, outcome_var, source);
}

std::shared_ptr<Backend> logistic_backend(const Schema& s, const std::vector<std::string>& inputs,
                                          std::size_t outcome_var, const LogisticSpec& spec) {
  return std::make_shared<LogisticBackend>(s, inputs, outcome_var, spec);
}

std::shared_ptr<Backend> column_backend(const Dataset& d, const std::vector<std::string>& inputs,
                                        std::size_t outcome_var) {
  return std::make_shared<ColumnBackend>(d, resolve_inputs(d.schema(), inputs, outcome_var), outcome_var);
}

std::shared_ptr<Backend> process_backend(const Schema& s, const std::vector<std::string>& inputs,
                                         std::size_t outcome_var, std::vector<std::string> command,
                                         std::chrono::milliseconds timeout) {
  return std::make_shared<ProcessBackend>(s, inputs, outcome_var, std::move(command), timeout);
}

std::shared_ptr<Backend> function_backend(std::function<int(const std::vector<int>&)> fn, std::string kind) {
  return std::make_shared<FunctionBackend>(std::move(fn), std::move(kind));
}

std::shared_ptr<BlackBox> blackbox_from_json(const nlohmann::json& j, const Schema& s, const Dataset* data) {
  static const std::set<std::string> known = {"kind", "output", "inputs", "threshold", "order", "expr",
                                              "bias", "weights", "cutoff", "positive", "negative",
                                              "command", "timeout_s"};
  if (!j.is_object()) fail(ErrorCode::Validation, "model file must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (!known.count(key)) fail(ErrorCode::Validation, "unknown model key '" + key + "'");
  }
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const std::string output = j.at("output").get<std::string>();
    const std::size_t ov = s.index(output);
    std::vector<std::string> inputs;
    if (j.contains("inputs")) {
      inputs = j["inputs"].get<std::vector<std::string>>();
    } else {
      for (const auto& v : s.variables()) {
        if (v.name != output) inputs.push_back(v.name);
      }
    }
    OutcomeSpec outcome = outcome_from_json(j, s, output);
    std::shared_ptr<Backend> backend;
    if (kind == "expr") {
      backend = expr_backend(s, inputs, ov, j.at("expr").get<std::string>());
    } else if (kind == "logistic") {
      LogisticSpec spec;
      spec.bias = j.value("bias", 0.0);
      spec.cutoff = j.value("cutoff", 0.5);
      const Variable& o = s[ov];
      spec.positive = j.value("positive", o.domain[static_cast<std::size_t>(outcome.order.front())]);
      spec.negative = j.value("negative", o.domain[static_cast<std::size_t>(outcome.order.back())]);
      if (j.contains("weights")) {
        for (const auto& [name, w] : j["weights"].items()) {
          if (w.is_number()) {
            spec.weights[name] = w.get<double>();
          } else {
            spec.weights[name] = w.get<std::map<std::string, double>>();
          }
        }
      }
      backend = logistic_backend(s, inputs, ov, spec);
    } else if (kind == "column") {
      if (!data) fail(ErrorCode::Validation, "column model needs a dataset");
      backend = column_backend(*data, inputs, ov);
    } else if (kind == "process") {
      auto cmd = j.at("command").get<std::vector<std::string>>();
      auto ms = std::chrono::milliseconds(static_cast<long long>(j.value("timeout_s", 30.0) * 1000.0));
      backend = process_backend(s, inputs, ov, std::move(cmd), ms);
    } else {
      fail(ErrorCode::Validation, "unknown model kind '" + kind + "'");
    }
    return std::make_shared<BlackBox>(s, std::move(inputs), std::move(outcome), std::move(backend));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("malformed model file: ") + e.what());
  }
}

std::shared_ptr<BlackBox> load_blackbox(const std::string& path, const Schema& s, const Dataset* data) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Validation, "cannot open model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Validation, std::string("malformed model JSON: ") + e.what());
  }
  return blackbox_from_json(j, s, data);
}

Dataset label_dataset(const BlackBox& b, const Dataset& d) {
  if (!(d.schema() == b.schema())) fail(ErrorCode::Validation, "dataset schema differs from the model schema");
  std::vector<std::vector<int>> rows(d.rows());
  for (std::size_t r = 0; r < d.rows(); ++r) rows[r].assign(d.row(r).begin(), d.row(r).end());
  return d.with_column(b.outcome().var, b.predict_batch(rows));
}

std::vector<int> infer_value_order(const Estimator& est, const CausalGraph& g, const OutcomeSpec& outcome,
                                   const std::optional<NameSet>& inputs, const std::string& x_var,
                                   const std::vector<std::pair<std::string, std::string>>& context,
                                   bool use_declared) {
  const Schema& s = g.schema();
  const std::size_t xv = s.index(x_var);
  const std::size_t n = s[xv].domain.size();
  std::vector<int> declared(n);
  for (std::size_t i = 0; i < n; ++i) declared[i] = static_cast<int>(n - 1 - i);
  if (use_declared) return declared;

  Event k = Event::point(s, context);
  NameSet ks;
  for (const auto& [name, value] : context) ks.insert(name);
  const NameSet xs{x_var};
  AdjustmentSet adj = default_adjustment_set(g, xs, inputs ? *inputs : input_proxy(g, xs, ks));
  adj.members.erase(outcome.name);
  for (const auto& name : ks) adj.members.erase(name);
  NameSet cond = adj.members;
  cond.insert(ks.begin(), ks.end());
  const NameSet targets = inputs ? *inputs : input_proxy(g, xs, cond);
  Event pos = outcome.positive_event(s);

  std::vector<std::optional<double>> p(n);
  for (std::size_t v = 0; v < n; ++v) {
    try {
      p[v] = do_prob(est, g, pos, Event::point_idx(s, {{xv, static_cast<int>(v)}}), k, adj, targets).value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConditioningOnNull) throw;
    }
  }
  std::vector<int> order = declared;
  if (std::any_of(p.begin(), p.end(), [](const auto& v) { return !v.has_value(); })) return order;
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
    return *p[static_cast<std::size_t>(a)] > *p[static_cast<std::size_t>(c)] + 1e-12;
  });
  return order;
}

std::vector<int> infer_value_order(const BlackBox& b, const Estimator& est, const CausalGraph& g,
                                   const std::string& x_var,
                                   const std::vector<std::pair<std::string, std::string>>& context,
                                   bool use_declared) {
  return infer_value_order(est, g, b.outcome(), b.input_set(), x_var, context, use_declared);
}

Scm compose(const Scm& m, const BlackBox& b) {
  if (!(m.schema() == b.schema())) fail(ErrorCode::Validation, "model schema differs from the SCM schema");
  const BlackBox* bb = &b;
  auto fn = [bb](std::span<const int> endo, std::span<const int>) {
    return bb->predict_features(std::vector<int>(endo.begin(), endo.end()));
  };
  return m.with_mechanism(b.outcome().var, b.input_indices(), fn);
}

double monotonicity_violation(const BlackBox& b, const Scm& m, const std::vector<std::string>& x_vars,
                              const std::vector<std::string>& x, const std::vector<std::string>& x_prime,
                              const std::vector<std::pair<std::string, std::string>>& context) {
  Scm composed = compose(m, b);
  const Schema& s = m.schema();
  std::vector<std::pair<std::string, std::string>> base;
  for (std::size_t i = 0; i < x_vars.size(); ++i) base.emplace_back(x_vars[i], x_prime[i]);
  Event evidence = b.outcome().positive_event(s) & Event::point(s, base) & Event::point(s, context);
  CfQuery q{{PotentialEvent{intervention_of(s, x_vars, x), b.outcome().negative_event(s)}}, evidence};
  return counterfactual_prob(composed, q);
}

}  // namespace causex
