#include "causex/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace causex {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int kBarWidth = 30;

std::string num(const ojson& v) {
  if (!v.is_number()) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v.get<double>();
  return os.str();
}

std::string bar(double v, char c = '#') {
  const int n = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * kBarWidth));
  return std::string(static_cast<std::size_t>(n), c);
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

std::string lpad(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

std::string assignment_text(const ojson& a) {
  if (!a.is_object() || a.empty()) return "(none)";
  std::string out;
  for (const auto& [k, v] : a.items()) {
    if (!out.empty()) out += ", ";
    out += k + "=" + v.get<std::string>();
  }
  return out;
}

std::size_t name_width(const ojson& entries) {
  std::size_t w = 9;
  for (const auto& e : entries) w = std::max(w, e["attribute"].get<std::string>().size());
  return w + 2;
}

ojson contribution_json(const Contribution& c) {
  ojson j;
  j["value"] = c.value;
  j["from"] = c.from.empty() ? ojson() : ojson(c.from);
  j["to"] = c.to.empty() ? ojson() : ojson(c.to);
  j["extreme"] = c.extreme;
  j["defined"] = c.defined;
  return j;
}

void render_scores(std::ostringstream& os, const ojson& p) {
  const auto& q = p["query"];
  os << "query: " << assignment_text(q["x"]) << " vs " << assignment_text(q["x_prime"]) << "\n";
  os << "context: " << assignment_text(q["context"]) << "\n";
  os << "outcome: " << q["outcome"].get<std::string>() << " >= " << q["threshold"].get<std::string>() << "\n";
  os << "mode: " << p["mode"].get<std::string>() << "\n\n";
  for (const char* k : {"nec", "suf", "nesuf"}) {
    os << pad(k, 8);
    if (p.contains("bounds")) {
      const auto& b = p["bounds"][k];
      os << "[" << num(b["lower"]) << ", " << num(b["upper"]) << "]\n";
    } else {
      const auto& v = p["triple"][k];
      os << num(v) << "  " << (v.is_number() ? bar(v.get<double>()) : "undefined") << "\n";
    }
  }
  if (p.contains("diagnostics")) {
    const auto& d = p["diagnostics"];
    os << "\nadjustment: {";
    bool first = true;
    for (const auto& a : d["adjustment_set"]) {
      os << (first ? "" : ", ") << a.get<std::string>();
      first = false;
    }
    os << "}\n";
    for (const auto& n : d["notes"]) os << "note: " << n.get<std::string>() << "\n";
  }
}

void render_explanation(std::ostringstream& os, const ojson& p) {
  const std::string level = p["level"].get<std::string>();
  os << level << " explanation (" << p["score"].get<std::string>() << ", " << p["mode"].get<std::string>() << ")\n";
  os << "outcome: " << p["outcome"].get<std::string>() << " >= " << p["threshold"].get<std::string>() << "\n";
  const auto& entries = p["entries"];
  const std::size_t w = name_width(entries);
  if (level == "local") {
    os << "individual: " << assignment_text(p["individual"]) << "\n";
    os << "decision: " << (p["positive_outcome"].get<bool>() ? "positive" : "negative") << "\n\n";
    os << pad("attribute", w) << lpad("negative", kBarWidth + 8) << " | " << "positive\n";
    for (const auto& e : entries) {
      os << pad(e["attribute"].get<std::string>() + "=" + e["value"].get<std::string>(), w);
      if (e.contains("error")) {
        os << "error: " << e["error"].get<std::string>() << "\n";
        continue;
      }
      const double neg = e["negative"]["value"].get<double>();
      const double pos = e["positive"]["value"].get<double>();
      os << lpad(num(e["negative"]["value"]) + " " + bar(neg, '-'), kBarWidth + 8) << " | " << bar(pos, '+') << " "
         << num(e["positive"]["value"]) << "\n";
    }
    return;
  }
  os << "context: " << assignment_text(p["context"]) << "\n\n";
  for (const auto& e : entries) {
    os << pad(e["attribute"].get<std::string>(), w);
    if (e.contains("error")) {
      os << "error: " << e["error"].get<std::string>() << "\n";
      continue;
    }
    os << num(e["score"]) << "  " << pad(bar(e["score"].get<double>()), kBarWidth) << "  ";
    if (e["x"].is_string()) os << e["x"].get<std::string>() << " vs " << e["x_prime"].get<std::string>();
    os << "\n";
  }
}

void render_recourse(std::ostringstream& os, const ojson& p) {
  if (!p["feasible"].get<bool>()) {
    os << "infeasible: no action plan reaches alpha = " << num(p["alpha"]) << "\n";
    os << "threshold: " << num(p["threshold"]) << " (" << p["threshold_source"].get<std::string>() << ")\n";
    return;
  }
  os << "plan cost: " << num(p["cost"]) << "\n";
  os << "alpha: " << num(p["alpha"]) << ", threshold: " << num(p["threshold"]) << " ("
     << p["threshold_source"].get<std::string>() << ")\n";
  os << "surrogate sufficiency: " << num(p["surrogate_sufficiency"]) << "\n";
  os << "constraints: " << p["constraint_count"].get<std::size_t>() << "\n\n";
  if (p["changes"].empty()) os << "no action needed\n";
  for (const auto& s : p["changes"]) {
    os << "[ ] " << s["attribute"].get<std::string>() << ": " << s["from"].get<std::string>() << " -> "
       << s["to"].get<std::string>() << "  (cost " << num(s["cost"]) << ")\n";
  }
}

void render_whatif(std::ostringstream& os, const ojson& p) {
  os << "changes: " << assignment_text(p["changed"]) << "\n";
  os << "prediction: " << (p["original_prediction"].is_string() ? p["original_prediction"].get<std::string>() : "-")
     << " -> " << (p["prediction"].is_string() ? p["prediction"].get<std::string>() : "-") << "\n";
  os << "sufficiency: " << num(p["original_sufficiency"]) << " -> " << num(p["sufficiency"]) << " (delta "
     << num(p["delta"]) << ")\n";
}

void render_schema(std::ostringstream& os, const ojson& p) {
  for (const auto& v : p["variables"]) {
    os << pad(v["name"].get<std::string>(), 16) << "{";
    bool first = true;
    for (const auto& d : v["domain"]) {
      os << (first ? "" : ", ") << d.get<std::string>();
      first = false;
    }
    os << "}" << (v.value("ordered", false) ? " ordered" : "") << "\n";
  }
}

}  // namespace

ojson to_json(const Assignment& a) {
  ojson j = ojson::object();
  for (const auto& [k, v] : a) j[k] = v;
  return j;
}

ojson to_json(const ExplanationReport& r, const Schema& s) {
  ojson j;
  j["kind"] = "explanation";
  j["level"] = level_name(r.level);
  j["score"] = score_kind_name(r.kind);
  j["mode"] = score_mode_name(r.mode);
  j["outcome"] = r.outcome;
  j["threshold"] = r.threshold;
  j["context"] = to_json(r.context);
  if (r.level == Level::Local) {
    j["individual"] = to_json(r.individual);
    j["positive_outcome"] = r.positive_outcome.value_or(false);
  }
  ojson orders = ojson::object();
  for (const auto& v : s.variables()) {
    auto it = r.orders.find(v.name);
    if (it != r.orders.end()) orders[v.name] = it->second;
  }
  j["orders"] = orders;
  j["ranking"] = r.entries.empty() ? std::vector<std::string>{} : rank_attributes(r, s);
  ojson entries = ojson::array();
  for (const auto& e : r.entries) {
    ojson x;
    x["attribute"] = e.attribute;
    x["score"] = e.score;
    if (r.level == Level::Local) {
      x["value"] = e.value;
      x["context"] = to_json(e.context);
      if (e.positive) x["positive"] = contribution_json(*e.positive);
      if (e.negative) x["negative"] = contribution_json(*e.negative);
    } else {
      x["x"] = e.x.empty() ? ojson() : ojson(e.x);
      x["x_prime"] = e.x_prime.empty() ? ojson() : ojson(e.x_prime);
      if (e.triple) x["triple"] = to_json(*e.triple);
      if (e.bounds) x["bounds"] = to_json(*e.bounds);
      if (e.diagnostics) x["diagnostics"] = to_json(*e.diagnostics, s);
    }
    if (e.error) x["error"] = *e.error;
    x["skipped"] = e.skipped;
    entries.push_back(std::move(x));
  }
  j["entries"] = entries;
  return j;
}

std::string render_table(const ojson& payload) {
  std::ostringstream os;
  const std::string kind = payload.is_object() ? payload.value("kind", "") : "";
  if (kind == "scores") {
    render_scores(os, payload);
  } else if (kind == "explanation") {
    render_explanation(os, payload);
  } else if (kind == "recourse") {
    render_recourse(os, payload);
  } else if (kind == "whatif") {
    render_whatif(os, payload);
  } else if (kind == "schema") {
    render_schema(os, payload);
  } else {
    os << payload.dump(2) << "\n";
  }
  return os.str();
}

}  // namespace causex
