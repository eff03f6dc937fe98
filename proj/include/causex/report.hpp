#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "causex/explain.hpp"
#include "causex/graph.hpp"

namespace causex {

nlohmann::ordered_json to_json(const Assignment& a);
nlohmann::ordered_json to_json(const ExplanationReport& r, const Schema& s);

/// Plain-text rendering of a payload, chosen by its "kind" field
/// (scores, explanation, recourse, whatif, schema); anything else is
/// pretty-printed JSON.
std::string render_table(const nlohmann::ordered_json& payload);

}  // namespace causex
