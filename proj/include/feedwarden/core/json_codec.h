#pragma once

// Canonical JSON encodings for the domain types. Field names are snake_case and
// absent optionals are written as null.

#include <nlohmann/json.hpp>

#include "feedwarden/core/model.h"

namespace feedwarden {

using Json = nlohmann::json;

void to_json(Json& j, const Rule& rule);
// Validates: a decoded rule always satisfies the Rule invariants.
void from_json(const Json& j, Rule& rule);

RuleCandidate rule_candidate_from_json(const Json& j);

void to_json(Json& j, const FeedItem& item);
void from_json(const Json& j, FeedItem& item);

void to_json(Json& j, const VisualEvidence& evidence);
void from_json(const Json& j, VisualEvidence& evidence);

void to_json(Json& j, const JudgeVerdict& verdict);
void from_json(const Json& j, JudgeVerdict& verdict);

// Helpers shared by the other codecs.
template <typename T>
Json optional_to_json(const std::optional<T>& value) {
  return value ? Json(*value) : Json(nullptr);
}

std::optional<std::string> optional_string(const Json& j, const char* key);
std::optional<double> optional_number(const Json& j, const char* key);
std::vector<std::string> string_list(const Json& j, const char* key);

}  // namespace feedwarden
