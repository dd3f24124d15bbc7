#include "feedwarden/core/json_codec.h"

#include "feedwarden/core/error.h"

namespace feedwarden {

namespace {

[[noreturn]] void type_error(const char* key, const char* expected) {
  throw Error(ErrorCode::kInvalidArgument,
              std::string("field '") + key + "' must be " + expected);
}

}  // namespace

std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) type_error(key, "a string");
  return it->get<std::string>();
}

std::optional<double> optional_number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) type_error(key, "a number");
  return it->get<double>();
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) type_error(key, "an array of strings");
  for (const auto& element : *it) {
    if (!element.is_string()) type_error(key, "an array of strings");
    out.push_back(element.get<std::string>());
  }
  return out;
}

void to_json(Json& j, const Rule& rule) {
  j = Json{{"id", rule.id},
           {"description", rule.description},
           {"weight", rule.weight},
           {"modality", to_string(rule.modality)},
           {"core_entities", rule.core_entities},
           {"active", rule.active},
           {"version", rule.version},
           {"parent_version", optional_to_json(rule.parent_version)},
           {"exemptions", rule.exemptions}};
}

RuleCandidate rule_candidate_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "rule must be an object");
  RuleCandidate candidate;
  candidate.id = optional_string(j, "id");
  candidate.description = optional_string(j, "description");
  candidate.weight = optional_number(j, "weight");
  candidate.modality = optional_string(j, "modality");
  candidate.core_entities = string_list(j, "core_entities");
  candidate.exemptions = string_list(j, "exemptions");
  return candidate;
}

void from_json(const Json& j, Rule& rule) {
  Rule parsed = validate_rule(rule_candidate_from_json(j));
  if (auto it = j.find("active"); it != j.end() && !it->is_null()) {
    parsed.active = it->get<bool>();
  }
  if (auto it = j.find("version"); it != j.end() && !it->is_null()) {
    parsed.version = it->get<std::int64_t>();
  }
  if (auto it = j.find("parent_version"); it != j.end() && !it->is_null()) {
    parsed.parent_version = it->get<std::int64_t>();
  }
  check_rule(parsed);
  rule = std::move(parsed);
}

void to_json(Json& j, const FeedItem& item) {
  j = Json{{"id", item.id},
           {"title", optional_to_json(item.title)},
           {"snippet", optional_to_json(item.snippet)},
           {"snippet_truncated", item.snippet_truncated},
           {"image_ref", optional_to_json(item.image_ref)},
           {"tags", item.tags},
           {"persona", item.persona ? Json(to_string(*item.persona)) : Json(nullptr)},
           {"ground_truth", optional_to_json(item.ground_truth)}};
}

void from_json(const Json& j, FeedItem& item) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "feed item must be an object");
  FeedItem parsed;
  auto id = optional_string(j, "id");
  if (!id) throw Error(ErrorCode::kInvalidArgument, "feed item id is missing");
  parsed.id = *id;
  parsed.title = optional_string(j, "title");
  parsed.snippet = optional_string(j, "snippet");
  if (auto it = j.find("snippet_truncated"); it != j.end() && !it->is_null()) {
    parsed.snippet_truncated = it->get<bool>();
  }
  parsed.image_ref = optional_string(j, "image_ref");
  parsed.tags = string_list(j, "tags");
  if (auto persona = optional_string(j, "persona")) parsed.persona = parse_persona(*persona);
  if (auto it = j.find("ground_truth"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) type_error("ground_truth", "0 or 1");
    parsed.ground_truth = it->get<int>();
  }
  check_feed_item(parsed);
  item = std::move(parsed);
}

void to_json(Json& j, const VisualEvidence& e) {
  j = Json{{"perception",
            {{"image_quality", optional_to_json(e.perception.image_quality)},
             {"brightness", optional_to_json(e.perception.brightness)},
             {"color_temperature", optional_to_json(e.perception.color_temperature)},
             {"composition", optional_to_json(e.perception.composition)}}},
           {"cognition",
            {{"subjects", optional_to_json(e.cognition.subjects)},
             {"demographics", optional_to_json(e.cognition.demographics)},
             {"appearance", optional_to_json(e.cognition.appearance)},
             {"object_details", optional_to_json(e.cognition.object_details)},
             {"actions", optional_to_json(e.cognition.actions)},
             {"ocr", optional_to_json(e.cognition.ocr)}}},
           {"semantics",
            {{"scene", optional_to_json(e.semantics.scene)},
             {"style", optional_to_json(e.semantics.style)},
             {"vibe", optional_to_json(e.semantics.vibe)},
             {"category", optional_to_json(e.semantics.category)}}},
           {"source", to_string(e.source)}};
}

void from_json(const Json& j, VisualEvidence& e) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "evidence must be an object");
  static const Json kEmpty = Json::object();
  auto layer = [&j](const char* key) -> const Json& {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return kEmpty;
    if (!it->is_object()) type_error(key, "an object");
    return *it;
  };
  VisualEvidence parsed;
  const Json& p = layer("perception");
  parsed.perception.image_quality = optional_string(p, "image_quality");
  parsed.perception.brightness = optional_string(p, "brightness");
  parsed.perception.color_temperature = optional_string(p, "color_temperature");
  parsed.perception.composition = optional_string(p, "composition");
  const Json& c = layer("cognition");
  parsed.cognition.subjects = optional_string(c, "subjects");
  parsed.cognition.demographics = optional_string(c, "demographics");
  parsed.cognition.appearance = optional_string(c, "appearance");
  parsed.cognition.object_details = optional_string(c, "object_details");
  parsed.cognition.actions = optional_string(c, "actions");
  parsed.cognition.ocr = optional_string(c, "ocr");
  const Json& s = layer("semantics");
  parsed.semantics.scene = optional_string(s, "scene");
  parsed.semantics.style = optional_string(s, "style");
  parsed.semantics.vibe = optional_string(s, "vibe");
  parsed.semantics.category = optional_string(s, "category");
  auto source = optional_string(j, "source").value_or("backend");
  if (source == "backend") {
    parsed.source = EvidenceSource::kBackend;
  } else if (source == "cache") {
    parsed.source = EvidenceSource::kCache;
  } else if (source == "absent") {
    parsed.source = EvidenceSource::kAbsent;
  } else {
    type_error("source", "one of backend, cache, absent");
  }
  e = std::move(parsed);
}

void to_json(Json& j, const JudgeVerdict& verdict) {
  j = Json{{"filter_decision", verdict.filter_decision},
           {"triggered_rule_id", optional_to_json(verdict.triggered_rule_id)},
           {"reason", verdict.reason}};
}

void from_json(const Json& j, JudgeVerdict& verdict) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedVerdict, "verdict must be an object");
  auto it = j.find("filter_decision");
  if (it == j.end()) throw Error(ErrorCode::kMalformedVerdict, "verdict lacks filter_decision");
  JudgeVerdict parsed;
  // Backends following the prompt schema may send "true"/"false" strings.
  if (it->is_boolean()) {
    parsed.filter_decision = it->get<bool>();
  } else if (it->is_string() && (*it == "true" || *it == "false")) {
    parsed.filter_decision = *it == "true";
  } else {
    throw Error(ErrorCode::kMalformedVerdict, "filter_decision must be a boolean");
  }
  try {
    parsed.triggered_rule_id = optional_string(j, "triggered_rule_id");
    parsed.reason = optional_string(j, "reason").value_or("");
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedVerdict, e.what());
  }
  verdict = std::move(parsed);
}

}  // namespace feedwarden
