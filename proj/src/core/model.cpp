#include "feedwarden/core/model.h"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "feedwarden/core/error.h"
#include "feedwarden/core/hash.h"
#include "feedwarden/core/text.h"

namespace feedwarden {

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::kText: return "text";
    case Modality::kImage: return "image";
    case Modality::kImageText: return "image_text";
  }
  return "text";
}

Modality parse_modality(std::string_view text) {
  if (text == "text") return Modality::kText;
  if (text == "image") return Modality::kImage;
  if (text == "image_text") return Modality::kImageText;
  throw Error(ErrorCode::kUnknownModality, "unknown modality '" + std::string(text) + "'");
}

void check_rule(const Rule& rule) {
  if (trim(rule.description).empty()) {
    throw Error(ErrorCode::kEmptyDescription, "rule description is empty");
  }
  if (std::isnan(rule.weight) || rule.weight < -1.0 || rule.weight > 1.0) {
    throw Error(ErrorCode::kWeightOutOfRange, "rule weight must lie in [-1, 1]");
  }
  if (rule.weight == 0.0) {
    throw Error(ErrorCode::kZeroWeight, "rule weight must be nonzero");
  }
  if (rule.version < 1) {
    throw Error(ErrorCode::kInvalidArgument, "rule version must be >= 1");
  }
  if (rule.parent_version && *rule.parent_version >= rule.version) {
    throw Error(ErrorCode::kInvalidArgument, "parent_version must precede version");
  }
}

Rule validate_rule(const RuleCandidate& candidate) {
  if (!candidate.description || trim(*candidate.description).empty()) {
    throw Error(ErrorCode::kEmptyDescription, "rule description is empty");
  }
  if (!candidate.weight) {
    throw Error(ErrorCode::kWeightOutOfRange, "rule weight is missing");
  }
  if (!candidate.modality) {
    throw Error(ErrorCode::kUnknownModality, "rule modality is missing");
  }
  Rule rule;
  rule.description = std::string(trim(*candidate.description));
  rule.weight = *candidate.weight;
  rule.modality = parse_modality(trim(*candidate.modality));
  for (const auto& entity : candidate.core_entities) {
    auto trimmed = trim(entity);
    if (!trimmed.empty()) rule.core_entities.emplace_back(trimmed);
  }
  for (const auto& exemption : candidate.exemptions) {
    auto trimmed = trim(exemption);
    if (!trimmed.empty()) rule.exemptions.emplace_back(trimmed);
  }
  check_rule(rule);
  rule.id = candidate.id && !trim(*candidate.id).empty()
                ? std::string(trim(*candidate.id))
                : make_rule_id(rule.description);
  return rule;
}

std::string make_rule_id(std::string_view seed) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x",
                static_cast<unsigned>(fnv1a64(seed) & 0xffffffffULL));
  return std::string("rule_") + buf;
}

std::string_view to_string(Persona persona) {
  switch (persona) {
    case Persona::kA: return "A";
    case Persona::kB: return "B";
    case Persona::kC: return "C";
  }
  return "A";
}

Persona parse_persona(std::string_view text) {
  if (text == "A") return Persona::kA;
  if (text == "B") return Persona::kB;
  if (text == "C") return Persona::kC;
  throw Error(ErrorCode::kInvalidArgument, "unknown persona '" + std::string(text) + "'");
}

std::string FeedItem::text() const {
  std::string out;
  if (title) out += *title;
  if (snippet) {
    if (!out.empty()) out += ' ';
    out += *snippet;
  }
  return out;
}

void check_feed_item(const FeedItem& item) {
  if (item.id.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "feed item id is empty");
  }
  if (!item.title && !item.snippet && !item.image_ref) {
    throw Error(ErrorCode::kInvalidArgument,
                "feed item needs at least one of title, snippet, image_ref");
  }
  if (item.ground_truth && *item.ground_truth != 0 && *item.ground_truth != 1) {
    throw Error(ErrorCode::kInvalidArgument, "ground_truth must be 0 or 1");
  }
}

std::string_view to_string(EvidenceSource source) {
  switch (source) {
    case EvidenceSource::kBackend: return "backend";
    case EvidenceSource::kCache: return "cache";
    case EvidenceSource::kAbsent: return "absent";
  }
  return "absent";
}

std::string VisualEvidence::flatten() const {
  std::ostringstream out;
  auto line = [&out](std::string_view name, const std::optional<std::string>& value) {
    if (value) out << name << ": " << *value << '\n';
  };
  line("image_quality", perception.image_quality);
  line("brightness", perception.brightness);
  line("color_temperature", perception.color_temperature);
  line("composition", perception.composition);
  line("subjects", cognition.subjects);
  line("demographics", cognition.demographics);
  line("appearance", cognition.appearance);
  line("object_details", cognition.object_details);
  line("actions", cognition.actions);
  line("ocr", cognition.ocr);
  line("scene", semantics.scene);
  line("style", semantics.style);
  line("vibe", semantics.vibe);
  line("category", semantics.category);
  return out.str();
}

void check_verdict(const JudgeVerdict& verdict) {
  if (verdict.filter_decision) {
    if (!verdict.triggered_rule_id || verdict.triggered_rule_id->empty()) {
      throw Error(ErrorCode::kMalformedVerdict, "block verdict without triggered_rule_id");
    }
    if (trim(verdict.reason).empty()) {
      throw Error(ErrorCode::kMalformedVerdict, "block verdict without reason");
    }
  } else if (verdict.triggered_rule_id) {
    throw Error(ErrorCode::kMalformedVerdict, "pass verdict carries triggered_rule_id");
  }
  if (word_count(verdict.reason) > kMaxReasonWords) {
    throw Error(ErrorCode::kMalformedVerdict, "verdict reason exceeds 100 words");
  }
}

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::kCloud: return "cloud";
    case Layer::kPass: return "pass";
    case Layer::kClipFallback: return "clip_fallback";
    case Layer::kUnknown: return "unknown";
  }
  return "unknown";
}

Layer parse_layer(std::string_view text) {
  if (text == "cloud") return Layer::kCloud;
  if (text == "pass") return Layer::kPass;
  if (text == "clip_fallback") return Layer::kClipFallback;
  if (text == "unknown") return Layer::kUnknown;
  throw Error(ErrorCode::kInvalidArgument, "unknown layer '" + std::string(text) + "'");
}

std::string_view to_string(IntensityBand band) {
  switch (band) {
    case IntensityBand::kStrong: return "Strong";
    case IntensityBand::kMedium: return "Medium";
    case IntensityBand::kMild: return "Mild";
    case IntensityBand::kAllow: return "Allow";
  }
  return "Mild";
}

IntensityBand strength_band(double weight) {
  if (weight == 0.0) throw Error(ErrorCode::kZeroWeight, "weight must be nonzero");
  if (std::isnan(weight) || weight < -1.0 || weight > 1.0) {
    throw Error(ErrorCode::kWeightOutOfRange, "weight must lie in [-1, 1]");
  }
  const double magnitude = std::fabs(weight);
  if (magnitude >= 0.7) return IntensityBand::kStrong;
  if (magnitude >= 0.5) return IntensityBand::kMedium;
  return IntensityBand::kMild;
}

IntensityBand intensity_band(double weight) {
  const IntensityBand strength = strength_band(weight);
  return weight > 0.0 ? IntensityBand::kAllow : strength;
}

}  // namespace feedwarden
