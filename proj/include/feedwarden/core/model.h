#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace feedwarden {

enum class Modality { kText, kImage, kImageText };

std::string_view to_string(Modality modality);
// Throws Error(kUnknownModality) for anything outside {text, image, image_text}.
Modality parse_modality(std::string_view text);

/// A natural-language constraint. Negative weight filters, positive weight allows.
struct Rule {
  std::string id;
  std::string description;
  double weight = 0.0;
  Modality modality = Modality::kText;
  std::vector<std::string> core_entities;
  bool active = true;
  std::int64_t version = 1;
  std::optional<std::int64_t> parent_version;
  std::vector<std::string> exemptions;

  bool is_filter() const { return weight < 0.0; }
  bool is_allow() const { return weight > 0.0; }

  friend bool operator==(const Rule&, const Rule&) = default;
};

/// Unvalidated rule input as it arrives from a user, a proposal, or the wire.
struct RuleCandidate {
  std::optional<std::string> id;
  std::optional<std::string> description;
  std::optional<double> weight;
  std::optional<std::string> modality;
  std::vector<std::string> core_entities;
  std::vector<std::string> exemptions;
};

Rule validate_rule(const RuleCandidate& candidate);
// Checks the invariants of an already-typed rule (used after edits).
void check_rule(const Rule& rule);

// "rule_" followed by 8 lowercase hex digits derived from the seed.
std::string make_rule_id(std::string_view seed);

enum class Persona { kA, kB, kC };

std::string_view to_string(Persona persona);
Persona parse_persona(std::string_view text);

struct FeedItem {
  std::string id;
  std::optional<std::string> title;
  std::optional<std::string> snippet;
  bool snippet_truncated = false;
  std::optional<std::string> image_ref;
  std::vector<std::string> tags;
  std::optional<Persona> persona;
  std::optional<int> ground_truth;  // 0 = pass, 1 = block

  // title and snippet joined by a single space, skipping absent parts.
  std::string text() const;

  friend bool operator==(const FeedItem&, const FeedItem&) = default;
};

void check_feed_item(const FeedItem& item);

enum class EvidenceSource { kBackend, kCache, kAbsent };

std::string_view to_string(EvidenceSource source);

/// Three-layer structured description of an image. Unknown fields stay null.
struct VisualEvidence {
  struct Perception {
    std::optional<std::string> image_quality;
    std::optional<std::string> brightness;
    std::optional<std::string> color_temperature;
    std::optional<std::string> composition;
    friend bool operator==(const Perception&, const Perception&) = default;
  };
  struct Cognition {
    std::optional<std::string> subjects;
    std::optional<std::string> demographics;
    std::optional<std::string> appearance;
    std::optional<std::string> object_details;
    std::optional<std::string> actions;
    std::optional<std::string> ocr;
    friend bool operator==(const Cognition&, const Cognition&) = default;
  };
  struct Semantics {
    std::optional<std::string> scene;
    std::optional<std::string> style;
    std::optional<std::string> vibe;
    std::optional<std::string> category;
    friend bool operator==(const Semantics&, const Semantics&) = default;
  };

  Perception perception;
  Cognition cognition;
  Semantics semantics;
  EvidenceSource source = EvidenceSource::kAbsent;

  // All populated fields flattened into "name: value" lines, in schema order.
  std::string flatten() const;

  friend bool operator==(const VisualEvidence&, const VisualEvidence&) = default;
};

struct JudgeVerdict {
  bool filter_decision = false;
  std::optional<std::string> triggered_rule_id;
  std::string reason;

  friend bool operator==(const JudgeVerdict&, const JudgeVerdict&) = default;
};

inline constexpr std::size_t kMaxReasonWords = 100;

// Throws Error(kMalformedVerdict) when decision and rule id disagree, or the
// reason is missing on a block or longer than kMaxReasonWords.
void check_verdict(const JudgeVerdict& verdict);

/// Which pipeline branch decided an item.
enum class Layer { kCloud, kPass, kClipFallback, kUnknown };

std::string_view to_string(Layer layer);
Layer parse_layer(std::string_view text);

enum class IntensityBand { kStrong, kMedium, kMild, kAllow };

std::string_view to_string(IntensityBand band);

// Strength from |weight| alone: >= 0.7 Strong, [0.5, 0.7) Medium, else Mild.
IntensityBand strength_band(double weight);
// As strength_band for filter rules; positive weights map to Allow.
IntensityBand intensity_band(double weight);

}  // namespace feedwarden
