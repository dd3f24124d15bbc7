#pragma once

#include <optional>
#include <string>
#include <vector>

#include "feedwarden/core/model.h"
#include "feedwarden/embedding/embedding.h"
#include "feedwarden/graph/rule_graph.h"
#include "feedwarden/pipeline/backends.h"
#include "feedwarden/profile/preference_profile.h"

namespace feedwarden {

inline constexpr double kDefaultClipThreshold = 0.30;
inline constexpr double kDefaultStarOne = 0.40;
inline constexpr double kDefaultStarTwo = 0.65;
inline constexpr std::size_t kDefaultStarK = 5;
inline constexpr std::string_view kFallbackUnavailableRule = "fallback_unavailable";

// Rules in ranking order first, then the unranked rest by |weight| desc, id.
std::vector<RuleContext> order_rules(const std::vector<Rule>& rules,
                                     const std::vector<RankedRule>& ranking);

// Calls the backend and validates the verdict. Throws kBackendFailure when the
// backend fails and kMalformedVerdict when the verdict breaks its invariants
// or cites a rule outside `rules`.
JudgeVerdict judge(const FeedItem& item, const std::optional<VisualEvidence>& evidence,
                   const std::vector<Rule>& rules, const std::vector<RankedRule>& ranking,
                   JudgeBackend& backend, JudgeCallStyle style = JudgeCallStyle::kDecoupled);

enum class FallbackMethod { kCrossModal, kKeyword, kUnavailable, kNoCandidates };

std::string_view to_string(FallbackMethod method);

struct FallbackOutcome {
  bool block = false;
  std::optional<std::string> matched_rule_id;
  std::optional<double> max_similarity;
  FallbackMethod method = FallbackMethod::kNoCandidates;
};

// Local safety net after a primary-path failure. With an image: max cross-modal
// similarity against active filter rules scoped to image or image_text; block
// when it reaches tau_clip. If the provider cannot answer, block with the
// fallback_unavailable sentinel. Without an image: Strong-band core-entity
// keyword match only, so text-only fallbacks lean toward passing.
FallbackOutcome fallback_adjudicate(const FeedItem& item, const std::vector<Rule>& rules,
                                    const CrossModalProvider& cross_modal,
                                    double tau_clip = kDefaultClipThreshold);

struct StarThresholds {
  double one = kDefaultStarOne;
  double two = kDefaultStarTwo;
};

// clip((raw - 0.10) / 0.40, 0, 1), rounded to 12 decimals.
double star_transform(double raw);
int star_count(double s, const StarThresholds& thresholds = {});

struct StarScore {
  double raw = 0.0;
  double s = 0.0;
  int count = 0;
};

// Importance-weighted mean cosine between the item text and the top-k profile
// tags. Empty profile, empty text or zero total importance give all zeros.
StarScore star_score(const FeedItem& item, const PreferenceProfile& profile,
                     const EmbeddingProvider& embeddings, std::size_t k = kDefaultStarK,
                     const StarThresholds& thresholds = {});

}  // namespace feedwarden
