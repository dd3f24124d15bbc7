#include "feedwarden/pipeline/stages.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "feedwarden/core/error.h"
#include "feedwarden/core/text.h"

namespace feedwarden {

std::vector<RuleContext> order_rules(const std::vector<Rule>& rules,
                                     const std::vector<RankedRule>& ranking) {
  std::unordered_map<std::string, std::size_t> position;
  std::unordered_map<std::string, double> salience;
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    position.emplace(ranking[i].id, i);
    salience.emplace(ranking[i].id, ranking[i].score);
  }
  std::vector<RuleContext> ordered;
  ordered.reserve(rules.size());
  for (const auto& rule : rules) {
    auto it = salience.find(rule.id);
    ordered.push_back({rule, intensity_band(rule.weight), it == salience.end() ? 0.0 : it->second});
  }
  std::stable_sort(ordered.begin(), ordered.end(), [&](const RuleContext& a, const RuleContext& b) {
    auto pa = position.find(a.rule.id);
    auto pb = position.find(b.rule.id);
    const bool ra = pa != position.end();
    const bool rb = pb != position.end();
    if (ra != rb) return ra;
    if (ra) return pa->second < pb->second;
    const double wa = std::fabs(a.rule.weight);
    const double wb = std::fabs(b.rule.weight);
    if (wa != wb) return wa > wb;
    return a.rule.id < b.rule.id;
  });
  return ordered;
}

JudgeVerdict judge(const FeedItem& item, const std::optional<VisualEvidence>& evidence,
                   const std::vector<Rule>& rules, const std::vector<RankedRule>& ranking,
                   JudgeBackend& backend, JudgeCallStyle style) {
  if (rules.empty()) throw Error(ErrorCode::kInvalidArgument, "judge needs at least one rule");
  JudgeRequest request;
  request.item = item;
  request.rules = order_rules(rules, ranking);
  request.style = style;
  if (evidence) {
    if (style == JudgeCallStyle::kMonolithic) {
      request.evidence_text = evidence->flatten();
    } else {
      request.evidence = evidence;
    }
  }

  JudgeVerdict verdict;
  try {
    verdict = backend.judge(request);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedVerdict) throw;
    throw Error(ErrorCode::kBackendFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, std::string("judge backend: ") + e.what());
  }

  check_verdict(verdict);
  if (verdict.filter_decision) {
    const bool known = std::any_of(rules.begin(), rules.end(), [&](const Rule& r) {
      return r.id == *verdict.triggered_rule_id;
    });
    if (!known) {
      throw Error(ErrorCode::kMalformedVerdict,
                  "verdict cites inactive rule " + *verdict.triggered_rule_id);
    }
  }
  return verdict;
}

std::string_view to_string(FallbackMethod method) {
  switch (method) {
    case FallbackMethod::kCrossModal: return "cross_modal";
    case FallbackMethod::kKeyword: return "keyword";
    case FallbackMethod::kUnavailable: return "unavailable";
    case FallbackMethod::kNoCandidates: return "no_candidates";
  }
  return "no_candidates";
}

FallbackOutcome fallback_adjudicate(const FeedItem& item, const std::vector<Rule>& rules,
                                    const CrossModalProvider& cross_modal, double tau_clip) {
  FallbackOutcome outcome;
  if (!item.image_ref) {
    const std::string text = to_lower_ascii(item.text());
    for (const auto& rule : rules) {
      if (!rule.active || !rule.is_filter() ||
          strength_band(rule.weight) != IntensityBand::kStrong) {
        continue;
      }
      for (const auto& entity : rule.core_entities) {
        const std::string needle = to_lower_ascii(entity);
        if (!needle.empty() && text.find(needle) != std::string::npos) {
          outcome.block = true;
          outcome.matched_rule_id = rule.id;
          outcome.method = FallbackMethod::kKeyword;
          return outcome;
        }
      }
    }
    outcome.method = FallbackMethod::kKeyword;
    return outcome;
  }

  bool any_candidate = false;
  for (const auto& rule : rules) {
    if (!rule.active || !rule.is_filter() || rule.modality == Modality::kText) continue;
    any_candidate = true;
    double sim = 0.0;
    try {
      sim = cross_modal.similarity(*item.image_ref, rule.description);
    } catch (const std::exception&) {
      outcome.block = true;
      outcome.matched_rule_id = std::string(kFallbackUnavailableRule);
      outcome.max_similarity.reset();
      outcome.method = FallbackMethod::kUnavailable;
      return outcome;
    }
    if (!outcome.max_similarity || sim > *outcome.max_similarity) {
      outcome.max_similarity = sim;
      outcome.matched_rule_id = rule.id;
    }
  }
  if (!any_candidate) {
    outcome.method = FallbackMethod::kNoCandidates;
    return outcome;
  }
  outcome.method = FallbackMethod::kCrossModal;
  outcome.block = reaches_threshold(*outcome.max_similarity, tau_clip);
  if (!outcome.block) outcome.matched_rule_id.reset();
  return outcome;
}

double star_transform(double raw) {
  const double s = std::clamp((raw - 0.10) / 0.40, 0.0, 1.0);
  return std::round(s * 1e12) / 1e12;
}

int star_count(double s, const StarThresholds& thresholds) {
  if (s >= thresholds.two) return 2;
  if (s >= thresholds.one) return 1;
  return 0;
}

StarScore star_score(const FeedItem& item, const PreferenceProfile& profile,
                     const EmbeddingProvider& embeddings, std::size_t k,
                     const StarThresholds& thresholds) {
  StarScore score;
  if (profile.empty()) return score;
  const std::string text = item.text();
  if (trim(text).empty()) return score;
  const auto nodes = profile.top_k(k);
  const EmbeddingVector item_vec = embeddings.embed_text(text);
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& node : nodes) {
    if (node.importance <= 0.0) continue;
    weighted += node.importance * cosine(item_vec, embeddings.embed_text(node.tag));
    total += node.importance;
  }
  if (total <= 0.0) return score;
  score.raw = weighted / total;
  score.s = star_transform(score.raw);
  score.count = star_count(score.s, thresholds);
  return score;
}

}  // namespace feedwarden
