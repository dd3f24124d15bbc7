#include "feedwarden/pipeline/backends.h"

#include <fstream>

#include "feedwarden/core/error.h"
#include "feedwarden/core/http_client.h"
#include "feedwarden/core/json_codec.h"
#include "feedwarden/core/text.h"

namespace feedwarden {

std::string_view to_string(JudgeCallStyle style) {
  return style == JudgeCallStyle::kDecoupled ? "decoupled" : "monolithic";
}

nlohmann::json to_json(const JudgeRequest& request) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& ctx : request.rules) {
    rules.push_back({{"id", ctx.rule.id},
                     {"description", ctx.rule.description},
                     {"weight", ctx.rule.weight},
                     {"modality", to_string(ctx.rule.modality)},
                     {"band", to_string(ctx.band)},
                     {"salience", ctx.salience},
                     {"exemptions", ctx.rule.exemptions}});
  }
  return {{"item", request.item},
          {"evidence", request.evidence ? nlohmann::json(*request.evidence) : nlohmann::json()},
          {"rules", std::move(rules)},
          {"style", to_string(request.style)},
          {"evidence_text", request.evidence_text}};
}

FixtureVisionBackend::FixtureVisionBackend(std::shared_ptr<const ImageFixtureStore> images)
    : images_(std::move(images)) {}

VisualEvidence FixtureVisionBackend::extract(std::string_view image_ref) {
  ++calls_;
  const std::string* raw = images_->evidence_json(image_ref);
  if (raw == nullptr) {
    throw Error(ErrorCode::kBackendFailure, "no evidence fixture for " + std::string(image_ref));
  }
  try {
    VisualEvidence evidence = nlohmann::json::parse(*raw).get<VisualEvidence>();
    evidence.source = EvidenceSource::kBackend;
    return evidence;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, std::string("bad evidence fixture: ") + e.what());
  }
}

ScriptedJudgeBackend::ScriptedJudgeBackend(std::vector<Trigger> triggers, bool accepts_visual)
    : triggers_(std::move(triggers)), accepts_visual_(accepts_visual) {}

std::unique_ptr<ScriptedJudgeBackend> ScriptedJudgeBackend::from_json(const nlohmann::json& j) {
  std::vector<Trigger> triggers;
  for (const auto& t : j.at("triggers")) {
    Trigger trigger;
    trigger.token = t.at("token").get<std::string>();
    trigger.rule_id = t.at("rule_id").get<std::string>();
    trigger.visual = t.value("visual", false);
    trigger.reason = t.value("reason", "");
    triggers.push_back(std::move(trigger));
  }
  return std::make_unique<ScriptedJudgeBackend>(std::move(triggers), j.value("accepts_visual", true));
}

JudgeVerdict ScriptedJudgeBackend::judge(const JudgeRequest& request) {
  ++calls_;
  const std::string text = to_lower_ascii(request.item.text());
  std::string visual;
  if (request.evidence) {
    visual = to_lower_ascii(request.evidence->flatten());
  } else {
    visual = to_lower_ascii(request.evidence_text);
  }
  for (const auto& trigger : triggers_) {
    const bool offered = std::any_of(request.rules.begin(), request.rules.end(),
                                     [&](const RuleContext& c) { return c.rule.id == trigger.rule_id; });
    if (!offered) continue;
    const std::string token = to_lower_ascii(trigger.token);
    const std::string& haystack = trigger.visual ? visual : text;
    if (haystack.find(token) == std::string::npos) continue;
    std::string reason = trigger.reason;
    if (reason.empty()) {
      reason = std::string(trigger.visual ? "Image evidence shows '" : "Text contains '") +
               trigger.token + "'.";
    }
    return {true, trigger.rule_id, reason};
  }
  return {false, std::nullopt, ""};
}

ReplayJudgeBackend ReplayJudgeBackend::from_json(const nlohmann::json& j) {
  ReplayJudgeBackend backend;
  for (const auto& [item_id, signatures] : j.at("items").items()) {
    auto& slot = backend.decisions_[item_id];
    for (const auto& [sig, decision] : signatures.items()) {
      slot[sig] = decision.is_null() ? std::nullopt
                                     : std::optional<std::string>(decision.get<std::string>());
    }
  }
  return backend;
}

ReplayJudgeBackend ReplayJudgeBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open replay file " + path.string());
  return from_json(nlohmann::json::parse(in));
}

std::string ReplayJudgeBackend::signature(const JudgeRequest& request) {
  const bool visual = request.evidence.has_value() || !request.evidence_text.empty();
  return std::string(to_string(request.style)) + (visual ? "_visual" : "_text");
}

JudgeVerdict ReplayJudgeBackend::judge(const JudgeRequest& request) {
  auto item = decisions_.find(request.item.id);
  if (item == decisions_.end()) {
    throw Error(ErrorCode::kBackendFailure, "no replay record for item " + request.item.id);
  }
  const std::string sig = signature(request);
  auto decision = item->second.find(sig);
  if (decision == item->second.end()) {
    throw Error(ErrorCode::kBackendFailure,
                "no replay record for item " + request.item.id + " signature " + sig);
  }
  if (!decision->second) return {false, std::nullopt, ""};
  return {true, *decision->second, "Replayed decision for recorded content."};
}

JudgeVerdict KeywordJudgeBackend::judge(const JudgeRequest& request) {
  const std::string text = to_lower_ascii(request.item.text());
  for (const auto& ctx : request.rules) {
    if (!ctx.rule.is_filter()) continue;
    if (strong_only_ && ctx.band != IntensityBand::kStrong) continue;
    for (const auto& entity : ctx.rule.core_entities) {
      const std::string needle = to_lower_ascii(entity);
      if (!needle.empty() && text.find(needle) != std::string::npos) {
        return {true, ctx.rule.id, "Text contains '" + entity + "'."};
      }
    }
  }
  return {false, std::nullopt, ""};
}

JudgeVerdict RemoteJudgeBackend::judge(const JudgeRequest& request) {
  auto response = post_json(endpoint_.url, to_json(request), endpoint_.timeout_ms,
                            endpoint_.retries, ErrorCode::kBackendFailure);
  return response.get<JudgeVerdict>();
}

VisualEvidence RemoteVisionBackend::extract(std::string_view image_ref) {
  auto response = post_json(endpoint_.url, {{"image_ref", std::string(image_ref)}},
                            endpoint_.timeout_ms, endpoint_.retries, ErrorCode::kBackendFailure);
  try {
    VisualEvidence evidence = response.get<VisualEvidence>();
    evidence.source = EvidenceSource::kBackend;
    return evidence;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, std::string("bad vision response: ") + e.what());
  }
}

}  // namespace feedwarden
