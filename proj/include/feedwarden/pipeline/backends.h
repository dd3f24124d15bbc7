#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/core/model.h"
#include "feedwarden/embedding/embedding.h"

namespace feedwarden {

/// A rule as the judge sees it: annotated with its band and ranked position.
struct RuleContext {
  Rule rule;
  IntensityBand band = IntensityBand::kMild;
  double salience = 0.0;  // PageRank score, 0 when the graph is unavailable
};

// Decoupled: the judge receives structured evidence next to the text.
// Monolithic: one call with evidence (if any) folded into the prompt text.
enum class JudgeCallStyle { kDecoupled, kMonolithic };

std::string_view to_string(JudgeCallStyle style);

struct JudgeRequest {
  FeedItem item;
  std::optional<VisualEvidence> evidence;
  std::vector<RuleContext> rules;  // ordered by meta-preference ranking
  JudgeCallStyle style = JudgeCallStyle::kDecoupled;
  std::string evidence_text;  // flattened evidence for monolithic calls
};

nlohmann::json to_json(const JudgeRequest& request);

struct JudgeCapabilities {
  bool accepts_visual = true;
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual JudgeCapabilities capabilities() const = 0;
  // Throws Error(kBackendFailure) on transport problems; may return any
  // verdict, which the caller validates.
  virtual JudgeVerdict judge(const JudgeRequest& request) = 0;
};

class VisionBackend {
 public:
  virtual ~VisionBackend() = default;
  // Throws Error(kBackendFailure); never fabricates evidence.
  virtual VisualEvidence extract(std::string_view image_ref) = 0;
};

/// Serves fixture evidence JSON for known image refs.
class FixtureVisionBackend final : public VisionBackend {
 public:
  explicit FixtureVisionBackend(std::shared_ptr<const ImageFixtureStore> images);

  VisualEvidence extract(std::string_view image_ref) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<const ImageFixtureStore> images_;
  std::atomic<std::size_t> calls_{0};
};

/// Deterministic judge: blocks when a scripted token occurs in the item text
/// (or, for visual triggers, in the supplied evidence) and the scripted rule
/// is among the supplied rules. Triggers are tried in script order.
class ScriptedJudgeBackend final : public JudgeBackend {
 public:
  struct Trigger {
    std::string token;
    std::string rule_id;
    bool visual = false;  // match against evidence instead of text
    std::string reason;
  };

  explicit ScriptedJudgeBackend(std::vector<Trigger> triggers, bool accepts_visual = true);
  // {"triggers": [{"token", "rule_id", "visual"?, "reason"?}], "accepts_visual"?}
  static std::unique_ptr<ScriptedJudgeBackend> from_json(const nlohmann::json& j);

  JudgeCapabilities capabilities() const override { return {accepts_visual_}; }
  JudgeVerdict judge(const JudgeRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::vector<Trigger> triggers_;
  bool accepts_visual_;
  std::atomic<std::size_t> calls_{0};
};

/// Replays recorded decisions keyed by item id and call signature. The
/// signature is "<decoupled|monolithic>_<visual|text>" depending on the call
/// style and on whether evidence reached the judge.
class ReplayJudgeBackend final : public JudgeBackend {
 public:
  // {"items": {"<item id>": {"decoupled_visual": "<rule id>" | null, ...}}}
  static ReplayJudgeBackend from_json(const nlohmann::json& j);
  static ReplayJudgeBackend load(const std::filesystem::path& path);

  JudgeCapabilities capabilities() const override { return {true}; }
  // Unknown items or signatures throw Error(kBackendFailure).
  JudgeVerdict judge(const JudgeRequest& request) override;

  static std::string signature(const JudgeRequest& request);

 private:
  std::map<std::string, std::map<std::string, std::optional<std::string>>, std::less<>> decisions_;
};

/// Blocks when any filter rule's core entity occurs as a case-insensitive
/// substring of the item text. With strong_only, only Strong-band rules count.
class KeywordJudgeBackend final : public JudgeBackend {
 public:
  explicit KeywordJudgeBackend(bool strong_only = false) : strong_only_(strong_only) {}

  JudgeCapabilities capabilities() const override { return {false}; }
  JudgeVerdict judge(const JudgeRequest& request) override;

 private:
  bool strong_only_;
};

struct RemoteBackendEndpoint {
  std::string url;
  int timeout_ms = 10000;
  int retries = 0;
};

/// HTTP+JSON judge: POSTs to_json(JudgeRequest), expects the verdict schema
/// {filter_decision, triggered_rule_id, reason}.
class RemoteJudgeBackend final : public JudgeBackend {
 public:
  explicit RemoteJudgeBackend(RemoteBackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  JudgeCapabilities capabilities() const override { return {true}; }
  JudgeVerdict judge(const JudgeRequest& request) override;

 private:
  RemoteBackendEndpoint endpoint_;
};

/// HTTP+JSON vision: POST {"image_ref"} -> three-layer evidence JSON.
class RemoteVisionBackend final : public VisionBackend {
 public:
  explicit RemoteVisionBackend(RemoteBackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  VisualEvidence extract(std::string_view image_ref) override;

 private:
  RemoteBackendEndpoint endpoint_;
};

}  // namespace feedwarden
