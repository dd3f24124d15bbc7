#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/agents/feedback.h"
#include "feedwarden/agents/rule_store.h"
#include "feedwarden/graph/rule_graph.h"
#include "feedwarden/pipeline/adjudicator.h"
#include "feedwarden/profile/preference_profile.h"
#include "feedwarden/service/config.h"
#include "feedwarden/telemetry/event_log.h"
#include "feedwarden/telemetry/metrics.h"

namespace feedwarden {

/// Backends shared by every user, built once from the config.
struct EngineBackends {
  std::shared_ptr<const EmbeddingProvider> text;
  std::shared_ptr<const CrossModalProvider> cross_modal;
  std::shared_ptr<VisionBackend> vision;
  std::shared_ptr<JudgeBackend> judge;
  std::shared_ptr<EvidenceCache> cache;
  std::shared_ptr<IntentParserBackend> intent;
  std::shared_ptr<DisputeBackend> dispute;
};

// Builds stub or remote backends per config. Fixture files are read here.
EngineBackends make_backends(const ServiceConfig& config);

struct AppealResult {
  AppealRecord appeal;
  std::shared_ptr<const Dossier> dossier;
  std::optional<std::string> dispute_error;  // set when the dispute round was deferred
};

/// Multi-user engine. Each user's state has one serialized writer; adjudication
/// reads an immutable published snapshot and runs without the user's lock.
/// All state lives under `<storage_root>/users/<id>/`, telemetry under
/// `<storage_root>/telemetry.ndjson`.
class Engine {
 public:
  // Replays persisted state. Throws Error(kCorruptSnapshot) on damaged state
  // and Error(kStorageError) when the root is not writable.
  Engine(ServiceConfig config, EngineBackends backends, Clock clock = system_clock_ms());
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const ServiceConfig& config() const { return config_; }

  AdjudicationResult adjudicate(std::string_view user, const FeedItem& item);

  std::vector<Rule> rules(std::string_view user);
  Rule rule(std::string_view user, std::string_view id);
  std::vector<Rule> rule_history(std::string_view user, std::string_view id);
  Rule create_rule(std::string_view user, const nlohmann::json& body);
  // Partial update of description, weight, modality, core_entities, exemptions.
  Rule patch_rule(std::string_view user, std::string_view id, const nlohmann::json& body);
  Rule delete_rule(std::string_view user, std::string_view id);

  RuleProposal parse_intent(std::string_view user, std::string_view utterance,
                            const std::optional<std::string>& platform_hint);
  ConfirmResult confirm_proposal(std::string_view user, std::string_view proposal_id,
                                 const nlohmann::json& edits);
  RuleProposal reject_proposal(std::string_view user, std::string_view proposal_id);
  std::vector<RuleProposal> proposals(std::string_view user);

  std::shared_ptr<const Dossier> dossier(std::string_view user, std::string_view dossier_id);
  // Files an appeal and runs one dispute round when a dispute backend exists.
  AppealResult file_appeal(std::string_view user, std::string_view dossier_id,
                           const std::string& message);
  ResolveResult resolve_appeal(std::string_view user, std::string_view appeal_id,
                               AppealDecision decision, bool apply_proposal);
  AppealRecord appeal(std::string_view user, std::string_view appeal_id);

  nlohmann::json profile(std::string_view user);
  nlohmann::json set_slider(std::string_view user, std::string_view tag, double value);
  // Replaces base importance from interaction events {tag, timestamp, kind}.
  nlohmann::json ingest_interactions(std::string_view user, const nlohmann::json& body);
  nlohmann::json advance_session(std::string_view user);

  nlohmann::json graph(std::string_view user);
  std::vector<RankedRule> ranking(std::string_view user);

  std::shared_ptr<const std::vector<TelemetryEvent>> telemetry() const { return log_->snapshot(); }
  std::uint64_t telemetry_offset() const { return log_->offset(); }
  std::uint64_t telemetry_discarded_bytes() const { return log_->discarded_bytes(); }

  // Full persisted view of one user, for restart comparisons.
  nlohmann::json user_snapshot(std::string_view user);

 private:
  struct UserState;
  struct Published;

  UserState& state(std::string_view user);
  void republish(UserState& s);
  void rebuild_graph(UserState& s);
  void update_graph(UserState& s, const std::vector<std::string>& changed_ids);
  void persist_rules(UserState& s);
  void persist_profile(UserState& s);
  void persist_graph(UserState& s);
  void persist_feedback(UserState& s);
  void emit(std::string_view user, EventKind kind, std::string detail,
            std::optional<std::string> rule_id = std::nullopt, std::string item_id = {},
            Layer layer = Layer::kUnknown);
  Rule apply_rule_change(UserState& s, const Rule& rule);

  ServiceConfig config_;
  EngineBackends backends_;
  Clock clock_;
  std::filesystem::path root_;
  std::shared_ptr<EventLog> log_;
  std::mutex users_mutex_;
  std::map<std::string, std::unique_ptr<UserState>, std::less<>> users_;
};

// Safe user id for a storage directory: [A-Za-z0-9_-], 1..64 chars.
bool valid_user_id(std::string_view user);

}  // namespace feedwarden
