#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/model.h"
#include "feedwarden/embedding/embedding.h"
#include "feedwarden/graph/rule_graph.h"
#include "feedwarden/pipeline/backends.h"
#include "feedwarden/pipeline/evidence_cache.h"
#include "feedwarden/pipeline/stages.h"
#include "feedwarden/profile/preference_profile.h"
#include "feedwarden/telemetry/event_log.h"

namespace feedwarden {

/// Per-item decision.
struct Adjudication {
  std::string item_id;
  int y_block = 0;
  double y_star = 0.0;
  int star_count = 0;
  Layer layer = Layer::kPass;
  std::optional<std::string> triggered_rule_id;
  std::string reason;
  std::optional<std::string> dossier_id;
  std::int64_t latency_ms = 0;

  friend bool operator==(const Adjudication&, const Adjudication&) = default;
};

nlohmann::json to_json(const Adjudication& a);
Adjudication adjudication_from_json(const nlohmann::json& j);

struct FallbackRecord {
  std::string failure;  // why the primary path was abandoned
  FallbackMethod method = FallbackMethod::kNoCandidates;
  std::optional<double> max_similarity;
  std::optional<std::string> matched_rule_id;
};

/// Immutable snapshot of everything behind one decision.
struct Dossier {
  std::string dossier_id;
  std::string user_id;
  FeedItem item;
  std::map<std::string, std::int64_t> rule_versions;  // active rule id -> version
  std::optional<VisualEvidence> evidence;
  std::optional<JudgeVerdict> verdict;
  std::optional<FallbackRecord> fallback;
  nlohmann::json config;
  std::int64_t timestamp_ms = 0;
  int y_block = 0;
  Layer layer = Layer::kPass;
  std::optional<std::string> triggered_rule_id;
};

nlohmann::json to_json(const Dossier& d);
Dossier dossier_from_json(const nlohmann::json& j);

/// Write-once dossier storage. Optional NDJSON file backing; records are
/// appended and fsync'ed, and a torn final record is dropped on load.
class DossierStore {
 public:
  DossierStore() = default;
  explicit DossierStore(std::filesystem::path file);

  // Inserts unless the id exists already; returns the stored dossier.
  std::shared_ptr<const Dossier> put(Dossier dossier);
  std::shared_ptr<const Dossier> get(std::string_view id) const;
  std::size_t size() const;
  std::vector<std::shared_ptr<const Dossier>> all() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Dossier>, std::less<>> dossiers_;
  std::unique_ptr<AppendOnlyFile> file_;
};

// Ablation wiring for the pipeline.
enum class PipelineMode { kFull, kRemoveImage, kRemoveMa, kKeywordBaseline, kTextOnlyBaseline };

std::string_view to_string(PipelineMode mode);
PipelineMode parse_pipeline_mode(std::string_view text);

struct AdjudicationConfig {
  double tau_clip = kDefaultClipThreshold;
  StarThresholds stars;
  std::size_t star_k = kDefaultStarK;
  bool audit_all = false;
  PipelineMode mode = PipelineMode::kFull;

  nlohmann::json to_json() const;
};

struct Backends {
  std::shared_ptr<VisionBackend> vision;             // may be null: no evidence
  std::shared_ptr<JudgeBackend> judge;               // required
  std::shared_ptr<const EmbeddingProvider> text;     // star scoring
  std::shared_ptr<const CrossModalProvider> cross_modal;  // fallback
  std::shared_ptr<EvidenceCache> cache;              // may be null: no caching
};

/// Immutable view of one user's state taken when adjudication starts.
struct AdjudicationContext {
  std::string user_id;
  std::shared_ptr<const std::vector<Rule>> rules;  // active rules
  std::shared_ptr<const std::vector<RankedRule>> ranking;
  std::shared_ptr<const PreferenceProfile> profile;
};

struct AdjudicationResult {
  Adjudication adjudication;
  std::shared_ptr<const Dossier> dossier;  // null for unaudited passes
};

using Clock = std::function<std::int64_t()>;
Clock system_clock_ms();

/// The decision engine. adjudicate() never throws: every item gets a decision,
/// and any failure on the primary path routes to the local fallback.
class Adjudicator {
 public:
  Adjudicator(Backends backends, AdjudicationConfig config, std::shared_ptr<DossierStore> dossiers,
              std::shared_ptr<TelemetrySink> telemetry, Clock clock = system_clock_ms());

  AdjudicationResult adjudicate(const FeedItem& item, const AdjudicationContext& context) const;

  const AdjudicationConfig& config() const { return config_; }
  const Backends& backends() const { return backends_; }

 private:
  std::optional<VisualEvidence> gather_evidence(const FeedItem& item) const;
  void emit(const AdjudicationContext& context, const Adjudication& adjudication,
            std::int64_t timestamp_ms) const;

  Backends backends_;
  AdjudicationConfig config_;
  std::shared_ptr<DossierStore> dossiers_;
  std::shared_ptr<TelemetrySink> telemetry_;
  std::shared_ptr<KeywordJudgeBackend> keyword_judge_;
  Clock clock_;
};

}  // namespace feedwarden
