#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "feedwarden/graph/rule_graph.h"
#include "feedwarden/pipeline/adjudicator.h"
#include "feedwarden/profile/preference_profile.h"

namespace feedwarden {

/// Effective service configuration. Every field has a default; the defaults
/// are the published constants.
struct ServiceConfig {
  // Thresholds.
  double tau_clip = kDefaultClipThreshold;
  double tau_e = kDefaultEdgeThreshold;
  double alpha = kDefaultDamping;
  double gamma = kDefaultDecayGamma;
  double star_one = kDefaultStarOne;
  double star_two = kDefaultStarTwo;
  std::int64_t star_k = static_cast<std::int64_t>(kDefaultStarK);
  double epsilon_delta = kDefaultDeltaEpsilon;
  std::string transition = "uniform";  // uniform | similarity_weighted
  bool audit_all = false;
  std::string mode = "full";  // pipeline wiring, see PipelineMode

  // Providers and backends.
  std::string embedding_provider = "offline";  // offline | remote
  std::int64_t embedding_dim = static_cast<std::int64_t>(kDefaultEmbeddingDim);
  std::string backend = "stub";  // stub | remote
  std::int64_t judge_timeout_ms = 10000;
  std::int64_t vision_timeout_ms = 10000;
  std::int64_t embedding_timeout_ms = 2000;
  std::int64_t retries = 1;
  std::int64_t max_in_flight = 8;
  std::string judge_url;
  std::string vision_url;
  std::string embedding_url;
  std::string cross_modal_url;
  std::string intent_url;
  std::string dispute_url;

  // Stub fixtures (paths resolved against the config file's directory).
  std::string images;         // image fixture directory or JSONL manifest
  std::string judge_script;   // scripted judge triggers
  std::string replay;         // recorded per-item judge decisions
  std::string rules;          // rule set for offline evaluation
  std::string intent_table;   // scripted intent parser
  std::string dispute_table;  // scripted dispute agent

  // Storage and listener.
  std::string storage_root = "feedwarden-data";
  std::string host = "127.0.0.1";
  std::int64_t port = 8080;

  nlohmann::json to_json() const;
  AdjudicationConfig adjudication() const;
  PipelineMode pipeline_mode() const { return parse_pipeline_mode(mode); }
};

// Throws Error(kValidationError) naming the offending key.
void validate(const ServiceConfig& config);

// Parses JSON text. Empty text yields the defaults. Throws Error(kParseError)
// with a "line N" location, or Error(kValidationError) naming the key.
// Relative fixture and storage paths resolve against `base_dir`.
ServiceConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ServiceConfig load_config(const std::filesystem::path& path);

}  // namespace feedwarden
