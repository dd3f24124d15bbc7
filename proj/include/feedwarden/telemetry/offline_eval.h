#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/core/model.h"
#include "feedwarden/pipeline/adjudicator.h"
#include "feedwarden/service/config.h"
#include "feedwarden/telemetry/metrics.h"

namespace feedwarden {

struct PersonaBreakdown {
  Persona persona = Persona::kA;
  std::int64_t n = 0;
  ConfusionCounts counts;
};

/// Scores of one ablation over a labelled dataset. Personas appear in the
/// order A, B, C and only when present in the dataset.
struct EvalReport {
  PipelineMode ablation = PipelineMode::kFull;
  std::int64_t n = 0;
  ConfusionCounts overall;
  std::vector<PersonaBreakdown> personas;
};

// Reads a JSONL dataset of FeedItems. Throws Error(kDatasetMalformed) naming
// the line, or Error(kMissingGroundTruth) when an item has no label.
std::vector<FeedItem> load_dataset(const std::filesystem::path& path);

// Reads a rule set: a JSON array of rules or {"rules": [...]}.
std::vector<Rule> load_rule_set(const std::filesystem::path& path);

// Adjudicates every item under the ablation's wiring and scores the decisions
// against ground truth, overall and per persona.
EvalReport evaluate(const std::vector<FeedItem>& items, const std::vector<Rule>& rules,
                    const Backends& backends, const AdjudicationConfig& config);

// Loads the dataset and the rules named by the config, builds stub backends
// from the config and evaluates under `ablation`.
EvalReport run_offline_eval(const std::filesystem::path& dataset, const ServiceConfig& config,
                            PipelineMode ablation);

nlohmann::json to_json(const EvalReport& report);
// Fixed-width table mirroring the published layout; one row per scope.
std::string render_eval_report(const EvalReport& report);

}  // namespace feedwarden
