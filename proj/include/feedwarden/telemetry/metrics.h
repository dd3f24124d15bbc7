#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/core/model.h"
#include "feedwarden/telemetry/event_log.h"

namespace feedwarden {

/// Binary confusion counts against ground truth.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Unset values mean the metric is undefined (zero denominator), never 0.
struct DerivedMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

DerivedMetrics derive_metrics(const ConfusionCounts& c);

// Half-away-from-zero rounding used for every reported figure.
double round_to(double value, int decimals);
std::optional<double> round_to(const std::optional<double>& value, int decimals);

// (baseline.fp - treatment.fp) / baseline.fp; throws Error(kZeroBaselineFP).
double fp_reduction(const ConfusionCounts& baseline, const ConfusionCounts& treatment);

// Inclusive usage-day range; unset bounds are open.
struct DayWindow {
  std::optional<int> first_day;
  std::optional<int> last_day;

  bool contains(int day) const;
};

/// Online proxy metrics: unappealed blocks are true positives, appeals are
/// false positives, manual filter additions are false negatives.
struct ProxyMetrics {
  std::int64_t exposures = 0;
  std::int64_t orig_blocks = 0;
  std::int64_t appeals_passed = 0;
  std::int64_t final_blocks = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fp_rate;
  std::optional<double> fn_rate;  // over exposures that stayed visible
};

ProxyMetrics proxy_metrics(const std::vector<TelemetryEvent>& events, const DayWindow& window = {});

struct LayerRow {
  Layer layer = Layer::kUnknown;
  std::int64_t exposures = 0;
  std::int64_t orig_blocks = 0;
  std::int64_t appeals = 0;
  std::int64_t final_blocks = 0;
  std::optional<double> block_rate;
  std::optional<double> appeal_rate;
};

// One row per layer in the order cloud, pass, clip_fallback, unknown.
std::vector<LayerRow> layer_distribution(const std::vector<TelemetryEvent>& events);

struct RuleRow {
  std::string rule_id;
  std::int64_t orig_blocks = 0;
  std::int64_t appeals = 0;
  std::int64_t final_blocks = 0;
  std::optional<double> appeal_rate;
  double block_share = 0.0;  // share of all orig blocks
};

struct LongTailReport {
  std::vector<RuleRow> top_triggered;  // by orig blocks desc, then rule id
  std::vector<RuleRow> top_appealed;   // appealed rules by appeal rate desc
  std::size_t rule_count = 0;
  std::int64_t total_blocks = 0;
  double top_share = 0.0;          // share of blocks caused by top_triggered
  double single_trigger_fraction = 0.0;
  double low_trigger_fraction = 0.0;  // rules with <= low_trigger_max blocks
  std::int64_t low_trigger_max = 2;
};

LongTailReport rule_longtail(const std::vector<TelemetryEvent>& events, std::size_t top_n,
                             std::int64_t low_trigger_max = 2);

struct GovernanceDay {
  int day = 0;
  std::int64_t orig_blocks = 0;
  std::int64_t appeals = 0;
  std::int64_t net_interceptions = 0;  // final blocks
  std::int64_t manual_events = 0;
  std::optional<double> manual_per_final_block;
};

struct GovernanceWindow {
  int first_day = 0;
  int last_day = 0;
  std::int64_t net_interceptions = 0;
  std::int64_t manual_events = 0;
  std::optional<double> manual_per_final_block;
};

struct GovernanceReport {
  std::vector<GovernanceDay> days;
  GovernanceWindow early;
  GovernanceWindow late;
  std::optional<double> interception_gain;      // (late - early) / early
  std::optional<double> manual_cost_reduction;  // (early - late) / early, on ratios
};

// Covers days 1..days; the windows are the first and last three days.
GovernanceReport governance_efficiency(const std::vector<TelemetryEvent>& events, int days);

nlohmann::json to_json(const ConfusionCounts& c);
nlohmann::json to_json(const DerivedMetrics& m);
nlohmann::json to_json(const ProxyMetrics& m);
nlohmann::json to_json(const std::vector<LayerRow>& rows);
nlohmann::json to_json(const LongTailReport& report);
nlohmann::json to_json(const GovernanceReport& report);

// Fixed-width text tables; undefined values render as "-".
std::string format_percent(const std::optional<double>& ratio);
std::string format_decimal(const std::optional<double>& value);
std::string render_metrics_line(const ConfusionCounts& c);
std::string render_layer_table(const std::vector<LayerRow>& rows);
std::string render_longtail_table(const LongTailReport& report);
std::string render_governance_table(const GovernanceReport& report);

}  // namespace feedwarden
