#include "feedwarden/telemetry/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "feedwarden/core/error.h"
#include "feedwarden/core/json_codec.h"

namespace feedwarden {

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> harmonic(const std::optional<double>& p, const std::optional<double>& r) {
  if (!p || !r || *p + *r == 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

Json rounded(const std::optional<double>& v, int decimals = 4) {
  return optional_to_json(round_to(v, decimals));
}

std::string printf_string(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

constexpr Layer kLayerOrder[] = {Layer::kCloud, Layer::kPass, Layer::kClipFallback, Layer::kUnknown};

GovernanceWindow summarize_window(const std::vector<GovernanceDay>& days, int first, int last) {
  GovernanceWindow w;
  w.first_day = first;
  w.last_day = last;
  for (const auto& d : days) {
    if (d.day < first || d.day > last) continue;
    w.net_interceptions += d.net_interceptions;
    w.manual_events += d.manual_events;
  }
  w.manual_per_final_block = ratio(w.manual_events, w.net_interceptions);
  return w;
}

}  // namespace

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

DerivedMetrics derive_metrics(const ConfusionCounts& c) {
  DerivedMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

std::optional<double> round_to(const std::optional<double>& value, int decimals) {
  if (!value) return std::nullopt;
  return round_to(*value, decimals);
}

double fp_reduction(const ConfusionCounts& baseline, const ConfusionCounts& treatment) {
  if (baseline.fp == 0) {
    throw Error(ErrorCode::kZeroBaselineFP, "baseline has no false positives");
  }
  return static_cast<double>(baseline.fp - treatment.fp) / static_cast<double>(baseline.fp);
}

bool DayWindow::contains(int day) const {
  return (!first_day || day >= *first_day) && (!last_day || day <= *last_day);
}

ProxyMetrics proxy_metrics(const std::vector<TelemetryEvent>& events, const DayWindow& window) {
  ProxyMetrics m;
  for (const auto& e : events) {
    if (!window.contains(e.day_index)) continue;
    switch (e.kind) {
      case EventKind::kExposure: ++m.exposures; break;
      case EventKind::kOrigBlock: ++m.orig_blocks; break;
      case EventKind::kAppealPassed: ++m.appeals_passed; break;
      case EventKind::kManualFilterAdd: ++m.fn; break;
      case EventKind::kManualEvent: break;
    }
  }
  m.final_blocks = m.orig_blocks - m.appeals_passed;
  m.tp = m.final_blocks;
  m.fp = m.appeals_passed;
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.f1 = harmonic(m.precision, m.recall);
  m.fp_rate = ratio(m.fp, m.tp + m.fp);
  m.fn_rate = ratio(m.fn, m.exposures - m.final_blocks);
  return m;
}

std::vector<LayerRow> layer_distribution(const std::vector<TelemetryEvent>& events) {
  std::map<Layer, LayerRow> rows;
  for (Layer layer : kLayerOrder) rows[layer].layer = layer;
  for (const auto& e : events) {
    LayerRow& row = rows[e.layer];
    if (e.kind == EventKind::kExposure) ++row.exposures;
    if (e.kind == EventKind::kOrigBlock) ++row.orig_blocks;
    if (e.kind == EventKind::kAppealPassed) ++row.appeals;
  }
  std::vector<LayerRow> out;
  for (Layer layer : kLayerOrder) {
    LayerRow row = rows[layer];
    row.final_blocks = row.orig_blocks - row.appeals;
    row.block_rate = ratio(row.orig_blocks, row.exposures);
    row.appeal_rate = ratio(row.appeals, row.orig_blocks);
    out.push_back(row);
  }
  return out;
}

LongTailReport rule_longtail(const std::vector<TelemetryEvent>& events, std::size_t top_n,
                             std::int64_t low_trigger_max) {
  std::map<std::string, RuleRow> by_rule;
  LongTailReport report;
  report.low_trigger_max = low_trigger_max;
  for (const auto& e : events) {
    if (!e.rule_id) continue;
    if (e.kind != EventKind::kOrigBlock && e.kind != EventKind::kAppealPassed) continue;
    RuleRow& row = by_rule[*e.rule_id];
    row.rule_id = *e.rule_id;
    if (e.kind == EventKind::kOrigBlock) {
      ++row.orig_blocks;
      ++report.total_blocks;
    } else {
      ++row.appeals;
    }
  }

  std::vector<RuleRow> rows;
  std::size_t single = 0;
  std::size_t low = 0;
  for (auto& [id, row] : by_rule) {
    row.final_blocks = row.orig_blocks - row.appeals;
    row.appeal_rate = ratio(row.appeals, row.orig_blocks);
    row.block_share = report.total_blocks == 0
                          ? 0.0
                          : static_cast<double>(row.orig_blocks) / static_cast<double>(report.total_blocks);
    if (row.orig_blocks == 1) ++single;
    if (row.orig_blocks <= low_trigger_max) ++low;
    rows.push_back(row);
  }
  report.rule_count = rows.size();
  if (!rows.empty()) {
    report.single_trigger_fraction = static_cast<double>(single) / static_cast<double>(rows.size());
    report.low_trigger_fraction = static_cast<double>(low) / static_cast<double>(rows.size());
  }

  std::vector<RuleRow> triggered = rows;
  std::sort(triggered.begin(), triggered.end(), [](const RuleRow& a, const RuleRow& b) {
    if (a.orig_blocks != b.orig_blocks) return a.orig_blocks > b.orig_blocks;
    return a.rule_id < b.rule_id;
  });
  if (triggered.size() > top_n) triggered.resize(top_n);
  std::int64_t top_blocks = 0;
  for (const auto& row : triggered) top_blocks += row.orig_blocks;
  report.top_share = report.total_blocks == 0
                         ? 0.0
                         : static_cast<double>(top_blocks) / static_cast<double>(report.total_blocks);
  report.top_triggered = std::move(triggered);

  std::vector<RuleRow> appealed;
  for (const auto& row : rows) {
    if (row.appeals > 0 && row.appeal_rate) appealed.push_back(row);
  }
  std::sort(appealed.begin(), appealed.end(), [](const RuleRow& a, const RuleRow& b) {
    // Compare a.appeals/a.orig against b.appeals/b.orig exactly.
    const std::int64_t lhs = a.appeals * b.orig_blocks;
    const std::int64_t rhs = b.appeals * a.orig_blocks;
    if (lhs != rhs) return lhs > rhs;
    return a.rule_id < b.rule_id;
  });
  if (appealed.size() > top_n) appealed.resize(top_n);
  report.top_appealed = std::move(appealed);
  return report;
}

GovernanceReport governance_efficiency(const std::vector<TelemetryEvent>& events, int days) {
  GovernanceReport report;
  if (days < 1) throw Error(ErrorCode::kInvalidArgument, "days must be >= 1");
  report.days.resize(static_cast<std::size_t>(days));
  for (int d = 0; d < days; ++d) report.days[static_cast<std::size_t>(d)].day = d + 1;
  for (const auto& e : events) {
    if (e.day_index < 1 || e.day_index > days) continue;
    GovernanceDay& day = report.days[static_cast<std::size_t>(e.day_index - 1)];
    switch (e.kind) {
      case EventKind::kOrigBlock: ++day.orig_blocks; break;
      case EventKind::kAppealPassed:
        ++day.appeals;
        ++day.manual_events;
        break;
      case EventKind::kManualFilterAdd: ++day.manual_events; break;
      case EventKind::kManualEvent:
        if (e.detail == kDetailSlider) ++day.manual_events;
        break;
      case EventKind::kExposure: break;
    }
  }
  for (auto& day : report.days) {
    day.net_interceptions = day.orig_blocks - day.appeals;
    day.manual_per_final_block = ratio(day.manual_events, day.net_interceptions);
  }
  const int span = std::min(3, days);
  report.early = summarize_window(report.days, 1, span);
  report.late = summarize_window(report.days, days - span + 1, days);
  report.interception_gain = ratio(report.late.net_interceptions - report.early.net_interceptions,
                                   report.early.net_interceptions);
  if (report.early.manual_per_final_block && report.late.manual_per_final_block &&
      *report.early.manual_per_final_block != 0.0) {
    report.manual_cost_reduction =
        (*report.early.manual_per_final_block - *report.late.manual_per_final_block) /
        *report.early.manual_per_final_block;
  }
  return report;
}

nlohmann::json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

nlohmann::json to_json(const DerivedMetrics& m) {
  return {{"precision", rounded(m.precision)}, {"recall", rounded(m.recall)}, {"f1", rounded(m.f1)}};
}

nlohmann::json to_json(const ProxyMetrics& m) {
  return {{"exposures", m.exposures},       {"orig_blocks", m.orig_blocks},
          {"appeals_passed", m.appeals_passed}, {"final_blocks", m.final_blocks},
          {"tp", m.tp},                     {"fp_proxy", m.fp},
          {"fn_proxy", m.fn},               {"precision", rounded(m.precision)},
          {"recall", rounded(m.recall)},    {"f1", rounded(m.f1)},
          {"fp_rate", rounded(m.fp_rate)},  {"fn_rate", rounded(m.fn_rate)}};
}

nlohmann::json to_json(const std::vector<LayerRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"layer", to_string(r.layer)},
                   {"exposures", r.exposures},
                   {"orig_blocks", r.orig_blocks},
                   {"appeals", r.appeals},
                   {"final_blocks", r.final_blocks},
                   {"block_rate", rounded(r.block_rate)},
                   {"appeal_rate", rounded(r.appeal_rate)}});
  }
  return out;
}

namespace {

Json rule_rows_json(const std::vector<RuleRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"rule_id", r.rule_id},
                   {"orig_blocks", r.orig_blocks},
                   {"appeals", r.appeals},
                   {"final_blocks", r.final_blocks},
                   {"appeal_rate", rounded(r.appeal_rate)},
                   {"block_share", round_to(r.block_share, 4)}});
  }
  return out;
}

Json window_json(const GovernanceWindow& w) {
  return {{"first_day", w.first_day},
          {"last_day", w.last_day},
          {"net_interceptions", w.net_interceptions},
          {"manual_events", w.manual_events},
          {"manual_per_final_block", rounded(w.manual_per_final_block)}};
}

}  // namespace

nlohmann::json to_json(const LongTailReport& report) {
  return {{"top_triggered", rule_rows_json(report.top_triggered)},
          {"top_appealed", rule_rows_json(report.top_appealed)},
          {"rule_count", report.rule_count},
          {"total_blocks", report.total_blocks},
          {"top_share", round_to(report.top_share, 4)},
          {"single_trigger_fraction", round_to(report.single_trigger_fraction, 4)},
          {"low_trigger_fraction", round_to(report.low_trigger_fraction, 4)},
          {"low_trigger_max", report.low_trigger_max}};
}

nlohmann::json to_json(const GovernanceReport& report) {
  Json days = Json::array();
  for (const auto& d : report.days) {
    days.push_back({{"day", d.day},
                    {"orig_blocks", d.orig_blocks},
                    {"appeals", d.appeals},
                    {"net_interceptions", d.net_interceptions},
                    {"manual_events", d.manual_events},
                    {"manual_per_final_block", rounded(d.manual_per_final_block)}});
  }
  return {{"days", std::move(days)},
          {"early", window_json(report.early)},
          {"late", window_json(report.late)},
          {"interception_gain", rounded(report.interception_gain)},
          {"manual_cost_reduction", rounded(report.manual_cost_reduction)}};
}

std::string format_percent(const std::optional<double>& r) {
  if (!r) return "-";
  return printf_string("%.2f%%", round_to(*r * 100.0, 2));
}

std::string format_decimal(const std::optional<double>& value) {
  if (!value) return "-";
  return printf_string("%.4f", round_to(*value, 4));
}

std::string render_metrics_line(const ConfusionCounts& c) {
  const DerivedMetrics m = derive_metrics(c);
  return printf_string("%6lld %6lld %6lld %6lld %10s %8s %9s", static_cast<long long>(c.tp),
                       static_cast<long long>(c.fp), static_cast<long long>(c.tn),
                       static_cast<long long>(c.fn), format_decimal(m.precision).c_str(),
                       format_decimal(m.recall).c_str(), format_decimal(m.f1).c_str());
}

std::string render_layer_table(const std::vector<LayerRow>& rows) {
  std::ostringstream out;
  out << printf_string("%-14s %10s %12s %8s %12s %11s %12s\n", "Layer", "Exposures", "Orig.Blocks",
                       "Appeals", "Final.Blocks", "Block.Rate", "Appeal.Rate");
  LayerRow total;
  for (const auto& r : rows) {
    out << printf_string("%-14s %10lld %12lld %8lld %12lld %11s %12s\n",
                         std::string(to_string(r.layer)).c_str(), static_cast<long long>(r.exposures),
                         static_cast<long long>(r.orig_blocks), static_cast<long long>(r.appeals),
                         static_cast<long long>(r.final_blocks), format_percent(r.block_rate).c_str(),
                         format_percent(r.appeal_rate).c_str());
    total.exposures += r.exposures;
    total.orig_blocks += r.orig_blocks;
    total.appeals += r.appeals;
    total.final_blocks += r.final_blocks;
  }
  out << printf_string("%-14s %10lld %12lld %8lld %12lld %11s %12s\n", "total",
                       static_cast<long long>(total.exposures), static_cast<long long>(total.orig_blocks),
                       static_cast<long long>(total.appeals), static_cast<long long>(total.final_blocks),
                       format_percent(ratio(total.orig_blocks, total.exposures)).c_str(),
                       format_percent(ratio(total.appeals, total.orig_blocks)).c_str());
  return out.str();
}

std::string render_longtail_table(const LongTailReport& report) {
  std::ostringstream out;
  auto section = [&](const char* title, const std::vector<RuleRow>& rows) {
    out << title << "\n";
    out << printf_string("%-4s %-16s %12s %8s %12s %12s\n", "Rank", "Rule", "Orig.Blocks", "Appeals",
                         "Final.Blocks", "Appeal.Rate");
    int rank = 0;
    for (const auto& r : rows) {
      out << printf_string("%-4d %-16s %12lld %8lld %12lld %12s\n", ++rank, r.rule_id.c_str(),
                           static_cast<long long>(r.orig_blocks), static_cast<long long>(r.appeals),
                           static_cast<long long>(r.final_blocks), format_percent(r.appeal_rate).c_str());
    }
  };
  section("Most triggered rules", report.top_triggered);
  out << "\n";
  section("Most appealed rules", report.top_appealed);
  out << "\n";
  out << printf_string("rules=%zu total_blocks=%lld top_share=%s single_trigger=%s low_trigger(<=%lld)=%s\n",
                       report.rule_count, static_cast<long long>(report.total_blocks),
                       format_percent(report.top_share).c_str(),
                       format_percent(report.single_trigger_fraction).c_str(),
                       static_cast<long long>(report.low_trigger_max),
                       format_percent(report.low_trigger_fraction).c_str());
  return out.str();
}

std::string render_governance_table(const GovernanceReport& report) {
  std::ostringstream out;
  out << printf_string("%-4s %12s %8s %10s %8s %16s\n", "Day", "Orig.Blocks", "Appeals", "Net.Blocks",
                       "Manual", "Manual/Block");
  for (const auto& d : report.days) {
    out << printf_string("%-4d %12lld %8lld %10lld %8lld %16s\n", d.day,
                         static_cast<long long>(d.orig_blocks), static_cast<long long>(d.appeals),
                         static_cast<long long>(d.net_interceptions),
                         static_cast<long long>(d.manual_events),
                         format_decimal(d.manual_per_final_block).c_str());
  }
  out << printf_string("days %d-%d: net=%lld manual=%lld manual/block=%s\n", report.early.first_day,
                       report.early.last_day, static_cast<long long>(report.early.net_interceptions),
                       static_cast<long long>(report.early.manual_events),
                       format_decimal(report.early.manual_per_final_block).c_str());
  out << printf_string("days %d-%d: net=%lld manual=%lld manual/block=%s\n", report.late.first_day,
                       report.late.last_day, static_cast<long long>(report.late.net_interceptions),
                       static_cast<long long>(report.late.manual_events),
                       format_decimal(report.late.manual_per_final_block).c_str());
  out << "interception gain: " << format_percent(report.interception_gain) << "\n";
  out << "manual cost reduction: " << format_percent(report.manual_cost_reduction) << "\n";
  return out.str();
}

}  // namespace feedwarden
