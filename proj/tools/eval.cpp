// eval: offline benchmark runs, telemetry tables and metric arithmetic.
//
//   eval run --dataset <jsonl> --config <json> --ablation <mode> --report <path>
//   eval tables --log <ndjson> --out <dir>
//   eval metrics --counts tp,fp,tn,fn

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/error.h"
#include "feedwarden/service/config.h"
#include "feedwarden/telemetry/event_log.h"
#include "feedwarden/telemetry/metrics.h"
#include "feedwarden/telemetry/offline_eval.h"

namespace fs = std::filesystem;
using namespace feedwarden;

namespace {

void write_pair(const fs::path& stem, const nlohmann::json& json, const std::string& text) {
  write_file_atomic(fs::path(stem).replace_extension(".json"), json.dump(2) + "\n");
  write_file_atomic(fs::path(stem).replace_extension(".txt"), text);
}

int run(const std::string& dataset, const std::string& config_path, const std::string& ablation,
        const std::string& report_path) {
  const ServiceConfig config = load_config(config_path);
  const EvalReport report = run_offline_eval(dataset, config, parse_pipeline_mode(ablation));
  const std::string text = render_eval_report(report);
  if (!report_path.empty()) write_pair(report_path, to_json(report), text);
  std::cout << text;
  return 0;
}

int tables(const std::string& log_path, const std::string& out_dir, int top, int low_max, int days) {
  const std::vector<TelemetryEvent> events = read_event_log(log_path);
  fs::create_directories(out_dir);
  const auto layers = layer_distribution(events);
  const auto longtail = rule_longtail(events, static_cast<std::size_t>(top), low_max);
  const auto governance = governance_efficiency(events, days);
  write_pair(fs::path(out_dir) / "layers", to_json(layers), render_layer_table(layers));
  write_pair(fs::path(out_dir) / "longtail", to_json(longtail), render_longtail_table(longtail));
  write_pair(fs::path(out_dir) / "governance", to_json(governance), render_governance_table(governance));
  nlohmann::json summary = to_json(proxy_metrics(events));
  write_file_atomic(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
  std::cout << render_layer_table(layers) << "\n"
            << render_longtail_table(longtail) << "\n"
            << render_governance_table(governance);
  return 0;
}

ConfusionCounts parse_counts(const std::string& text) {
  std::vector<std::int64_t> values;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || v < 0) {
      throw Error(ErrorCode::kInvalidArgument, "counts must be four non-negative integers tp,fp,tn,fn");
    }
    values.push_back(v);
  }
  if (values.size() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "counts must be four non-negative integers tp,fp,tn,fn");
  }
  return {values[0], values[1], values[2], values[3]};
}

int metrics(const std::string& counts_text) {
  const ConfusionCounts counts = parse_counts(counts_text);
  nlohmann::json j = to_json(counts);
  j.update(to_json(derive_metrics(counts)));
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedwarden offline evaluation and telemetry tables"};
  app.require_subcommand(1);

  std::string dataset, config_path, ablation = "full", report;
  auto* run_cmd = app.add_subcommand("run", "Evaluate a labelled dataset under one ablation");
  run_cmd->add_option("--dataset", dataset, "JSONL dataset of labelled feed items")->required();
  run_cmd->add_option("--config", config_path, "Config naming rules, replay and image fixtures")->required();
  run_cmd->add_option("--ablation", ablation, "full | remove_image | remove_ma | keyword_baseline | text_only_baseline");
  run_cmd->add_option("--report", report, "Report path; writes <stem>.json and <stem>.txt");

  std::string log_path, out_dir;
  int top = 15, low_max = 2, days = 7;
  auto* tables_cmd = app.add_subcommand("tables", "Render layer, long-tail and governance tables");
  tables_cmd->add_option("--log", log_path, "NDJSON telemetry log")->required();
  tables_cmd->add_option("--out", out_dir, "Output directory")->required();
  tables_cmd->add_option("--top", top, "Rules in the long-tail table")->check(CLI::PositiveNumber);
  tables_cmd->add_option("--m", low_max, "Low-trigger cutoff")->check(CLI::NonNegativeNumber);
  tables_cmd->add_option("--days", days, "Usage days covered")->check(CLI::PositiveNumber);

  std::string counts;
  auto* metrics_cmd = app.add_subcommand("metrics", "Precision, recall and F1 from confusion counts");
  metrics_cmd->add_option("--counts", counts, "tp,fp,tn,fn")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(dataset, config_path, ablation, report);
    if (*tables_cmd) return tables(log_path, out_dir, top, low_max, days);
    if (*metrics_cmd) return metrics(counts);
  } catch (const Error& e) {
    std::cerr << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
