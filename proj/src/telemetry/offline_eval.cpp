#include "feedwarden/telemetry/offline_eval.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/error.h"
#include "feedwarden/core/json_codec.h"
#include "feedwarden/core/text.h"
#include "feedwarden/service/engine.h"

namespace feedwarden {

namespace {

constexpr Persona kPersonaOrder[] = {Persona::kA, Persona::kB, Persona::kC};

void score(ConfusionCounts& c, int truth, int decision) {
  if (truth == 1) {
    (decision == 1 ? c.tp : c.fn) += 1;
  } else {
    (decision == 1 ? c.fp : c.tn) += 1;
  }
}

Json counts_and_metrics(std::int64_t n, const ConfusionCounts& c) {
  Json j = to_json(c);
  j.update(to_json(derive_metrics(c)));
  j["n"] = n;
  return j;
}

std::string table_row(const std::string& scope, std::int64_t n, const ConfusionCounts& c) {
  char prefix[64];
  std::snprintf(prefix, sizeof prefix, "%-10s %5lld ", scope.c_str(), static_cast<long long>(n));
  return prefix + render_metrics_line(c) + "\n";
}

}  // namespace

std::vector<FeedItem> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kDatasetMalformed, "cannot open dataset " + path.string());
  std::vector<FeedItem> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    FeedItem item;
    try {
      item = Json::parse(line).get<FeedItem>();
      check_feed_item(item);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kDatasetMalformed, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!item.ground_truth) {
      throw Error(ErrorCode::kMissingGroundTruth,
                  "line " + std::to_string(line_no) + ": item " + item.id + " has no ground_truth");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<Rule> load_rule_set(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kValidationError, "rules: " + path.string() + ": " + e.what());
  }
  const Json& list = j.is_object() ? j.at("rules") : j;
  std::vector<Rule> rules;
  for (const auto& r : list) {
    Rule rule = r.get<Rule>();
    check_rule(rule);
    rules.push_back(std::move(rule));
  }
  return rules;
}

EvalReport evaluate(const std::vector<FeedItem>& items, const std::vector<Rule>& rules,
                    const Backends& backends, const AdjudicationConfig& config) {
  Adjudicator adjudicator(backends, config, nullptr, nullptr, [] { return std::int64_t{0}; });
  AdjudicationContext context;
  context.user_id = "offline-eval";
  context.rules = std::make_shared<const std::vector<Rule>>(rules);

  EvalReport report;
  report.ablation = config.mode;
  std::map<Persona, PersonaBreakdown> by_persona;
  for (const auto& item : items) {
    if (!item.ground_truth) throw Error(ErrorCode::kMissingGroundTruth, "item " + item.id + " has no ground_truth");
    const Adjudication a = adjudicator.adjudicate(item, context).adjudication;
    ++report.n;
    score(report.overall, *item.ground_truth, a.y_block);
    if (item.persona) {
      auto& p = by_persona[*item.persona];
      p.persona = *item.persona;
      ++p.n;
      score(p.counts, *item.ground_truth, a.y_block);
    }
  }
  for (Persona persona : kPersonaOrder) {
    if (auto it = by_persona.find(persona); it != by_persona.end()) report.personas.push_back(it->second);
  }
  return report;
}

EvalReport run_offline_eval(const std::filesystem::path& dataset, const ServiceConfig& config,
                            PipelineMode ablation) {
  if (config.rules.empty()) throw Error(ErrorCode::kValidationError, "rules: required for offline evaluation");
  const std::vector<FeedItem> items = load_dataset(dataset);
  const std::vector<Rule> rules = load_rule_set(config.rules);
  const EngineBackends b = make_backends(config);
  AdjudicationConfig adjudication = config.adjudication();
  adjudication.mode = ablation;
  return evaluate(items, rules, Backends{b.vision, b.judge, b.text, b.cross_modal, b.cache}, adjudication);
}

Json to_json(const EvalReport& report) {
  Json personas = Json::object();
  for (const auto& p : report.personas) {
    personas[std::string(to_string(p.persona))] = counts_and_metrics(p.n, p.counts);
  }
  return {{"ablation", to_string(report.ablation)},
          {"n", report.n},
          {"overall", counts_and_metrics(report.n, report.overall)},
          {"personas", personas}};
}

std::string render_eval_report(const EvalReport& report) {
  std::ostringstream out;
  out << "Ablation: " << to_string(report.ablation) << "\n";
  char header[128];
  std::snprintf(header, sizeof header, "%-10s %5s %6s %6s %6s %6s %10s %8s %9s\n", "Scope", "N", "TP", "FP",
                "TN", "FN", "Precision", "Recall", "F1");
  out << header;
  out << table_row("Overall", report.n, report.overall);
  for (const auto& p : report.personas) {
    out << table_row("Persona " + std::string(to_string(p.persona)), p.n, p.counts);
  }
  return out.str();
}

}  // namespace feedwarden
