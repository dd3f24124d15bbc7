#include "feedwarden/pipeline/adjudicator.h"

#include <chrono>
#include <cstdio>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/error.h"
#include "feedwarden/core/hash.h"
#include "feedwarden/core/json_codec.h"

namespace feedwarden {

namespace {

FallbackMethod parse_fallback_method(std::string_view text) {
  if (text == "cross_modal") return FallbackMethod::kCrossModal;
  if (text == "keyword") return FallbackMethod::kKeyword;
  if (text == "unavailable") return FallbackMethod::kUnavailable;
  return FallbackMethod::kNoCandidates;
}

std::string format_similarity(double sim) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", sim);
  return buf;
}

}  // namespace

nlohmann::json to_json(const Adjudication& a) {
  return {{"item_id", a.item_id},
          {"y_block", a.y_block},
          {"y_star", a.y_star},
          {"star_count", a.star_count},
          {"layer", to_string(a.layer)},
          {"triggered_rule_id", optional_to_json(a.triggered_rule_id)},
          {"reason", a.reason},
          {"dossier_id", optional_to_json(a.dossier_id)},
          {"latency_ms", a.latency_ms}};
}

Adjudication adjudication_from_json(const nlohmann::json& j) {
  Adjudication a;
  a.item_id = j.at("item_id").get<std::string>();
  a.y_block = j.at("y_block").get<int>();
  a.y_star = j.at("y_star").get<double>();
  a.star_count = j.at("star_count").get<int>();
  a.layer = parse_layer(j.at("layer").get<std::string>());
  a.triggered_rule_id = optional_string(j, "triggered_rule_id");
  a.reason = j.value("reason", "");
  a.dossier_id = optional_string(j, "dossier_id");
  a.latency_ms = j.value("latency_ms", std::int64_t{0});
  return a;
}

nlohmann::json to_json(const Dossier& d) {
  nlohmann::json fallback = nullptr;
  if (d.fallback) {
    fallback = {{"failure", d.fallback->failure},
                {"method", to_string(d.fallback->method)},
                {"max_similarity", optional_to_json(d.fallback->max_similarity)},
                {"matched_rule_id", optional_to_json(d.fallback->matched_rule_id)}};
  }
  return {{"dossier_id", d.dossier_id},
          {"user_id", d.user_id},
          {"item", d.item},
          {"rule_versions", d.rule_versions},
          {"evidence", d.evidence ? nlohmann::json(*d.evidence) : nlohmann::json()},
          {"verdict", d.verdict ? nlohmann::json(*d.verdict) : nlohmann::json()},
          {"fallback", std::move(fallback)},
          {"config", d.config},
          {"timestamp", d.timestamp_ms},
          {"y_block", d.y_block},
          {"layer", to_string(d.layer)},
          {"triggered_rule_id", optional_to_json(d.triggered_rule_id)}};
}

Dossier dossier_from_json(const nlohmann::json& j) {
  Dossier d;
  d.dossier_id = j.at("dossier_id").get<std::string>();
  d.user_id = j.value("user_id", "");
  d.item = j.at("item").get<FeedItem>();
  d.rule_versions = j.at("rule_versions").get<std::map<std::string, std::int64_t>>();
  if (!j.at("evidence").is_null()) d.evidence = j.at("evidence").get<VisualEvidence>();
  if (!j.at("verdict").is_null()) d.verdict = j.at("verdict").get<JudgeVerdict>();
  if (const auto& f = j.at("fallback"); !f.is_null()) {
    FallbackRecord record;
    record.failure = f.value("failure", "");
    record.method = parse_fallback_method(f.value("method", ""));
    if (auto it = f.find("max_similarity"); it != f.end() && !it->is_null()) {
      record.max_similarity = it->get<double>();
    }
    record.matched_rule_id = optional_string(f, "matched_rule_id");
    d.fallback = std::move(record);
  }
  d.config = j.at("config");
  d.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  d.y_block = j.at("y_block").get<int>();
  d.layer = parse_layer(j.at("layer").get<std::string>());
  d.triggered_rule_id = optional_string(j, "triggered_rule_id");
  return d;
}

DossierStore::DossierStore(std::filesystem::path file) {
  file_ = std::make_unique<AppendOnlyFile>(std::move(file), [this](std::string_view line) {
    try {
      auto dossier = std::make_shared<const Dossier>(dossier_from_json(nlohmann::json::parse(line)));
      dossiers_.emplace(dossier->dossier_id, std::move(dossier));
      return true;
    } catch (const std::exception&) {
      return false;
    }
  });
}

std::shared_ptr<const Dossier> DossierStore::put(Dossier dossier) {
  std::lock_guard lock(mutex_);
  if (auto it = dossiers_.find(dossier.dossier_id); it != dossiers_.end()) return it->second;
  if (file_) file_->append(to_json(dossier).dump());
  auto stored = std::make_shared<const Dossier>(std::move(dossier));
  dossiers_.emplace(stored->dossier_id, stored);
  return stored;
}

std::shared_ptr<const Dossier> DossierStore::get(std::string_view id) const {
  std::lock_guard lock(mutex_);
  auto it = dossiers_.find(id);
  return it == dossiers_.end() ? nullptr : it->second;
}

std::size_t DossierStore::size() const {
  std::lock_guard lock(mutex_);
  return dossiers_.size();
}

std::vector<std::shared_ptr<const Dossier>> DossierStore::all() const {
  std::lock_guard lock(mutex_);
  std::vector<std::shared_ptr<const Dossier>> out;
  out.reserve(dossiers_.size());
  for (const auto& [id, d] : dossiers_) out.push_back(d);
  return out;
}

std::string_view to_string(PipelineMode mode) {
  switch (mode) {
    case PipelineMode::kFull: return "full";
    case PipelineMode::kRemoveImage: return "remove_image";
    case PipelineMode::kRemoveMa: return "remove_ma";
    case PipelineMode::kKeywordBaseline: return "keyword_baseline";
    case PipelineMode::kTextOnlyBaseline: return "text_only_baseline";
  }
  return "full";
}

PipelineMode parse_pipeline_mode(std::string_view text) {
  if (text == "full") return PipelineMode::kFull;
  if (text == "remove_image") return PipelineMode::kRemoveImage;
  if (text == "remove_ma") return PipelineMode::kRemoveMa;
  if (text == "keyword_baseline") return PipelineMode::kKeywordBaseline;
  if (text == "text_only_baseline") return PipelineMode::kTextOnlyBaseline;
  throw Error(ErrorCode::kInvalidArgument, "unknown ablation '" + std::string(text) + "'");
}

nlohmann::json AdjudicationConfig::to_json() const {
  return {{"tau_clip", tau_clip},
          {"star_one", stars.one},
          {"star_two", stars.two},
          {"star_k", star_k},
          {"audit_all", audit_all},
          {"mode", to_string(mode)}};
}

Clock system_clock_ms() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

Adjudicator::Adjudicator(Backends backends, AdjudicationConfig config,
                         std::shared_ptr<DossierStore> dossiers,
                         std::shared_ptr<TelemetrySink> telemetry, Clock clock)
    : backends_(std::move(backends)),
      config_(config),
      dossiers_(std::move(dossiers)),
      telemetry_(std::move(telemetry)),
      keyword_judge_(std::make_shared<KeywordJudgeBackend>()),
      clock_(std::move(clock)) {
  if (!backends_.judge && config_.mode != PipelineMode::kKeywordBaseline) {
    throw Error(ErrorCode::kInvalidArgument, "adjudicator needs a judge backend");
  }
}

std::optional<VisualEvidence> Adjudicator::gather_evidence(const FeedItem& item) const {
  const bool wants_image =
      config_.mode == PipelineMode::kFull || config_.mode == PipelineMode::kRemoveMa;
  if (!wants_image || !item.image_ref) return std::nullopt;
  if (!backends_.judge || !backends_.judge->capabilities().accepts_visual) return std::nullopt;
  if (!backends_.vision) throw Error(ErrorCode::kBackendFailure, "no vision backend configured");
  if (backends_.cache) return extract_visual_evidence(*item.image_ref, *backends_.vision, *backends_.cache);
  try {
    return backends_.vision->extract(*item.image_ref);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, e.what());
  }
}

AdjudicationResult Adjudicator::adjudicate(const FeedItem& item,
                                           const AdjudicationContext& context) const {
  const std::int64_t started = clock_();
  static const std::vector<Rule> kNoRules;
  static const std::vector<RankedRule> kNoRanking;
  const auto& rules = context.rules ? *context.rules : kNoRules;
  const auto& ranking = context.ranking ? *context.ranking : kNoRanking;

  Adjudication a;
  a.item_id = item.id;
  Dossier dossier;
  dossier.user_id = context.user_id;
  dossier.item = item;
  dossier.config = config_.to_json();
  dossier.timestamp_ms = started;
  for (const auto& rule : rules) dossier.rule_versions[rule.id] = rule.version;

  try {
    if (rules.empty()) {
      a.layer = Layer::kPass;
    } else {
      try {
        std::optional<VisualEvidence> evidence = gather_evidence(item);
        dossier.evidence = evidence;
        JudgeBackend& backend = config_.mode == PipelineMode::kKeywordBaseline
                                    ? static_cast<JudgeBackend&>(*keyword_judge_)
                                    : *backends_.judge;
        const JudgeCallStyle style = (config_.mode == PipelineMode::kRemoveMa ||
                                      config_.mode == PipelineMode::kTextOnlyBaseline)
                                         ? JudgeCallStyle::kMonolithic
                                         : JudgeCallStyle::kDecoupled;
        JudgeVerdict verdict = judge(item, evidence, rules, ranking, backend, style);
        dossier.verdict = verdict;
        a.layer = Layer::kCloud;
        a.y_block = verdict.filter_decision ? 1 : 0;
        a.triggered_rule_id = verdict.triggered_rule_id;
        a.reason = verdict.reason;
      } catch (const std::exception& primary_failure) {
        FallbackRecord record;
        record.failure = primary_failure.what();
        FallbackOutcome outcome;
        if (backends_.cross_modal) {
          outcome = fallback_adjudicate(item, rules, *backends_.cross_modal, config_.tau_clip);
        } else if (item.image_ref) {
          outcome.block = true;
          outcome.method = FallbackMethod::kUnavailable;
          outcome.matched_rule_id = std::string(kFallbackUnavailableRule);
        } else {
          outcome = fallback_adjudicate(item, rules, CaptionCrossModalProvider(nullptr, nullptr),
                                        config_.tau_clip);
        }
        record.method = outcome.method;
        record.max_similarity = outcome.max_similarity;
        record.matched_rule_id = outcome.matched_rule_id;
        dossier.fallback = std::move(record);
        if (outcome.block) {
          a.layer = Layer::kClipFallback;
          a.y_block = 1;
          a.triggered_rule_id = outcome.matched_rule_id;
          if (outcome.method == FallbackMethod::kUnavailable) {
            a.reason = "Local fallback could not score the image; blocked conservatively.";
          } else if (outcome.method == FallbackMethod::kKeyword) {
            a.reason = "Text names a core entity of a strong filter rule.";
          } else {
            a.reason = "Image similarity " + format_similarity(*outcome.max_similarity) +
                       " to a filter rule reached the fallback threshold.";
          }
        } else {
          a.layer = Layer::kPass;
        }
      }
    }
  } catch (...) {
    a.layer = Layer::kClipFallback;
    a.y_block = 1;
    a.triggered_rule_id = std::string(kFallbackUnavailableRule);
    a.reason = "Internal failure; blocked conservatively.";
  }

  if (a.y_block == 0 && context.profile && backends_.text) {
    try {
      const StarScore star =
          star_score(item, *context.profile, *backends_.text, config_.star_k, config_.stars);
      a.y_star = star.s;
      a.star_count = star.count;
    } catch (const std::exception&) {
      a.y_star = 0.0;
      a.star_count = 0;
    }
  }

  a.latency_ms = clock_() - started;

  std::shared_ptr<const Dossier> stored;
  if (dossiers_ && (a.y_block == 1 || config_.audit_all)) {
    dossier.y_block = a.y_block;
    dossier.layer = a.layer;
    dossier.triggered_rule_id = a.triggered_rule_id;
    // Content-addressed: identical inputs at the same instant share one
    // dossier. Whether evidence came from the cache does not change identity.
    nlohmann::json basis = to_json(dossier);
    if (basis["evidence"].is_object()) basis["evidence"].erase("source");
    dossier.dossier_id = "dos_" + md5_hex(basis.dump()).substr(0, 16);
    try {
      stored = dossiers_->put(std::move(dossier));
      a.dossier_id = stored->dossier_id;
    } catch (const std::exception&) {
      stored.reset();
    }
  }

  emit(context, a, started);
  return {std::move(a), std::move(stored)};
}

void Adjudicator::emit(const AdjudicationContext& context, const Adjudication& a,
                       std::int64_t timestamp_ms) const {
  if (!telemetry_) return;
  try {
    TelemetryEvent exposure;
    exposure.timestamp_ms = timestamp_ms;
    exposure.user_id = context.user_id;
    exposure.kind = EventKind::kExposure;
    exposure.item_id = a.item_id;
    exposure.layer = a.layer;
    exposure.rule_id = a.triggered_rule_id;
    exposure.latency_ms = a.latency_ms;
    telemetry_->record(exposure);
    if (a.y_block == 1) {
      TelemetryEvent block = exposure;
      block.kind = EventKind::kOrigBlock;
      telemetry_->record(std::move(block));
    }
  } catch (const std::exception&) {
    // Telemetry loss never changes the decision.
  }
}

}  // namespace feedwarden
