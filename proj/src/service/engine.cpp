#include "feedwarden/service/engine.h"

#include <algorithm>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/error.h"
#include "feedwarden/core/json_codec.h"

namespace feedwarden {

namespace {

constexpr const char* kRulesFile = "rules.json";
constexpr const char* kProfileFile = "profile.json";
constexpr const char* kGraphFile = "graph.json";
constexpr const char* kFeedbackFile = "feedback.json";
constexpr const char* kDossierFile = "dossiers.ndjson";

Json read_snapshot(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kCorruptSnapshot, path.string() + ": " + e.what());
  }
}

template <typename F>
auto decode_snapshot(const std::filesystem::path& path, F&& decode) {
  const Json j = read_snapshot(path);
  try {
    return decode(j);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptSnapshot) throw;
    throw Error(ErrorCode::kCorruptSnapshot, path.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kCorruptSnapshot, path.string() + ": " + e.what());
  }
}

Json pagerank_to_json(const PageRankVector& pr) {
  return {{"ids", pr.ids},
          {"scores", pr.scores},
          {"iterations", pr.iterations},
          {"residual", pr.residual},
          {"converged", pr.converged}};
}

PageRankVector pagerank_from_json(const Json& j) {
  PageRankVector pr;
  pr.ids = j.at("ids").get<std::vector<std::string>>();
  pr.scores = j.at("scores").get<std::vector<double>>();
  pr.iterations = j.at("iterations").get<int>();
  pr.residual = j.at("residual").is_null() ? 0.0 : j.at("residual").get<double>();
  pr.converged = j.at("converged").get<bool>();
  if (pr.ids.size() != pr.scores.size()) {
    throw Error(ErrorCode::kCorruptSnapshot, "pagerank ids and scores differ in length");
  }
  return pr;
}

RemoteBackendEndpoint endpoint(const std::string& url, std::int64_t timeout_ms, std::int64_t retries) {
  return {url, static_cast<int>(timeout_ms), static_cast<int>(retries)};
}

Json load_json_file(const std::string& path, const char* what) {
  try {
    return Json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kValidationError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

bool valid_user_id(std::string_view user) {
  if (user.empty() || user.size() > 64) return false;
  return std::all_of(user.begin(), user.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-';
  });
}

EngineBackends make_backends(const ServiceConfig& config) {
  EngineBackends b;
  std::shared_ptr<const EmbeddingProvider> base;
  if (config.embedding_provider == "remote") {
    RemoteEndpoint ep{config.embedding_url, static_cast<int>(config.embedding_timeout_ms),
                      static_cast<int>(config.retries), static_cast<int>(config.max_in_flight)};
    base = std::make_shared<RemoteEmbeddingProvider>(ep, static_cast<std::size_t>(config.embedding_dim));
  } else {
    base = std::make_shared<OfflineEmbeddingProvider>(static_cast<std::size_t>(config.embedding_dim));
  }
  b.text = std::make_shared<CachingEmbeddingProvider>(base);

  auto images = std::make_shared<ImageFixtureStore>();
  if (!config.images.empty()) {
    try {
      *images = ImageFixtureStore::load(config.images);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kValidationError, std::string("images: ") + e.what());
    }
  }

  if (!config.cross_modal_url.empty()) {
    RemoteEndpoint ep{config.cross_modal_url, static_cast<int>(config.vision_timeout_ms),
                      static_cast<int>(config.retries), static_cast<int>(config.max_in_flight)};
    b.cross_modal = std::make_shared<RemoteCrossModalProvider>(ep);
  } else {
    b.cross_modal = std::make_shared<CaptionCrossModalProvider>(images, b.text);
  }

  if (config.backend == "remote") {
    b.judge = std::make_shared<RemoteJudgeBackend>(
        endpoint(config.judge_url, config.judge_timeout_ms, config.retries));
    b.vision = std::make_shared<RemoteVisionBackend>(
        endpoint(config.vision_url, config.vision_timeout_ms, config.retries));
  } else {
    b.vision = std::make_shared<FixtureVisionBackend>(images);
    if (!config.replay.empty()) {
      b.judge = std::make_shared<ReplayJudgeBackend>(
          ReplayJudgeBackend::from_json(load_json_file(config.replay, "replay")));
    } else if (!config.judge_script.empty()) {
      b.judge = ScriptedJudgeBackend::from_json(load_json_file(config.judge_script, "judge_script"));
    } else {
      b.judge = std::make_shared<KeywordJudgeBackend>();
    }
  }
  b.cache = std::make_shared<EvidenceCache>();

  if (!config.intent_url.empty()) {
    b.intent = std::make_shared<RemoteIntentParser>(
        endpoint(config.intent_url, config.judge_timeout_ms, config.retries));
  } else if (!config.intent_table.empty()) {
    b.intent = std::make_shared<StubIntentParser>(
        StubIntentParser::from_json(load_json_file(config.intent_table, "intent_table")));
  }
  if (!config.dispute_url.empty()) {
    b.dispute = std::make_shared<RemoteDisputeBackend>(
        endpoint(config.dispute_url, config.judge_timeout_ms, config.retries));
  } else if (!config.dispute_table.empty()) {
    b.dispute = std::make_shared<StubDisputeBackend>(
        StubDisputeBackend::from_json(load_json_file(config.dispute_table, "dispute_table")));
  }
  return b;
}

struct Engine::Published {
  std::shared_ptr<const std::vector<Rule>> rules;
  std::shared_ptr<const std::vector<RankedRule>> ranking;
  std::shared_ptr<const PreferenceProfile> profile;
};

struct Engine::UserState {
  std::string id;
  std::filesystem::path dir;
  std::mutex mutex;  // serializes all writers for this user
  RuleStore rules;
  PreferenceProfile profile;
  RuleGraph graph;
  PageRankVector pr;
  bool graph_stale = false;
  FeedbackLedger feedback;
  std::shared_ptr<DossierStore> dossiers;
  std::unique_ptr<Adjudicator> adjudicator;

  std::mutex published_mutex;
  std::shared_ptr<const Published> published;

  UserState(double gamma, double epsilon) : profile(gamma, epsilon) {}

  std::shared_ptr<const Published> current() {
    std::lock_guard lock(published_mutex);
    return published;
  }
};

Engine::Engine(ServiceConfig config, EngineBackends backends, Clock clock)
    : config_(std::move(config)),
      backends_(std::move(backends)),
      clock_(std::move(clock)),
      root_(config_.storage_root) {
  validate(config_);
  std::error_code ec;
  std::filesystem::create_directories(root_ / "users", ec);
  if (ec) throw Error(ErrorCode::kStorageError, "cannot create " + root_.string() + ": " + ec.message());
  log_ = std::make_shared<EventLog>(root_ / "telemetry.ndjson");
  // Restore every user eagerly so damaged state refuses startup.
  for (const auto& entry : std::filesystem::directory_iterator(root_ / "users")) {
    if (entry.is_directory()) state(entry.path().filename().string());
  }
}

Engine::~Engine() = default;

Engine::UserState& Engine::state(std::string_view user) {
  if (!valid_user_id(user)) {
    throw Error(ErrorCode::kInvalidArgument, "user id must match [A-Za-z0-9_-]{1,64}");
  }
  std::lock_guard lock(users_mutex_);
  if (auto it = users_.find(user); it != users_.end()) return *it->second;

  auto s = std::make_unique<UserState>(config_.gamma, config_.epsilon_delta);
  s->id = std::string(user);
  s->dir = root_ / "users" / s->id;
  std::error_code ec;
  std::filesystem::create_directories(s->dir, ec);
  if (ec) throw Error(ErrorCode::kStorageError, "cannot create " + s->dir.string() + ": " + ec.message());

  if (std::filesystem::exists(s->dir / kRulesFile)) {
    s->rules = decode_snapshot(s->dir / kRulesFile, [](const Json& j) { return RuleStore::from_json(j); });
  }
  if (std::filesystem::exists(s->dir / kProfileFile)) {
    s->profile = decode_snapshot(s->dir / kProfileFile, [&](const Json& j) {
      return PreferenceProfile::from_snapshot(j, config_.gamma, config_.epsilon_delta);
    });
  }
  if (std::filesystem::exists(s->dir / kFeedbackFile)) {
    s->feedback = decode_snapshot(s->dir / kFeedbackFile, [](const Json& j) { return FeedbackLedger::from_json(j); });
  }
  s->dossiers = std::make_shared<DossierStore>(s->dir / kDossierFile);

  s->graph = RuleGraph(config_.tau_e, parse_transition_mode(config_.transition));
  if (std::filesystem::exists(s->dir / kGraphFile)) {
    const Json g = read_snapshot(s->dir / kGraphFile);
    s->pr = decode_snapshot(s->dir / kGraphFile, [](const Json& j) { return pagerank_from_json(j.at("pr")); });
    s->graph_stale = g.value("stale", false);
    // Rebuild edges in the persisted node order; the ranking itself is the
    // persisted vector, so it survives restarts exactly.
    try {
      for (const auto& id : s->pr.ids) {
        const Rule* rule = s->rules.current(id);
        if (rule && rule->active) s->graph.add_rule(*rule, *backends_.text);
      }
      for (const auto& rule : s->rules.active_rules()) {
        if (!s->graph.index_of(rule.id)) s->graph_stale = true;
      }
    } catch (const std::exception&) {
      s->graph_stale = true;
    }
  } else if (s->rules.size() > 0) {
    rebuild_graph(*s);
  }

  s->adjudicator = std::make_unique<Adjudicator>(
      Backends{backends_.vision, backends_.judge, backends_.text, backends_.cross_modal, backends_.cache},
      config_.adjudication(), s->dossiers, log_, clock_);
  republish(*s);
  auto [it, inserted] = users_.emplace(s->id, std::move(s));
  return *it->second;
}

void Engine::republish(UserState& s) {
  auto published = std::make_shared<Published>();
  published->rules = std::make_shared<const std::vector<Rule>>(s.rules.active_rules());
  published->ranking = std::make_shared<const std::vector<RankedRule>>(
      meta_preference_ranking(s.pr, s.pr.ids.size()));
  published->profile = std::make_shared<const PreferenceProfile>(s.profile);
  std::lock_guard lock(s.published_mutex);
  s.published = std::move(published);
}

void Engine::rebuild_graph(UserState& s) {
  PageRankOptions options;
  options.damping = config_.alpha;
  try {
    RuleGraph graph = RuleGraph::build(s.rules.active_rules(), *backends_.text, config_.tau_e,
                                       parse_transition_mode(config_.transition));
    PageRankVector pr;
    if (graph.size() > 0) pr = personalized_pagerank(graph, personalization_prior(graph), options, &s.pr);
    s.graph = std::move(graph);
    s.pr = std::move(pr);
    s.graph_stale = false;
  } catch (const std::exception&) {
    // The embedding provider is down; keep the previous ranking and retry later.
    s.graph_stale = true;
  }
}

void Engine::update_graph(UserState& s, const std::vector<std::string>& changed_ids) {
  if (s.graph_stale) {
    rebuild_graph(s);
    return;
  }
  PageRankOptions options;
  options.damping = config_.alpha;
  try {
    for (const auto& id : changed_ids) {
      const Rule* rule = s.rules.current(id);
      if (rule && rule->active) {
        s.graph.add_rule(*rule, *backends_.text);
      } else {
        s.graph.remove_rule(id);
      }
    }
    PageRankVector pr;
    if (s.graph.size() > 0) pr = personalized_pagerank(s.graph, personalization_prior(s.graph), options, &s.pr);
    s.pr = std::move(pr);
  } catch (const std::exception&) {
    s.graph_stale = true;
  }
}

void Engine::persist_rules(UserState& s) {
  write_file_atomic(s.dir / kRulesFile, s.rules.to_json().dump(2));
}

void Engine::persist_profile(UserState& s) {
  write_file_atomic(s.dir / kProfileFile, s.profile.snapshot().dump(2));
}

void Engine::persist_graph(UserState& s) {
  const Json j = {{"pr", pagerank_to_json(s.pr)}, {"stale", s.graph_stale}};
  write_file_atomic(s.dir / kGraphFile, j.dump(2));
}

void Engine::persist_feedback(UserState& s) {
  write_file_atomic(s.dir / kFeedbackFile, s.feedback.to_json().dump(2));
}

void Engine::emit(std::string_view user, EventKind kind, std::string detail,
                  std::optional<std::string> rule_id, std::string item_id, Layer layer) {
  TelemetryEvent e;
  e.timestamp_ms = clock_();
  e.user_id = std::string(user);
  e.kind = kind;
  e.item_id = std::move(item_id);
  e.layer = layer;
  e.rule_id = std::move(rule_id);
  e.detail = std::move(detail);
  log_->append(std::move(e));
}

Rule Engine::apply_rule_change(UserState& s, const Rule& rule) {
  update_graph(s, {rule.id});
  persist_rules(s);
  persist_graph(s);
  republish(s);
  return rule;
}

AdjudicationResult Engine::adjudicate(std::string_view user, const FeedItem& item) {
  check_feed_item(item);
  UserState& s = state(user);
  const auto published = s.current();
  AdjudicationContext context{s.id, published->rules, published->ranking, published->profile};
  return s.adjudicator->adjudicate(item, context);
}

std::vector<Rule> Engine::rules(std::string_view user) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  return s.rules.active_rules();
}

Rule Engine::rule(std::string_view user, std::string_view id) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  return s.rules.require(id);
}

std::vector<Rule> Engine::rule_history(std::string_view user, std::string_view id) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  const auto* history = s.rules.history(id);
  if (!history) throw Error(ErrorCode::kUnknownRule, "unknown rule " + std::string(id));
  return *history;
}

Rule Engine::create_rule(std::string_view user, const nlohmann::json& body) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  Rule rule = validate_rule(rule_candidate_from_json(body));
  const Rule stored = s.rules.add(std::move(rule));
  apply_rule_change(s, stored);
  if (stored.is_filter()) {
    emit(user, EventKind::kManualFilterAdd, "rule_create", stored.id);
  } else {
    emit(user, EventKind::kManualEvent, "rule_create", stored.id);
  }
  return stored;
}

Rule Engine::patch_rule(std::string_view user, std::string_view id, const nlohmann::json& body) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  if (!body.is_object()) throw Error(ErrorCode::kInvalidArgument, "body must be an object");
  const Rule& current = s.rules.require(id);
  if (!current.active) throw Error(ErrorCode::kUnknownRule, "rule " + current.id + " was deleted");
  Json merged = current;
  for (const auto& [key, value] : body.items()) {
    if (key != "description" && key != "weight" && key != "modality" && key != "core_entities" &&
        key != "exemptions") {
      throw Error(ErrorCode::kInvalidArgument, "field '" + key + "' cannot be patched");
    }
    merged[key] = value;
  }
  merged["id"] = current.id;
  Rule next = validate_rule(rule_candidate_from_json(merged));
  next.version = current.version;
  next.parent_version = current.parent_version;
  const Rule stored = s.rules.update(std::move(next));
  apply_rule_change(s, stored);
  emit(user, EventKind::kManualEvent, "rule_update", stored.id);
  return stored;
}

Rule Engine::delete_rule(std::string_view user, std::string_view id) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  const Rule stored = s.rules.deactivate(id);
  apply_rule_change(s, stored);
  emit(user, EventKind::kManualEvent, "rule_delete", stored.id);
  return stored;
}

RuleProposal Engine::parse_intent(std::string_view user, std::string_view utterance,
                                  const std::optional<std::string>& platform_hint) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  if (!backends_.intent) throw Error(ErrorCode::kBackendFailure, "no intent parser configured");
  const RuleProposal proposal = s.feedback.parse_intent(utterance, platform_hint, *backends_.intent);
  persist_feedback(s);
  emit(user, EventKind::kManualEvent, "intent_draft");
  return proposal;
}

ConfirmResult Engine::confirm_proposal(std::string_view user, std::string_view proposal_id,
                                       const nlohmann::json& edits) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  ConfirmResult result = s.feedback.confirm_proposal(proposal_id, edits, s.rules);
  apply_rule_change(s, result.rule);
  persist_feedback(s);
  if (result.rule.is_filter()) {
    emit(user, EventKind::kManualFilterAdd, "proposal_confirm", result.rule.id);
  } else {
    emit(user, EventKind::kManualEvent, "proposal_confirm", result.rule.id);
  }
  return result;
}

RuleProposal Engine::reject_proposal(std::string_view user, std::string_view proposal_id) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  const RuleProposal proposal = s.feedback.reject_proposal(proposal_id);
  persist_feedback(s);
  emit(user, EventKind::kManualEvent, "proposal_reject");
  return proposal;
}

std::vector<RuleProposal> Engine::proposals(std::string_view user) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  std::vector<RuleProposal> out;
  for (const auto& [id, p] : s.feedback.proposals()) out.push_back(p);
  return out;
}

std::shared_ptr<const Dossier> Engine::dossier(std::string_view user, std::string_view dossier_id) {
  UserState& s = state(user);
  auto d = s.dossiers->get(dossier_id);
  if (!d) throw Error(ErrorCode::kUnknownDossier, "unknown dossier " + std::string(dossier_id));
  return d;
}

AppealResult Engine::file_appeal(std::string_view user, std::string_view dossier_id,
                                 const std::string& message) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  AppealResult result;
  const AppealRecord& filed = s.feedback.file_appeal(*s.dossiers, dossier_id, message, clock_());
  const std::string appeal_id = filed.appeal_id;
  if (backends_.dispute) {
    try {
      s.feedback.dispute(appeal_id, *s.dossiers, s.rules, *backends_.dispute);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kBackendFailure && e.code() != ErrorCode::kMalformedProposal) throw;
      result.dispute_error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
  }
  persist_feedback(s);
  result.appeal = *s.feedback.appeal(appeal_id);
  result.dossier = s.dossiers->get(result.appeal.dossier_id);
  emit(user, EventKind::kManualEvent, "appeal_filed", result.dossier->triggered_rule_id,
       result.appeal.item_id, result.dossier->layer);
  return result;
}

ResolveResult Engine::resolve_appeal(std::string_view user, std::string_view appeal_id,
                                     AppealDecision decision, bool apply_proposal) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  ResolveResult result = s.feedback.resolve_appeal(appeal_id, decision, apply_proposal, s.rules);
  if (result.applied_rule) apply_rule_change(s, *result.applied_rule);
  persist_feedback(s);
  const auto dossier = s.dossiers->get(result.appeal.dossier_id);
  if (decision == AppealDecision::kAcceptUnblock) {
    // Attributed to the original block's layer and rule.
    emit(user, EventKind::kAppealPassed, "", dossier->triggered_rule_id, result.appeal.item_id,
         dossier->layer);
  } else {
    emit(user, EventKind::kManualEvent, "appeal_upheld", dossier->triggered_rule_id,
         result.appeal.item_id, dossier->layer);
  }
  return result;
}

AppealRecord Engine::appeal(std::string_view user, std::string_view appeal_id) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  const AppealRecord* a = s.feedback.appeal(appeal_id);
  if (!a) throw Error(ErrorCode::kUnknownAppeal, "unknown appeal " + std::string(appeal_id));
  return *a;
}

nlohmann::json Engine::profile(std::string_view user) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  return s.profile.snapshot();
}

nlohmann::json Engine::set_slider(std::string_view user, std::string_view tag, double value) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  s.profile.apply_user_delta(tag, value);
  persist_profile(s);
  republish(s);
  emit(user, EventKind::kManualEvent, std::string(kDetailSlider), std::nullopt, std::string(tag));
  return s.profile.snapshot();
}

nlohmann::json Engine::ingest_interactions(std::string_view user, const nlohmann::json& body) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  InteractionWindow window;
  try {
    window.window_days = body.value("window_days", kDefaultWindowDays);
    for (const auto& e : body.at("events")) {
      window.events.push_back({e.at("tag").get<std::string>(), e.at("timestamp").get<std::int64_t>(),
                               parse_tag_source(e.value("kind", "click"))});
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad interactions body: ") + e.what());
  }
  std::stable_sort(window.events.begin(), window.events.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
  s.profile.ingest(window);
  persist_profile(s);
  republish(s);
  emit(user, EventKind::kManualEvent, "interactions");
  return s.profile.snapshot();
}

nlohmann::json Engine::advance_session(std::string_view user) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  s.profile.decay_session();
  persist_profile(s);
  republish(s);
  emit(user, EventKind::kManualEvent, "session_advance");
  return s.profile.snapshot();
}

nlohmann::json Engine::graph(std::string_view user) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  Json j = graph_dump(s.graph, s.pr);
  j["stale"] = s.graph_stale;
  return j;
}

std::vector<RankedRule> Engine::ranking(std::string_view user) {
  UserState& s = state(user);
  return *s.current()->ranking;
}

nlohmann::json Engine::user_snapshot(std::string_view user) {
  UserState& s = state(user);
  std::lock_guard lock(s.mutex);
  Json dossiers = Json::array();
  for (const auto& d : s.dossiers->all()) dossiers.push_back(to_json(*d));
  return {{"rules", s.rules.to_json()},
          {"profile", s.profile.snapshot()},
          {"pr", pagerank_to_json(s.pr)},
          {"feedback", s.feedback.to_json()},
          {"dossiers", std::move(dossiers)}};
}

}  // namespace feedwarden
