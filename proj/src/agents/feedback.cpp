#include "feedwarden/agents/feedback.h"

#include "feedwarden/core/error.h"
#include "feedwarden/core/http_client.h"
#include "feedwarden/core/json_codec.h"
#include "feedwarden/core/text.h"

namespace feedwarden {

namespace {

std::string numbered(std::string_view prefix, std::int64_t n) {
  return std::string(prefix) + std::to_string(n);
}

// Validates a drafted rule through the core-model rules, reporting any
// violation as kInvalidProposal (never clamped).
Rule draft_rule(const RuleProposal& p, std::optional<std::string> id) {
  RuleCandidate candidate;
  candidate.id = std::move(id);
  candidate.description = p.nl_description;
  candidate.weight = p.weight;
  candidate.modality = std::string(to_string(p.modality));
  candidate.core_entities = p.core_entities;
  try {
    return validate_rule(candidate);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidProposal, e.what());
  }
}

// Reads the published proposal fields. Errors map to `code`.
RuleProposal proposal_fields(const Json& j, ErrorCode code) {
  try {
    if (!j.is_object()) throw Error(code, "proposal must be an object");
    RuleProposal p;
    const auto description = optional_string(j, "nl_description");
    const auto weight = optional_number(j, "weight");
    const auto modality = optional_string(j, "modality");
    if (!description || trim(*description).empty()) throw Error(code, "nl_description is empty");
    if (!weight) throw Error(code, "weight is missing");
    if (!modality) throw Error(code, "modality is missing");
    p.nl_description = std::string(trim(*description));
    p.weight = *weight;
    p.modality = parse_modality(*modality);
    p.core_entities = string_list(j, "core_entities");
    return p;
  } catch (const Error& e) {
    if (e.code() == code) throw;
    throw Error(code, e.what());
  } catch (const std::exception& e) {
    throw Error(code, e.what());
  }
}

}  // namespace

std::string_view to_string(ProposalStatus status) {
  switch (status) {
    case ProposalStatus::kPending: return "pending";
    case ProposalStatus::kConfirmed: return "confirmed";
    case ProposalStatus::kRejected: return "rejected";
    case ProposalStatus::kEdited: return "edited";
  }
  return "pending";
}

ProposalStatus parse_proposal_status(std::string_view text) {
  if (text == "pending") return ProposalStatus::kPending;
  if (text == "confirmed") return ProposalStatus::kConfirmed;
  if (text == "rejected") return ProposalStatus::kRejected;
  if (text == "edited") return ProposalStatus::kEdited;
  throw Error(ErrorCode::kInvalidArgument, "unknown proposal status '" + std::string(text) + "'");
}

std::string_view to_string(ProposalOrigin origin) {
  return origin == ProposalOrigin::kIntentParse ? "intent_parse" : "dispute";
}

ProposalOrigin parse_proposal_origin(std::string_view text) {
  if (text == "intent_parse") return ProposalOrigin::kIntentParse;
  if (text == "dispute") return ProposalOrigin::kDispute;
  throw Error(ErrorCode::kInvalidArgument, "unknown proposal origin '" + std::string(text) + "'");
}

nlohmann::json to_json(const RuleProposal& p) {
  return {{"proposal_id", p.proposal_id},
          {"nl_description", p.nl_description},
          {"core_entities", p.core_entities},
          {"weight", p.weight},
          {"modality", to_string(p.modality)},
          {"band", to_string(intensity_band(p.weight))},
          {"status", to_string(p.status)},
          {"origin", to_string(p.origin)},
          {"target_rule_id", optional_to_json(p.target_rule_id)},
          {"base_version", optional_to_json(p.base_version)},
          {"confirmed_rule_id", optional_to_json(p.confirmed_rule_id)}};
}

RuleProposal rule_proposal_from_json(const nlohmann::json& j) {
  RuleProposal p = proposal_fields(j, ErrorCode::kCorruptSnapshot);
  p.proposal_id = j.value("proposal_id", "");
  p.status = parse_proposal_status(j.value("status", "pending"));
  p.origin = parse_proposal_origin(j.value("origin", "intent_parse"));
  p.target_rule_id = optional_string(j, "target_rule_id");
  if (auto it = j.find("base_version"); it != j.end() && !it->is_null()) {
    p.base_version = it->get<std::int64_t>();
  }
  p.confirmed_rule_id = optional_string(j, "confirmed_rule_id");
  return p;
}

std::string_view to_string(ProposalKind kind) {
  return kind == ProposalKind::kModifyRule ? "modify_rule" : "add_allow_rule";
}

ProposalKind parse_proposal_kind(std::string_view text) {
  if (text == "modify_rule") return ProposalKind::kModifyRule;
  if (text == "add_allow_rule") return ProposalKind::kAddAllowRule;
  throw Error(ErrorCode::kMalformedProposal, "unknown proposal kind '" + std::string(text) + "'");
}

nlohmann::json to_json(const ActionableProposal& p) {
  return {{"kind", to_string(p.kind)},
          {"target_rule_id", optional_to_json(p.target_rule_id)},
          {"payload", p.payload ? to_json(*p.payload) : Json()},
          {"exemption", optional_to_json(p.exemption)},
          {"new_weight", optional_to_json(p.new_weight)},
          {"base_version", optional_to_json(p.base_version)},
          {"rationale", p.rationale}};
}

ActionableProposal actionable_proposal_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedProposal, "proposal must be an object");
  ActionableProposal p;
  try {
    p.kind = parse_proposal_kind(j.at("kind").get<std::string>());
    p.target_rule_id = optional_string(j, "target_rule_id");
    p.exemption = optional_string(j, "exemption");
    p.new_weight = optional_number(j, "new_weight");
    if (auto it = j.find("base_version"); it != j.end() && !it->is_null()) {
      p.base_version = it->get<std::int64_t>();
    }
    p.rationale = j.value("rationale", "");
    if (auto it = j.find("payload"); it != j.end() && !it->is_null()) {
      RuleProposal payload = proposal_fields(*it, ErrorCode::kMalformedProposal);
      payload.proposal_id = it->value("proposal_id", "");
      payload.status = parse_proposal_status(it->value("status", "pending"));
      payload.origin = ProposalOrigin::kDispute;
      p.payload = std::move(payload);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedProposal) throw;
    throw Error(ErrorCode::kMalformedProposal, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kMalformedProposal, e.what());
  }
  if (p.kind == ProposalKind::kModifyRule) {
    if (!p.target_rule_id) throw Error(ErrorCode::kMalformedProposal, "modify_rule needs a target");
    if (p.exemption && trim(*p.exemption).empty()) p.exemption.reset();
    if (!p.exemption && !p.new_weight) {
      throw Error(ErrorCode::kMalformedProposal, "modify_rule needs an exemption or a new weight");
    }
    if (p.new_weight && (*p.new_weight < -1.0 || *p.new_weight > 1.0 || *p.new_weight == 0.0)) {
      throw Error(ErrorCode::kMalformedProposal, "new_weight outside [-1,0)u(0,1]");
    }
  } else {
    if (!p.payload) throw Error(ErrorCode::kMalformedProposal, "add_allow_rule needs a payload");
    if (!(p.payload->weight > 0.0 && p.payload->weight <= 1.0)) {
      throw Error(ErrorCode::kMalformedProposal, "allow rule weight must lie in (0,1]");
    }
  }
  return p;
}

std::string_view to_string(AppealStatus status) {
  switch (status) {
    case AppealStatus::kOpen: return "open";
    case AppealStatus::kDeferred: return "deferred";
    case AppealStatus::kPassed: return "passed";
    case AppealStatus::kUpheld: return "upheld";
  }
  return "open";
}

AppealStatus parse_appeal_status(std::string_view text) {
  if (text == "open") return AppealStatus::kOpen;
  if (text == "deferred") return AppealStatus::kDeferred;
  if (text == "passed") return AppealStatus::kPassed;
  if (text == "upheld") return AppealStatus::kUpheld;
  throw Error(ErrorCode::kInvalidArgument, "unknown appeal status '" + std::string(text) + "'");
}

nlohmann::json to_json(const AppealRecord& a) {
  return {{"appeal_id", a.appeal_id},
          {"dossier_id", a.dossier_id},
          {"item_id", a.item_id},
          {"user_message", a.user_message},
          {"status", to_string(a.status)},
          {"proposal", a.proposal ? to_json(*a.proposal) : Json()},
          {"applied_rule_id", optional_to_json(a.applied_rule_id)},
          {"timestamp", a.timestamp_ms}};
}

AppealRecord appeal_from_json(const nlohmann::json& j) {
  AppealRecord a;
  a.appeal_id = j.at("appeal_id").get<std::string>();
  a.dossier_id = j.at("dossier_id").get<std::string>();
  a.item_id = j.value("item_id", "");
  a.user_message = j.value("user_message", "");
  a.status = parse_appeal_status(j.value("status", "open"));
  if (auto it = j.find("proposal"); it != j.end() && !it->is_null()) {
    a.proposal = actionable_proposal_from_json(*it);
  }
  a.applied_rule_id = optional_string(j, "applied_rule_id");
  a.timestamp_ms = j.value("timestamp", std::int64_t{0});
  return a;
}

StubIntentParser StubIntentParser::from_json(const nlohmann::json& j) {
  std::vector<Entry> table;
  for (const auto& e : j.at("entries")) {
    table.push_back({to_lower_ascii(e.at("keyword").get<std::string>()), e.at("proposal")});
  }
  return StubIntentParser(std::move(table));
}

nlohmann::json StubIntentParser::parse(std::string_view utterance,
                                       const std::optional<std::string>& /*platform_hint*/) {
  const std::string lowered = to_lower_ascii(utterance);
  for (const auto& entry : table_) {
    if (lowered.find(entry.keyword) != std::string::npos) return entry.proposal;
  }
  throw Error(ErrorCode::kBackendFailure, "no scripted intent for utterance");
}

nlohmann::json RemoteIntentParser::parse(std::string_view utterance,
                                         const std::optional<std::string>& platform_hint) {
  return post_json(endpoint_.url,
                   {{"utterance", std::string(utterance)}, {"platform_hint", optional_to_json(platform_hint)}},
                   endpoint_.timeout_ms, endpoint_.retries, ErrorCode::kBackendFailure);
}

StubDisputeBackend StubDisputeBackend::from_json(const nlohmann::json& j) {
  std::vector<Entry> table;
  for (const auto& e : j.at("entries")) {
    table.push_back({e.at("rule_id").get<std::string>(),
                     to_lower_ascii(e.at("keyword").get<std::string>()), e.at("response")});
  }
  return StubDisputeBackend(std::move(table));
}

nlohmann::json StubDisputeBackend::resolve(const Dossier& dossier, std::string_view user_message) {
  const std::string lowered = to_lower_ascii(user_message);
  for (const auto& entry : table_) {
    if (dossier.triggered_rule_id == entry.rule_id &&
        lowered.find(entry.keyword) != std::string::npos) {
      return entry.response;
    }
  }
  throw Error(ErrorCode::kBackendFailure, "no scripted dispute outcome");
}

nlohmann::json RemoteDisputeBackend::resolve(const Dossier& dossier, std::string_view user_message) {
  return post_json(endpoint_.url, {{"dossier", to_json(dossier)}, {"user_message", std::string(user_message)}},
                   endpoint_.timeout_ms, endpoint_.retries, ErrorCode::kBackendFailure);
}

AppealDecision parse_appeal_decision(std::string_view text) {
  if (text == "accept_unblock") return AppealDecision::kAcceptUnblock;
  if (text == "uphold") return AppealDecision::kUphold;
  throw Error(ErrorCode::kInvalidArgument, "decision must be accept_unblock or uphold");
}

const RuleProposal& FeedbackLedger::parse_intent(std::string_view utterance,
                                                 const std::optional<std::string>& platform_hint,
                                                 IntentParserBackend& parser) {
  if (trim(utterance).empty()) throw Error(ErrorCode::kInvalidArgument, "utterance is empty");
  Json raw;
  try {
    raw = parser.parse(utterance, platform_hint);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBackendFailure) throw;
    throw Error(ErrorCode::kBackendFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, e.what());
  }
  RuleProposal p = proposal_fields(raw, ErrorCode::kInvalidProposal);
  draft_rule(p, std::nullopt);
  p.proposal_id = numbered("prop_", next_proposal_++);
  p.status = ProposalStatus::kPending;
  p.origin = ProposalOrigin::kIntentParse;
  auto [it, inserted] = proposals_.emplace(p.proposal_id, std::move(p));
  return it->second;
}

ConfirmResult FeedbackLedger::confirm_proposal(std::string_view proposal_id,
                                               const nlohmann::json& edits, RuleStore& rules) {
  RuleProposal& stored = require_proposal(proposal_id);
  if (stored.status != ProposalStatus::kPending) {
    throw Error(ErrorCode::kStaleProposal, "proposal " + stored.proposal_id + " is no longer pending");
  }
  RuleProposal draft = stored;
  bool edited = false;
  if (edits.is_object() && !edits.empty()) {
    Json merged = feedwarden::to_json(draft);
    for (const char* key : {"nl_description", "core_entities", "weight", "modality"}) {
      if (auto it = edits.find(key); it != edits.end()) {
        merged[key] = *it;
        edited = true;
      }
    }
    RuleProposal fields = proposal_fields(merged, ErrorCode::kInvalidProposal);
    draft.nl_description = fields.nl_description;
    draft.core_entities = fields.core_entities;
    draft.weight = fields.weight;
    draft.modality = fields.modality;
  } else if (!edits.is_null() && !edits.is_object()) {
    throw Error(ErrorCode::kInvalidProposal, "edits must be an object");
  }

  ConfirmResult result;
  if (draft.target_rule_id) {
    const Rule& current = rules.require(*draft.target_rule_id);
    if (draft.base_version && current.version != *draft.base_version) {
      throw Error(ErrorCode::kStaleProposal, "rule " + current.id + " changed since drafting");
    }
    Rule next = draft_rule(draft, current.id);
    next.exemptions = current.exemptions;
    result.rule = rules.update(std::move(next));
  } else {
    Rule rule = draft_rule(draft, std::nullopt);
    if (const Rule* existing = rules.current(rule.id); existing && existing->active) {
      throw Error(ErrorCode::kStaleProposal, "an active rule " + rule.id + " already has this text");
    }
    result.rule = rules.add(std::move(rule));
    result.created = true;
  }
  draft.status = edited ? ProposalStatus::kEdited : ProposalStatus::kConfirmed;
  draft.confirmed_rule_id = result.rule.id;
  stored = draft;
  result.proposal = stored;
  return result;
}

const RuleProposal& FeedbackLedger::reject_proposal(std::string_view proposal_id) {
  RuleProposal& stored = require_proposal(proposal_id);
  if (stored.status != ProposalStatus::kPending) {
    throw Error(ErrorCode::kStaleProposal, "proposal " + stored.proposal_id + " is no longer pending");
  }
  stored.status = ProposalStatus::kRejected;
  return stored;
}

std::shared_ptr<const Dossier> FeedbackLedger::open_appeal(const DossierStore& dossiers,
                                                           std::string_view dossier_id) {
  auto dossier = dossiers.get(dossier_id);
  if (!dossier) throw Error(ErrorCode::kUnknownDossier, "unknown dossier " + std::string(dossier_id));
  if (dossier->y_block != 1) {
    throw Error(ErrorCode::kNotABlock, "dossier " + std::string(dossier_id) + " records a pass");
  }
  return dossier;
}

const AppealRecord& FeedbackLedger::file_appeal(const DossierStore& dossiers,
                                                std::string_view dossier_id, std::string user_message,
                                                std::int64_t timestamp_ms) {
  auto dossier = open_appeal(dossiers, dossier_id);
  if (passed_appeal_for(dossier->dossier_id)) {
    throw Error(ErrorCode::kAlreadyResolved, "dossier " + dossier->dossier_id + " was already unblocked");
  }
  AppealRecord appeal;
  appeal.appeal_id = numbered("appeal_", next_appeal_++);
  appeal.dossier_id = dossier->dossier_id;
  appeal.item_id = dossier->item.id;
  appeal.user_message = std::move(user_message);
  appeal.timestamp_ms = timestamp_ms;
  auto [it, inserted] = appeals_.emplace(appeal.appeal_id, std::move(appeal));
  return it->second;
}

const ActionableProposal& FeedbackLedger::dispute(std::string_view appeal_id,
                                                  const DossierStore& dossiers,
                                                  const RuleStore& rules, DisputeBackend& backend) {
  AppealRecord& appeal = require_appeal(appeal_id);
  if (appeal.resolved()) throw Error(ErrorCode::kAlreadyResolved, "appeal " + appeal.appeal_id + " is closed");
  auto dossier = open_appeal(dossiers, appeal.dossier_id);

  Json raw;
  try {
    raw = backend.resolve(*dossier, appeal.user_message);
  } catch (const std::exception& e) {
    appeal.status = AppealStatus::kDeferred;
    throw Error(ErrorCode::kBackendFailure, e.what());
  }
  const Json* single = &raw;
  if (raw.is_object() && raw.contains("proposals")) single = &raw["proposals"];
  if (single->is_array()) {
    if (single->size() != 1) {
      throw Error(ErrorCode::kMalformedProposal,
                  "dispute returned " + std::to_string(single->size()) + " proposals, expected 1");
    }
    single = &(*single)[0];
  }
  ActionableProposal proposal = actionable_proposal_from_json(*single);
  if (proposal.kind == ProposalKind::kModifyRule) {
    const Rule* target = rules.current(*proposal.target_rule_id);
    if (!target || !target->active) {
      throw Error(ErrorCode::kMalformedProposal, "proposal targets unknown rule " + *proposal.target_rule_id);
    }
    proposal.base_version = target->version;
  }
  appeal.status = AppealStatus::kOpen;
  appeal.proposal = std::move(proposal);
  return *appeal.proposal;
}

ResolveResult FeedbackLedger::resolve_appeal(std::string_view appeal_id, AppealDecision decision,
                                             bool apply_proposal, RuleStore& rules) {
  AppealRecord& appeal = require_appeal(appeal_id);
  if (appeal.resolved()) throw Error(ErrorCode::kAlreadyResolved, "appeal " + appeal.appeal_id + " is closed");

  if (decision == AppealDecision::kAcceptUnblock && passed_appeal_for(appeal.dossier_id)) {
    throw Error(ErrorCode::kAlreadyResolved, "dossier " + appeal.dossier_id + " was already unblocked");
  }

  ResolveResult result;
  if (decision == AppealDecision::kAcceptUnblock && apply_proposal) {
    if (!appeal.proposal) throw Error(ErrorCode::kInvalidArgument, "appeal has no proposal to apply");
    const ActionableProposal& p = *appeal.proposal;
    if (p.kind == ProposalKind::kModifyRule) {
      Rule next = rules.require(*p.target_rule_id);
      if (!next.active || (p.base_version && next.version != *p.base_version)) {
        throw Error(ErrorCode::kStaleProposal, "rule " + next.id + " changed since the dispute");
      }
      if (p.exemption) next.exemptions.push_back(*p.exemption);
      if (p.new_weight) next.weight = *p.new_weight;
      result.applied_rule = rules.update(std::move(next));
    } else {
      Rule rule = draft_rule(*p.payload, std::nullopt);
      if (const Rule* existing = rules.current(rule.id); existing && existing->active) {
        throw Error(ErrorCode::kStaleProposal, "an active rule " + rule.id + " already has this text");
      }
      result.applied_rule = rules.add(std::move(rule));
    }
    appeal.applied_rule_id = result.applied_rule->id;
  }
  appeal.status = decision == AppealDecision::kAcceptUnblock ? AppealStatus::kPassed : AppealStatus::kUpheld;
  result.appeal = appeal;
  return result;
}

const RuleProposal* FeedbackLedger::proposal(std::string_view id) const {
  auto it = proposals_.find(id);
  return it == proposals_.end() ? nullptr : &it->second;
}

const AppealRecord* FeedbackLedger::appeal(std::string_view id) const {
  auto it = appeals_.find(id);
  return it == appeals_.end() ? nullptr : &it->second;
}

const AppealRecord* FeedbackLedger::passed_appeal_for(std::string_view dossier_id) const {
  for (const auto& [id, a] : appeals_) {
    if (a.dossier_id == dossier_id && a.status == AppealStatus::kPassed) return &a;
  }
  return nullptr;
}

RuleProposal& FeedbackLedger::require_proposal(std::string_view id) {
  auto it = proposals_.find(id);
  if (it == proposals_.end()) throw Error(ErrorCode::kUnknownProposal, "unknown proposal " + std::string(id));
  return it->second;
}

AppealRecord& FeedbackLedger::require_appeal(std::string_view id) {
  auto it = appeals_.find(id);
  if (it == appeals_.end()) throw Error(ErrorCode::kUnknownAppeal, "unknown appeal " + std::string(id));
  return it->second;
}

nlohmann::json FeedbackLedger::to_json() const {
  Json proposals = Json::array();
  for (const auto& [id, p] : proposals_) proposals.push_back(feedwarden::to_json(p));
  Json appeals = Json::array();
  for (const auto& [id, a] : appeals_) appeals.push_back(feedwarden::to_json(a));
  return {{"proposals", std::move(proposals)},
          {"appeals", std::move(appeals)},
          {"next_proposal", next_proposal_},
          {"next_appeal", next_appeal_}};
}

FeedbackLedger FeedbackLedger::from_json(const nlohmann::json& j) {
  FeedbackLedger ledger;
  for (const auto& p : j.at("proposals")) {
    RuleProposal proposal = rule_proposal_from_json(p);
    ledger.proposals_.emplace(proposal.proposal_id, std::move(proposal));
  }
  for (const auto& a : j.at("appeals")) {
    AppealRecord appeal = appeal_from_json(a);
    ledger.appeals_.emplace(appeal.appeal_id, std::move(appeal));
  }
  ledger.next_proposal_ = j.at("next_proposal").get<std::int64_t>();
  ledger.next_appeal_ = j.at("next_appeal").get<std::int64_t>();
  return ledger;
}

}  // namespace feedwarden
