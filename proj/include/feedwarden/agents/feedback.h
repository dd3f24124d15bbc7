#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/agents/rule_store.h"
#include "feedwarden/core/model.h"
#include "feedwarden/pipeline/adjudicator.h"
#include "feedwarden/pipeline/backends.h"

namespace feedwarden {

enum class ProposalStatus { kPending, kConfirmed, kRejected, kEdited };
enum class ProposalOrigin { kIntentParse, kDispute };

std::string_view to_string(ProposalStatus status);
ProposalStatus parse_proposal_status(std::string_view text);
std::string_view to_string(ProposalOrigin origin);
ProposalOrigin parse_proposal_origin(std::string_view text);

/// A drafted rule awaiting user confirmation. Pending proposals never reach
/// adjudication.
struct RuleProposal {
  std::string proposal_id;
  std::string nl_description;
  std::vector<std::string> core_entities;
  double weight = 0.0;
  Modality modality = Modality::kText;
  ProposalStatus status = ProposalStatus::kPending;
  ProposalOrigin origin = ProposalOrigin::kIntentParse;
  std::optional<std::string> target_rule_id;  // set when the proposal edits a rule
  std::optional<std::int64_t> base_version;   // target version when drafted
  std::optional<std::string> confirmed_rule_id;

  friend bool operator==(const RuleProposal&, const RuleProposal&) = default;
};

nlohmann::json to_json(const RuleProposal& p);
RuleProposal rule_proposal_from_json(const nlohmann::json& j);

enum class ProposalKind { kModifyRule, kAddAllowRule };

std::string_view to_string(ProposalKind kind);
ProposalKind parse_proposal_kind(std::string_view text);

/// The single outcome of one dispute round.
struct ActionableProposal {
  ProposalKind kind = ProposalKind::kModifyRule;
  std::optional<std::string> target_rule_id;
  std::optional<RuleProposal> payload;     // add_allow_rule
  std::optional<std::string> exemption;    // modify_rule
  std::optional<double> new_weight;        // modify_rule
  std::optional<std::int64_t> base_version;
  std::string rationale;

  friend bool operator==(const ActionableProposal&, const ActionableProposal&) = default;
};

nlohmann::json to_json(const ActionableProposal& p);
// Validates shape; throws Error(kMalformedProposal).
ActionableProposal actionable_proposal_from_json(const nlohmann::json& j);

enum class AppealStatus { kOpen, kDeferred, kPassed, kUpheld };

std::string_view to_string(AppealStatus status);
AppealStatus parse_appeal_status(std::string_view text);

struct AppealRecord {
  std::string appeal_id;
  std::string dossier_id;
  std::string item_id;
  std::string user_message;
  AppealStatus status = AppealStatus::kOpen;
  std::optional<ActionableProposal> proposal;
  std::optional<std::string> applied_rule_id;
  std::int64_t timestamp_ms = 0;

  bool resolved() const { return status == AppealStatus::kPassed || status == AppealStatus::kUpheld; }
  friend bool operator==(const AppealRecord&, const AppealRecord&) = default;
};

nlohmann::json to_json(const AppealRecord& a);
AppealRecord appeal_from_json(const nlohmann::json& j);

/// Turns an utterance into a raw proposal object with nl_description,
/// core_entities, weight and modality.
class IntentParserBackend {
 public:
  virtual ~IntentParserBackend() = default;
  virtual nlohmann::json parse(std::string_view utterance,
                               const std::optional<std::string>& platform_hint) = 0;
};

/// Keyword-table parser: the first entry whose keyword occurs in the
/// lowercased utterance wins.
class StubIntentParser final : public IntentParserBackend {
 public:
  struct Entry {
    std::string keyword;
    nlohmann::json proposal;
  };
  explicit StubIntentParser(std::vector<Entry> table) : table_(std::move(table)) {}
  static StubIntentParser from_json(const nlohmann::json& j);

  nlohmann::json parse(std::string_view utterance,
                       const std::optional<std::string>& platform_hint) override;

 private:
  std::vector<Entry> table_;
};

class RemoteIntentParser final : public IntentParserBackend {
 public:
  explicit RemoteIntentParser(RemoteBackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  nlohmann::json parse(std::string_view utterance,
                       const std::optional<std::string>& platform_hint) override;

 private:
  RemoteBackendEndpoint endpoint_;
};

/// Negotiates one refinement from a dossier and the user's complaint.
/// Returns either a single proposal object or {"proposals": [...]}.
class DisputeBackend {
 public:
  virtual ~DisputeBackend() = default;
  virtual nlohmann::json resolve(const Dossier& dossier, std::string_view user_message) = 0;
};

/// Table keyed by (triggered rule id, message keyword).
class StubDisputeBackend final : public DisputeBackend {
 public:
  struct Entry {
    std::string rule_id;
    std::string keyword;
    nlohmann::json response;
  };
  explicit StubDisputeBackend(std::vector<Entry> table) : table_(std::move(table)) {}
  static StubDisputeBackend from_json(const nlohmann::json& j);

  nlohmann::json resolve(const Dossier& dossier, std::string_view user_message) override;

 private:
  std::vector<Entry> table_;
};

class RemoteDisputeBackend final : public DisputeBackend {
 public:
  explicit RemoteDisputeBackend(RemoteBackendEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  nlohmann::json resolve(const Dossier& dossier, std::string_view user_message) override;

 private:
  RemoteBackendEndpoint endpoint_;
};

enum class AppealDecision { kAcceptUnblock, kUphold };

AppealDecision parse_appeal_decision(std::string_view text);

struct ConfirmResult {
  RuleProposal proposal;
  Rule rule;
  bool created = false;  // new rule rather than a new version
};

struct ResolveResult {
  AppealRecord appeal;
  std::optional<Rule> applied_rule;
};

/// One user's proposals and appeals. Not thread-safe: the owner serializes
/// all calls with that user's rule-store writes.
class FeedbackLedger {
 public:
  // Drafts a pending proposal. Throws kInvalidArgument on an empty utterance,
  // kBackendFailure, or kInvalidProposal when the draft violates rule invariants.
  const RuleProposal& parse_intent(std::string_view utterance,
                                   const std::optional<std::string>& platform_hint,
                                   IntentParserBackend& parser);

  // Applies optional edits {nl_description, core_entities, weight, modality},
  // re-validates and activates. Throws kUnknownProposal, kStaleProposal,
  // kInvalidProposal.
  ConfirmResult confirm_proposal(std::string_view proposal_id, const nlohmann::json& edits,
                                 RuleStore& rules);
  const RuleProposal& reject_proposal(std::string_view proposal_id);

  // Throws kUnknownDossier or kNotABlock.
  static std::shared_ptr<const Dossier> open_appeal(const DossierStore& dossiers,
                                                    std::string_view dossier_id);

  const AppealRecord& file_appeal(const DossierStore& dossiers, std::string_view dossier_id,
                                  std::string user_message, std::int64_t timestamp_ms);

  // One dispute round. A backend failure leaves the appeal deferred and
  // rethrows kBackendFailure; a proposal list of size != 1 throws
  // kMalformedProposal.
  const ActionableProposal& dispute(std::string_view appeal_id, const DossierStore& dossiers,
                                    const RuleStore& rules, DisputeBackend& backend);

  // Throws kUnknownAppeal, kAlreadyResolved (also when another appeal already
  // unblocked the same dossier), kStaleProposal.
  ResolveResult resolve_appeal(std::string_view appeal_id, AppealDecision decision,
                               bool apply_proposal, RuleStore& rules);

  const RuleProposal* proposal(std::string_view id) const;
  const AppealRecord* appeal(std::string_view id) const;
  // The accepted appeal for a dossier, if any; a block is unblocked at most once.
  const AppealRecord* passed_appeal_for(std::string_view dossier_id) const;
  const std::map<std::string, RuleProposal, std::less<>>& proposals() const { return proposals_; }
  const std::map<std::string, AppealRecord, std::less<>>& appeals() const { return appeals_; }

  nlohmann::json to_json() const;
  static FeedbackLedger from_json(const nlohmann::json& j);

  friend bool operator==(const FeedbackLedger&, const FeedbackLedger&) = default;

 private:
  RuleProposal& require_proposal(std::string_view id);
  AppealRecord& require_appeal(std::string_view id);

  std::map<std::string, RuleProposal, std::less<>> proposals_;
  std::map<std::string, AppealRecord, std::less<>> appeals_;
  std::int64_t next_proposal_ = 1;
  std::int64_t next_appeal_ = 1;
};

}  // namespace feedwarden
