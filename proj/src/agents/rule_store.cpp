#include "feedwarden/agents/rule_store.h"

#include "feedwarden/core/error.h"
#include "feedwarden/core/json_codec.h"

namespace feedwarden {

bool same_content(const Rule& a, const Rule& b) {
  return a.id == b.id && a.description == b.description && a.weight == b.weight &&
         a.modality == b.modality && a.core_entities == b.core_entities && a.active == b.active &&
         a.exemptions == b.exemptions;
}

const Rule& RuleStore::add(Rule rule) {
  check_rule(rule);
  auto it = history_.find(rule.id);
  if (it != history_.end()) {
    if (it->second.back().active) {
      throw Error(ErrorCode::kInvalidArgument, "rule " + rule.id + " already exists");
    }
    // Re-creating a deleted id continues its history.
    rule.parent_version = it->second.back().version;
    rule.version = *rule.parent_version + 1;
    rule.active = true;
    it->second.push_back(std::move(rule));
    return it->second.back();
  }
  rule.version = 1;
  rule.parent_version.reset();
  rule.active = true;
  auto& versions = history_[rule.id];
  versions.push_back(std::move(rule));
  return versions.back();
}

const Rule& RuleStore::update(Rule next) {
  auto it = history_.find(next.id);
  if (it == history_.end()) throw Error(ErrorCode::kUnknownRule, "unknown rule " + next.id);
  const Rule& latest = it->second.back();
  if (same_content(latest, next)) return latest;
  check_rule(next);
  next.parent_version = latest.version;
  next.version = latest.version + 1;
  it->second.push_back(std::move(next));
  return it->second.back();
}

const Rule& RuleStore::deactivate(std::string_view id) {
  Rule next = require(id);
  if (!next.active) return require(id);
  next.active = false;
  return update(std::move(next));
}

const Rule* RuleStore::current(std::string_view id) const {
  auto it = history_.find(id);
  return it == history_.end() ? nullptr : &it->second.back();
}

const Rule& RuleStore::require(std::string_view id) const {
  const Rule* rule = current(id);
  if (!rule) throw Error(ErrorCode::kUnknownRule, "unknown rule " + std::string(id));
  return *rule;
}

const std::vector<Rule>* RuleStore::history(std::string_view id) const {
  auto it = history_.find(id);
  return it == history_.end() ? nullptr : &it->second;
}

std::vector<Rule> RuleStore::active_rules() const {
  std::vector<Rule> out;
  for (const auto& [id, versions] : history_) {
    if (versions.back().active) out.push_back(versions.back());
  }
  return out;
}

std::map<std::string, std::int64_t> RuleStore::version_vector() const {
  std::map<std::string, std::int64_t> out;
  for (const auto& [id, versions] : history_) {
    if (versions.back().active) out[id] = versions.back().version;
  }
  return out;
}

nlohmann::json RuleStore::to_json() const {
  Json rules = Json::object();
  for (const auto& [id, versions] : history_) rules[id] = versions;
  return {{"rules", std::move(rules)}};
}

RuleStore RuleStore::from_json(const nlohmann::json& j) {
  RuleStore store;
  for (const auto& [id, versions] : j.at("rules").items()) {
    auto& history = store.history_[id];
    std::int64_t previous = 0;
    for (const auto& v : versions) {
      Rule rule = v.get<Rule>();
      if (rule.id != id || rule.version <= previous) {
        throw Error(ErrorCode::kCorruptSnapshot, "rule history for " + id + " is not linear");
      }
      previous = rule.version;
      history.push_back(std::move(rule));
    }
    if (history.empty()) throw Error(ErrorCode::kCorruptSnapshot, "empty history for " + id);
  }
  return store;
}

}  // namespace feedwarden
