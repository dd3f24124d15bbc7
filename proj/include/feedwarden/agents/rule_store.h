#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/core/model.h"

namespace feedwarden {

/// Versioned rule set. Every change appends a new version to the rule's
/// linear history; deletion appends an inactive version. Not thread-safe:
/// owners serialize writers.
class RuleStore {
 public:
  // Adds a new rule at version 1. Throws Error(kInvalidArgument) when the id
  // is already live.
  const Rule& add(Rule rule);

  // Appends `next` as version current+1 unless its content equals the current
  // version (idempotent update). Throws Error(kUnknownRule).
  const Rule& update(Rule next);

  // Appends an inactive version. Throws Error(kUnknownRule).
  const Rule& deactivate(std::string_view id);

  const Rule* current(std::string_view id) const;
  const Rule& require(std::string_view id) const;
  const std::vector<Rule>* history(std::string_view id) const;

  std::vector<Rule> active_rules() const;          // ordered by id
  std::map<std::string, std::int64_t> version_vector() const;  // active only
  std::size_t size() const { return history_.size(); }

  nlohmann::json to_json() const;
  static RuleStore from_json(const nlohmann::json& j);

  friend bool operator==(const RuleStore&, const RuleStore&) = default;

 private:
  std::map<std::string, std::vector<Rule>, std::less<>> history_;
};

// True when two versions of a rule carry the same user-visible content.
bool same_content(const Rule& a, const Rule& b);

}  // namespace feedwarden
