#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace feedwarden {

inline constexpr double kDefaultDecayGamma = 0.65;
inline constexpr double kDefaultDeltaEpsilon = 1e-3;
inline constexpr int kDefaultWindowDays = 7;
inline constexpr std::int64_t kMillisPerDay = 86'400'000;

enum class TagSource { kClick, kRecommendation };

std::string_view to_string(TagSource source);
TagSource parse_tag_source(std::string_view text);

struct TagNode {
  std::string tag;
  double base_importance = 0.0;  // implicit layer, from interactions
  double delta = 0.0;            // explicit layer, user bias
  TagSource source = TagSource::kClick;
  std::int64_t last_decay_session = 0;

  friend bool operator==(const TagNode&, const TagNode&) = default;
};

// clip(base + delta, 0, 1)
double final_importance(const TagNode& node);

struct InteractionEvent {
  std::string tag;
  std::int64_t timestamp_ms = 0;
  TagSource kind = TagSource::kClick;
};

struct InteractionWindow {
  std::vector<InteractionEvent> events;  // sorted by timestamp
  int window_days = kDefaultWindowDays;

  // Events within window_days of the newest event.
  std::vector<InteractionEvent> recent() const;
};

// freq(tag) / max tag frequency over the window; 0 for an empty window or an
// unseen tag.
double base_importance(const InteractionWindow& window, std::string_view tag);

struct WeightedTag {
  std::string tag;
  double importance = 0.0;
  friend bool operator==(const WeightedTag&, const WeightedTag&) = default;
};

/// Explicit tag profile of one user. Not synchronized; the owner serializes
/// mutations.
class PreferenceProfile {
 public:
  explicit PreferenceProfile(double gamma = kDefaultDecayGamma,
                             double epsilon = kDefaultDeltaEpsilon);

  // Sets the tag's final importance to slider_value by storing
  // delta = slider - base (clamped to [-1, 1]). Unknown tags start at base 0.
  const TagNode& apply_user_delta(std::string_view tag, double slider_value);

  // One session boundary: every delta *= gamma, tiny deltas pruned to 0.
  void decay_session();

  // Recomputes base importance for every tag seen in the window. Tags absent
  // from the window fall back to base 0. Deltas are untouched.
  void ingest(const InteractionWindow& window);

  // Throws Error(kEmptyProfile) when there are no nodes at all.
  std::vector<WeightedTag> top_k(std::size_t k = 5) const;

  const TagNode* find(std::string_view tag) const;
  const std::map<std::string, TagNode, std::less<>>& nodes() const { return nodes_; }
  std::int64_t session() const { return session_; }
  bool empty() const { return nodes_.empty(); }
  double gamma() const { return gamma_; }

  // Replaces a node wholesale; used by restore paths.
  void put(TagNode node);
  void set_session(std::int64_t session) { session_ = session; }

  nlohmann::json snapshot() const;
  static PreferenceProfile from_snapshot(const nlohmann::json& j, double gamma, double epsilon);

 private:
  std::map<std::string, TagNode, std::less<>> nodes_;
  std::int64_t session_ = 0;
  double gamma_;
  double epsilon_;
};

}  // namespace feedwarden
