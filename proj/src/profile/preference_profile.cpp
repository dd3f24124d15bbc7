#include "feedwarden/profile/preference_profile.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "feedwarden/core/error.h"

namespace feedwarden {

std::string_view to_string(TagSource source) {
  return source == TagSource::kClick ? "click" : "recommendation";
}

TagSource parse_tag_source(std::string_view text) {
  if (text == "click") return TagSource::kClick;
  if (text == "recommendation") return TagSource::kRecommendation;
  throw Error(ErrorCode::kInvalidArgument, "unknown tag source '" + std::string(text) + "'");
}

double final_importance(const TagNode& node) {
  return std::clamp(node.base_importance + node.delta, 0.0, 1.0);
}

std::vector<InteractionEvent> InteractionWindow::recent() const {
  if (events.empty()) return {};
  std::int64_t newest = events.front().timestamp_ms;
  for (const auto& e : events) newest = std::max(newest, e.timestamp_ms);
  const std::int64_t cutoff = newest - static_cast<std::int64_t>(window_days) * kMillisPerDay;
  std::vector<InteractionEvent> out;
  for (const auto& e : events) {
    if (e.timestamp_ms > cutoff) out.push_back(e);
  }
  return out;
}

double base_importance(const InteractionWindow& window, std::string_view tag) {
  std::unordered_map<std::string, int> freq;
  int max_freq = 0;
  for (const auto& e : window.recent()) max_freq = std::max(max_freq, ++freq[e.tag]);
  if (max_freq == 0) return 0.0;
  auto it = freq.find(std::string(tag));
  return it == freq.end() ? 0.0 : static_cast<double>(it->second) / max_freq;
}

PreferenceProfile::PreferenceProfile(double gamma, double epsilon)
    : gamma_(gamma), epsilon_(epsilon) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
}

const TagNode& PreferenceProfile::apply_user_delta(std::string_view tag, double slider_value) {
  if (std::isnan(slider_value) || slider_value < 0.0 || slider_value > 1.0) {
    throw Error(ErrorCode::kSliderOutOfRange, "slider value must lie in [0, 1]");
  }
  if (tag.empty()) throw Error(ErrorCode::kInvalidArgument, "tag is empty");
  auto [it, inserted] = nodes_.try_emplace(std::string(tag));
  TagNode& node = it->second;
  if (inserted) {
    node.tag = std::string(tag);
    node.last_decay_session = session_;
  }
  node.delta = std::clamp(slider_value - node.base_importance, -1.0, 1.0);
  return node;
}

void PreferenceProfile::decay_session() {
  ++session_;
  for (auto& [tag, node] : nodes_) {
    node.delta *= gamma_;
    if (std::fabs(node.delta) < epsilon_) node.delta = 0.0;
    node.last_decay_session = session_;
  }
}

void PreferenceProfile::ingest(const InteractionWindow& window) {
  struct Tally {
    int total = 0;
    int clicks = 0;
  };
  std::map<std::string, Tally, std::less<>> tallies;
  int max_freq = 0;
  for (const auto& e : window.recent()) {
    auto& t = tallies[e.tag];
    ++t.total;
    if (e.kind == TagSource::kClick) ++t.clicks;
    max_freq = std::max(max_freq, t.total);
  }
  for (auto& [tag, node] : nodes_) {
    if (!tallies.contains(tag)) node.base_importance = 0.0;
  }
  for (const auto& [tag, tally] : tallies) {
    auto [it, inserted] = nodes_.try_emplace(tag);
    TagNode& node = it->second;
    if (inserted) {
      node.tag = tag;
      node.last_decay_session = session_;
    }
    node.base_importance = static_cast<double>(tally.total) / max_freq;
    node.source = 2 * tally.clicks >= tally.total ? TagSource::kClick : TagSource::kRecommendation;
  }
}

std::vector<WeightedTag> PreferenceProfile::top_k(std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (nodes_.empty()) throw Error(ErrorCode::kEmptyProfile, "profile has no tags");
  std::vector<WeightedTag> all;
  all.reserve(nodes_.size());
  for (const auto& [tag, node] : nodes_) all.push_back({tag, final_importance(node)});
  std::stable_sort(all.begin(), all.end(), [](const WeightedTag& a, const WeightedTag& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.tag < b.tag;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

const TagNode* PreferenceProfile::find(std::string_view tag) const {
  auto it = nodes_.find(tag);
  return it == nodes_.end() ? nullptr : &it->second;
}

void PreferenceProfile::put(TagNode node) {
  std::string key = node.tag;
  nodes_[std::move(key)] = std::move(node);
}

nlohmann::json PreferenceProfile::snapshot() const {
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& [tag, node] : nodes_) {
    tags.push_back({{"tag", tag},
                    {"base_importance", node.base_importance},
                    {"delta", node.delta},
                    {"final_importance", final_importance(node)},
                    {"source", to_string(node.source)},
                    {"last_decay_session", node.last_decay_session}});
  }
  return {{"tags", std::move(tags)}, {"session", session_}};
}

PreferenceProfile PreferenceProfile::from_snapshot(const nlohmann::json& j, double gamma,
                                                   double epsilon) {
  PreferenceProfile profile(gamma, epsilon);
  try {
    profile.session_ = j.at("session").get<std::int64_t>();
    for (const auto& t : j.at("tags")) {
      TagNode node;
      node.tag = t.at("tag").get<std::string>();
      node.base_importance = t.at("base_importance").get<double>();
      node.delta = t.at("delta").get<double>();
      node.source = parse_tag_source(t.at("source").get<std::string>());
      node.last_decay_session = t.value("last_decay_session", profile.session_);
      profile.put(std::move(node));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptSnapshot, std::string("profile snapshot: ") + e.what());
  }
  return profile;
}

}  // namespace feedwarden
