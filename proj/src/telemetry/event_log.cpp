#include "feedwarden/telemetry/event_log.h"

#include "feedwarden/core/error.h"
#include "feedwarden/core/json_codec.h"
#include "feedwarden/core/text.h"
#include "feedwarden/profile/preference_profile.h"

namespace feedwarden {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kExposure: return "exposure";
    case EventKind::kOrigBlock: return "orig_block";
    case EventKind::kAppealPassed: return "appeal_passed";
    case EventKind::kManualFilterAdd: return "manual_filter_add";
    case EventKind::kManualEvent: return "manual_event";
  }
  return "exposure";
}

EventKind parse_event_kind(std::string_view text) {
  if (text == "exposure") return EventKind::kExposure;
  if (text == "orig_block") return EventKind::kOrigBlock;
  if (text == "appeal_passed") return EventKind::kAppealPassed;
  if (text == "manual_filter_add") return EventKind::kManualFilterAdd;
  if (text == "manual_event") return EventKind::kManualEvent;
  throw Error(ErrorCode::kInvalidArgument, "unknown event kind '" + std::string(text) + "'");
}

nlohmann::json to_json(const TelemetryEvent& e) {
  return {{"timestamp", e.timestamp_ms},
          {"user_id", e.user_id},
          {"kind", to_string(e.kind)},
          {"item_id", e.item_id},
          {"layer", to_string(e.layer)},
          {"rule_id", optional_to_json(e.rule_id)},
          {"latency_ms", optional_to_json(e.latency_ms)},
          {"day_index", e.day_index},
          {"detail", e.detail}};
}

TelemetryEvent event_from_json(const nlohmann::json& j) {
  TelemetryEvent e;
  e.timestamp_ms = j.at("timestamp").get<std::int64_t>();
  e.user_id = j.at("user_id").get<std::string>();
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.item_id = j.value("item_id", "");
  e.layer = parse_layer(j.value("layer", "unknown"));
  e.rule_id = optional_string(j, "rule_id");
  if (auto it = j.find("latency_ms"); it != j.end() && !it->is_null()) {
    e.latency_ms = it->get<std::int64_t>();
  }
  e.day_index = j.value("day_index", 0);
  e.detail = j.value("detail", "");
  return e;
}

EventLog::EventLog(std::filesystem::path file) {
  file_ = std::make_unique<AppendOnlyFile>(std::move(file), [this](std::string_view line) {
    try {
      TelemetryEvent event = event_from_json(nlohmann::json::parse(line));
      assign_day(event);
      events_.push_back(std::move(event));
      return true;
    } catch (const std::exception&) {
      return false;
    }
  });
}

void EventLog::assign_day(TelemetryEvent& event) {
  // Usage days count from the user's first logged activity.
  auto it = first_activity_ms_.try_emplace(event.user_id, event.timestamp_ms).first;
  if (event.day_index == 0) {
    const std::int64_t elapsed = event.timestamp_ms - it->second;
    event.day_index = elapsed <= 0 ? 1 : static_cast<int>(elapsed / kMillisPerDay) + 1;
  }
}

TelemetryEvent EventLog::append(TelemetryEvent event) {
  std::lock_guard lock(mutex_);
  assign_day(event);
  if (file_) file_->append(to_json(event).dump());
  events_.push_back(std::move(event));
  cached_.reset();
  return events_.back();
}

std::shared_ptr<const std::vector<TelemetryEvent>> EventLog::snapshot() const {
  std::lock_guard lock(mutex_);
  if (!cached_) cached_ = std::make_shared<const std::vector<TelemetryEvent>>(events_);
  return cached_;
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

std::uint64_t EventLog::offset() const {
  std::lock_guard lock(mutex_);
  return file_ ? file_->offset() : 0;
}

std::uint64_t EventLog::discarded_bytes() const {
  std::lock_guard lock(mutex_);
  return file_ ? file_->discarded_bytes() : 0;
}

void EventLog::compact() {
  std::lock_guard lock(mutex_);
  if (!file_) return;
  std::vector<std::string> records;
  records.reserve(events_.size());
  for (const auto& e : events_) records.push_back(to_json(e).dump());
  file_->rewrite(records);
}

std::vector<TelemetryEvent> read_event_log(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  EventLog log;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    const std::size_t end = content.find('\n', start);
    const bool last = end == std::string::npos;
    const std::string_view line(content.data() + start, (last ? content.size() : end) - start);
    ++line_no;
    if (!trim(line).empty()) {
      try {
        log.append(event_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        // Only the final record may be torn.
        if (!last && content.find_first_not_of(" \t\r\n", end) != std::string::npos) {
          throw Error(ErrorCode::kCorruptSnapshot,
                      path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
      }
    }
    if (last) break;
    start = end + 1;
  }
  return *log.snapshot();
}

}  // namespace feedwarden
