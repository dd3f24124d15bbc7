#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/model.h"

namespace feedwarden {

enum class EventKind { kExposure, kOrigBlock, kAppealPassed, kManualFilterAdd, kManualEvent };

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

// Detail tags carried by manual events.
inline constexpr std::string_view kDetailSlider = "slider";

struct TelemetryEvent {
  std::int64_t timestamp_ms = 0;
  std::string user_id;
  EventKind kind = EventKind::kExposure;
  std::string item_id;
  Layer layer = Layer::kUnknown;
  std::optional<std::string> rule_id;
  std::optional<std::int64_t> latency_ms;
  int day_index = 0;   // 1-based usage day; 0 asks the log to derive it
  std::string detail;  // sub-kind for manual events, e.g. "slider"

  friend bool operator==(const TelemetryEvent&, const TelemetryEvent&) = default;
};

nlohmann::json to_json(const TelemetryEvent& event);
TelemetryEvent event_from_json(const nlohmann::json& j);

// Reads an NDJSON event log without modifying it. A torn final record is
// skipped; damage before the tail throws Error(kCorruptSnapshot). Events
// without a day index get one derived as the log would on append.
std::vector<TelemetryEvent> read_event_log(const std::filesystem::path& path);

class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  virtual void record(TelemetryEvent event) = 0;
};

/// Append-only event log. Appends are serialized; readers take an immutable
/// snapshot pinned at the current offset. When backed by a file, each record
/// is one JSON line written and fsync'ed before append() returns.
class EventLog final : public TelemetrySink {
 public:
  EventLog() = default;
  // Replays an existing file. A torn final record (no newline or unparseable)
  // is discarded and truncated away; damage before the tail throws
  // Error(kCorruptSnapshot).
  explicit EventLog(std::filesystem::path file);

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void record(TelemetryEvent event) override { append(std::move(event)); }
  TelemetryEvent append(TelemetryEvent event);

  std::shared_ptr<const std::vector<TelemetryEvent>> snapshot() const;
  std::size_t size() const;
  // Bytes of durable log content; equals the file size after replay.
  std::uint64_t offset() const;
  // Torn bytes dropped during the last replay.
  std::uint64_t discarded_bytes() const;

  // Rewrites the file from memory via a temp file and rename.
  void compact();

 private:
  void assign_day(TelemetryEvent& event);

  mutable std::mutex mutex_;
  std::vector<TelemetryEvent> events_;
  mutable std::shared_ptr<const std::vector<TelemetryEvent>> cached_;
  std::map<std::string, std::int64_t> first_activity_ms_;
  std::unique_ptr<AppendOnlyFile> file_;
};

}  // namespace feedwarden
