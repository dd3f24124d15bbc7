#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace feedwarden {

/// Newline-delimited append-only record file. Each append is written and
/// fsync'ed before returning.
class AppendOnlyFile {
 public:
  // Replays complete records through `on_record`, which returns false for a
  // record it cannot decode. A torn or undecodable final record is truncated
  // away; an undecodable record before the tail throws Error(kCorruptSnapshot).
  AppendOnlyFile(std::filesystem::path path,
                 const std::function<bool(std::string_view)>& on_record);
  ~AppendOnlyFile();

  AppendOnlyFile(const AppendOnlyFile&) = delete;
  AppendOnlyFile& operator=(const AppendOnlyFile&) = delete;

  void append(std::string_view record);
  // Atomically replaces the whole file (temp file, fsync, rename).
  void rewrite(const std::vector<std::string>& records);

  std::uint64_t offset() const { return offset_; }
  std::uint64_t discarded_bytes() const { return discarded_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::uint64_t offset_ = 0;
  std::uint64_t discarded_ = 0;
};

// Writes via a temp file, fsync and rename so readers never see partial data.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace feedwarden
