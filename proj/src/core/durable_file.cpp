#include "feedwarden/core/durable_file.h"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "feedwarden/core/error.h"

namespace feedwarden {

namespace {

[[noreturn]] void storage_error(const std::string& what) {
  throw Error(ErrorCode::kStorageError, what + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_error("write");
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

void fsync_directory(const std::filesystem::path& dir) {
  const int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kStorageError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) storage_error("open " + tmp.string());
  write_all(fd, content);
  if (::fsync(fd) != 0) storage_error("fsync " + tmp.string());
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kStorageError, "rename " + tmp.string() + ": " + ec.message());
  fsync_directory(path.parent_path());
}

AppendOnlyFile::AppendOnlyFile(std::filesystem::path path,
                               const std::function<bool(std::string_view)>& on_record)
    : path_(std::move(path)) {
  std::string content;
  if (std::filesystem::exists(path_)) content = read_file(path_);

  std::size_t pos = 0;
  std::uint64_t good = 0;
  while (pos < content.size()) {
    const std::size_t newline = content.find('\n', pos);
    const bool complete = newline != std::string::npos;
    const bool last = !complete || newline + 1 == content.size();
    const std::string_view record(content.data() + pos,
                                  (complete ? newline : content.size()) - pos);
    if (!complete || !on_record(record)) {
      if (!last) {
        throw Error(ErrorCode::kCorruptSnapshot, path_.string() + ": damaged record at byte " +
                                                     std::to_string(pos));
      }
      break;
    }
    pos = newline + 1;
    good = pos;
  }
  discarded_ = content.size() - good;

  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) storage_error("open " + path_.string());
  if (::ftruncate(fd_, static_cast<off_t>(good)) != 0) storage_error("truncate " + path_.string());
  if (::lseek(fd_, static_cast<off_t>(good), SEEK_SET) < 0) storage_error("seek " + path_.string());
  offset_ = good;
}

AppendOnlyFile::~AppendOnlyFile() {
  if (fd_ >= 0) ::close(fd_);
}

void AppendOnlyFile::append(std::string_view record) {
  std::string line(record);
  line.push_back('\n');
  write_all(fd_, line);
  if (::fsync(fd_) != 0) storage_error("fsync " + path_.string());
  offset_ += line.size();
}

void AppendOnlyFile::rewrite(const std::vector<std::string>& records) {
  std::string content;
  for (const auto& r : records) {
    content += r;
    content.push_back('\n');
  }
  write_file_atomic(path_, content);
  if (fd_ >= 0) ::close(fd_);
  fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd_ < 0) storage_error("reopen " + path_.string());
  offset_ = content.size();
}

}  // namespace feedwarden
