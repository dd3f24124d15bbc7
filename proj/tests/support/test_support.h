#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "feedwarden/core/error.h"
#include "feedwarden/core/model.h"
#include "feedwarden/embedding/embedding.h"
#include "feedwarden/pipeline/backends.h"

namespace feedwarden::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("feedwarden-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Rule make_rule(std::string id, std::string description, double weight,
                      std::vector<std::string> entities = {}, Modality modality = Modality::kImageText) {
  Rule r;
  r.id = std::move(id);
  r.description = std::move(description);
  r.weight = weight;
  r.modality = modality;
  r.core_entities = std::move(entities);
  return r;
}

inline FeedItem make_item(std::string id, std::string title, std::optional<std::string> image_ref = {}) {
  FeedItem item;
  item.id = std::move(id);
  item.title = std::move(title);
  item.image_ref = std::move(image_ref);
  return item;
}

// Deterministic clock advancing by `step` milliseconds per call.
inline std::function<std::int64_t()> stepping_clock(std::int64_t start = 1'700'000'000'000,
                                                    std::int64_t step = 0) {
  auto now = std::make_shared<std::int64_t>(start);
  return [now, step] {
    const std::int64_t t = *now;
    *now += step;
    return t;
  };
}

// Embedding provider that fails on demand.
class FlakyEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit FlakyEmbeddingProvider(std::size_t dim = kDefaultEmbeddingDim) : inner_(dim) {}
  std::size_t dimension() const override { return inner_.dimension(); }
  EmbeddingVector embed_text(std::string_view text) const override {
    if (failing) throw Error(ErrorCode::kProviderUnavailable, "embedding provider down");
    return inner_.embed_text(text);
  }
  mutable std::atomic<bool> failing{false};

 private:
  OfflineEmbeddingProvider inner_;
};

// Vision backend that fails on demand and otherwise returns fixed evidence.
class FlakyVisionBackend final : public VisionBackend {
 public:
  VisualEvidence extract(std::string_view image_ref) override {
    ++calls;
    if (failing) throw Error(ErrorCode::kBackendFailure, "vision backend down");
    VisualEvidence e;
    e.cognition.subjects = "subject of " + std::string(image_ref);
    e.source = EvidenceSource::kBackend;
    return e;
  }
  std::atomic<bool> failing{false};
  std::atomic<int> calls{0};
};

// Judge that fails on demand and otherwise passes everything.
class FlakyJudgeBackend final : public JudgeBackend {
 public:
  JudgeCapabilities capabilities() const override { return {true}; }
  JudgeVerdict judge(const JudgeRequest&) override {
    if (failing) throw Error(ErrorCode::kBackendFailure, "judge backend down");
    return {false, std::nullopt, ""};
  }
  std::atomic<bool> failing{false};
};

}  // namespace feedwarden::testing
