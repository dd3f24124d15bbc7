#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "feedwarden/core/hash.h"

namespace feedwarden {

inline constexpr std::size_t kDefaultEmbeddingDim = 384;

/// Unit-norm embedding. Construction normalizes; a zero vector is rejected.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  static EmbeddingVector normalized(std::vector<double> raw);
  // Wraps values without renormalizing; callers guarantee unit norm.
  static EmbeddingVector from_unit(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t dimension() const { return values_.size(); }
  double norm() const;
  EmbeddingVector negated() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}
  std::vector<double> values_;
};

// Dot product of two unit vectors, clamped to [-1, 1].
// Throws Error(kDimensionMismatch) on unequal dimensions.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

// Normalization leaves cosines a few ulps off their exact value (a true 0.5
// can come out as 0.4999999999999999), so threshold tests allow this slack.
inline constexpr double kSimilarityTolerance = 1e-12;

inline bool reaches_threshold(double similarity, double threshold) {
  return similarity >= threshold - kSimilarityTolerance;
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // Throws kEmptyText or kProviderUnavailable.
  virtual EmbeddingVector embed_text(std::string_view text) const = 0;
};

/// Bag-of-buckets embedding: each token hashes (FNV-1a) into one of `dim`
/// buckets, counts accumulate, and the result is L2-normalized.
class OfflineEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit OfflineEmbeddingProvider(std::size_t dim = kDefaultEmbeddingDim,
                                    std::uint64_t seed = kFnvOffsetBasis);

  std::size_t dimension() const override { return dim_; }
  EmbeddingVector embed_text(std::string_view text) const override;

  std::size_t bucket_of(std::string_view token) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

struct RemoteEndpoint {
  std::string url;  // e.g. http://127.0.0.1:8081/embed
  int timeout_ms = 2000;
  int retries = 1;
  int max_in_flight = 8;
};

/// HTTP+JSON provider: POST {"input": text} -> {"vector": [...]}.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(RemoteEndpoint endpoint, std::size_t dim);

  std::size_t dimension() const override { return dim_; }
  EmbeddingVector embed_text(std::string_view text) const override;

 private:
  RemoteEndpoint endpoint_;
  std::size_t dim_;
  mutable std::counting_semaphore<1024> in_flight_;
};

/// Memoizes another provider. Safe for concurrent use.
class CachingEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit CachingEmbeddingProvider(std::shared_ptr<const EmbeddingProvider> inner);

  std::size_t dimension() const override { return inner_->dimension(); }
  EmbeddingVector embed_text(std::string_view text) const override;

 private:
  std::shared_ptr<const EmbeddingProvider> inner_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
};

class CrossModalProvider {
 public:
  virtual ~CrossModalProvider() = default;
  // Similarity in [-1, 1]. Throws kImageUnresolvable or kProviderUnavailable.
  virtual double similarity(std::string_view image_ref, std::string_view text) const = 0;
};

/// Fixture images: a caption (and optionally structured evidence JSON) per ref.
class ImageFixtureStore {
 public:
  void add_caption(std::string image_ref, std::string caption);
  void add_evidence_json(std::string image_ref, std::string evidence_json);

  // Reads <ref>.caption.txt and <ref>.evidence.json files from a directory.
  static ImageFixtureStore load_directory(const std::filesystem::path& dir);
  // Reads a JSONL manifest of {image_ref, caption, evidence} records.
  static ImageFixtureStore load_manifest(const std::filesystem::path& file);
  // Directory or manifest, by path type.
  static ImageFixtureStore load(const std::filesystem::path& path);

  const std::string* caption(std::string_view image_ref) const;
  const std::string* evidence_json(std::string_view image_ref) const;

 private:
  std::map<std::string, std::string, std::less<>> captions_;
  std::map<std::string, std::string, std::less<>> evidence_;
};

/// Stands in for CLIP: embeds the fixture caption and compares it as text.
class CaptionCrossModalProvider final : public CrossModalProvider {
 public:
  CaptionCrossModalProvider(std::shared_ptr<const ImageFixtureStore> images,
                            std::shared_ptr<const EmbeddingProvider> text);

  double similarity(std::string_view image_ref, std::string_view text) const override;

 private:
  std::shared_ptr<const ImageFixtureStore> images_;
  std::shared_ptr<const EmbeddingProvider> text_;
};

/// HTTP+JSON provider: POST {"image_ref", "text"} -> {"similarity": x}.
class RemoteCrossModalProvider final : public CrossModalProvider {
 public:
  explicit RemoteCrossModalProvider(RemoteEndpoint endpoint);

  double similarity(std::string_view image_ref, std::string_view text) const override;

 private:
  RemoteEndpoint endpoint_;
  mutable std::counting_semaphore<1024> in_flight_;
};

}  // namespace feedwarden
