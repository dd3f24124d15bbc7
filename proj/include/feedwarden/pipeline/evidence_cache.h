#pragma once

#include <atomic>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "feedwarden/core/model.h"
#include "feedwarden/pipeline/backends.h"

namespace feedwarden {

/// Visual evidence keyed by the MD5 hex digest of the image URL. Entries are
/// stored serialized; an entry that fails to decode counts as a miss.
/// Concurrent access is allowed and last writer wins.
class EvidenceCache {
 public:
  static std::string key_for(std::string_view image_ref);

  std::optional<VisualEvidence> get(std::string_view image_ref) const;
  void put(std::string_view image_ref, const VisualEvidence& evidence);

  // Overwrites the stored bytes for a ref; used to exercise corruption handling.
  void put_raw(std::string_view image_ref, std::string bytes);

  std::size_t size() const;
  std::size_t corrupt_reads() const { return corrupt_reads_.load(); }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  mutable std::atomic<std::size_t> corrupt_reads_{0};
};

// Cache hit: evidence with source=cache and no backend call. Miss: backend
// call, store, source=backend. Backend errors propagate as kBackendFailure.
VisualEvidence extract_visual_evidence(std::string_view image_ref, VisionBackend& vision,
                                       EvidenceCache& cache);

}  // namespace feedwarden
