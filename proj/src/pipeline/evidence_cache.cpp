#include "feedwarden/pipeline/evidence_cache.h"

#include <mutex>

#include "feedwarden/core/error.h"
#include "feedwarden/core/hash.h"
#include "feedwarden/core/json_codec.h"

namespace feedwarden {

std::string EvidenceCache::key_for(std::string_view image_ref) { return md5_hex(image_ref); }

std::optional<VisualEvidence> EvidenceCache::get(std::string_view image_ref) const {
  std::string bytes;
  {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key_for(image_ref));
    if (it == entries_.end()) return std::nullopt;
    bytes = it->second;
  }
  try {
    return nlohmann::json::parse(bytes).get<VisualEvidence>();
  } catch (const std::exception&) {
    ++corrupt_reads_;
    return std::nullopt;
  }
}

void EvidenceCache::put(std::string_view image_ref, const VisualEvidence& evidence) {
  put_raw(image_ref, nlohmann::json(evidence).dump());
}

void EvidenceCache::put_raw(std::string_view image_ref, std::string bytes) {
  std::string key = key_for(image_ref);
  std::unique_lock lock(mutex_);
  entries_[std::move(key)] = std::move(bytes);
}

std::size_t EvidenceCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

VisualEvidence extract_visual_evidence(std::string_view image_ref, VisionBackend& vision,
                                       EvidenceCache& cache) {
  if (auto cached = cache.get(image_ref)) {
    cached->source = EvidenceSource::kCache;
    return *cached;
  }
  VisualEvidence evidence;
  try {
    evidence = vision.extract(image_ref);
  } catch (const Error& e) {
    throw Error(ErrorCode::kBackendFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kBackendFailure, std::string("vision backend: ") + e.what());
  }
  evidence.source = EvidenceSource::kBackend;
  cache.put(image_ref, evidence);
  return evidence;
}

}  // namespace feedwarden
