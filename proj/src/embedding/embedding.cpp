#include "feedwarden/embedding/embedding.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "feedwarden/core/error.h"
#include "feedwarden/core/http_client.h"
#include "feedwarden/core/text.h"

namespace feedwarden {

namespace {

// Releases a counting_semaphore slot on scope exit.
class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<1024>& sem_;
};

std::ptrdiff_t slot_count(int max_in_flight) {
  return std::clamp<std::ptrdiff_t>(max_in_flight, 1, 1024);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<double> raw) {
  double sum = 0.0;
  for (double x : raw) sum += x * x;
  const double norm = std::sqrt(sum);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalize a zero or non-finite vector");
  }
  for (double& x : raw) x /= norm;
  return EmbeddingVector(std::move(raw));
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
  return EmbeddingVector(std::move(values));
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double x : values_) sum += x * x;
  return std::sqrt(sum);
}

EmbeddingVector EmbeddingVector::negated() const {
  std::vector<double> out(values_);
  for (double& x : out) x = -x;
  return EmbeddingVector(std::move(out));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dimension() != v.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of vectors with dimensions " + std::to_string(u.dimension()) +
                    " and " + std::to_string(v.dimension()));
  }
  double dot = 0.0;
  auto a = u.values();
  auto b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

OfflineEmbeddingProvider::OfflineEmbeddingProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "embedding dimension must be > 0");
}

std::size_t OfflineEmbeddingProvider::bucket_of(std::string_view token) const {
  return static_cast<std::size_t>(fnv1a64(token, seed_) % dim_);
}

EmbeddingVector OfflineEmbeddingProvider::embed_text(std::string_view text) const {
  const auto tokens = tokenize(text);
  if (tokens.empty()) throw Error(ErrorCode::kEmptyText, "cannot embed empty text");
  std::vector<double> counts(dim_, 0.0);
  for (const auto& token : tokens) counts[bucket_of(token)] += 1.0;
  return EmbeddingVector::normalized(std::move(counts));
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEndpoint endpoint, std::size_t dim)
    : endpoint_(std::move(endpoint)), dim_(dim), in_flight_(slot_count(endpoint_.max_in_flight)) {}

EmbeddingVector RemoteEmbeddingProvider::embed_text(std::string_view text) const {
  if (trim(text).empty()) throw Error(ErrorCode::kEmptyText, "cannot embed empty text");
  SlotGuard slot(in_flight_);
  auto response = post_json(endpoint_.url, {{"input", std::string(text)}}, endpoint_.timeout_ms,
                            endpoint_.retries, ErrorCode::kProviderUnavailable);
  auto it = response.find("vector");
  if (it == response.end() || !it->is_array() || it->size() != dim_) {
    throw Error(ErrorCode::kProviderUnavailable, "embedding response has wrong shape");
  }
  std::vector<double> values;
  values.reserve(dim_);
  for (const auto& x : *it) {
    if (!x.is_number()) throw Error(ErrorCode::kProviderUnavailable, "non-numeric embedding");
    values.push_back(x.get<double>());
  }
  try {
    return EmbeddingVector::normalized(std::move(values));
  } catch (const Error&) {
    throw Error(ErrorCode::kProviderUnavailable, "remote provider returned a zero vector");
  }
}

CachingEmbeddingProvider::CachingEmbeddingProvider(
    std::shared_ptr<const EmbeddingProvider> inner)
    : inner_(std::move(inner)) {}

EmbeddingVector CachingEmbeddingProvider::embed_text(std::string_view text) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(std::string(text)); it != cache_.end()) return it->second;
  }
  EmbeddingVector vector = inner_->embed_text(text);
  std::lock_guard lock(mutex_);
  cache_.emplace(std::string(text), vector);
  return vector;
}

void ImageFixtureStore::add_caption(std::string image_ref, std::string caption) {
  captions_[std::move(image_ref)] = std::move(caption);
}

void ImageFixtureStore::add_evidence_json(std::string image_ref, std::string evidence_json) {
  evidence_[std::move(image_ref)] = std::move(evidence_json);
}

ImageFixtureStore ImageFixtureStore::load_directory(const std::filesystem::path& dir) {
  ImageFixtureStore store;
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kInvalidArgument, "image fixture directory not found: " + dir.string());
  }
  constexpr std::string_view kCaption = ".caption.txt";
  constexpr std::string_view kEvidence = ".evidence.json";
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    auto ends_with = [&name](std::string_view suffix) {
      return name.size() > suffix.size() &&
             name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(kCaption)) {
      store.add_caption(name.substr(0, name.size() - kCaption.size()),
                        std::string(trim(read_file(entry.path()))));
    } else if (ends_with(kEvidence)) {
      store.add_evidence_json(name.substr(0, name.size() - kEvidence.size()),
                              read_file(entry.path()));
    }
  }
  return store;
}

ImageFixtureStore ImageFixtureStore::load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "image manifest not found: " + file.string());
  ImageFixtureStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string ref = j.at("image_ref").get<std::string>();
      if (auto it = j.find("caption"); it != j.end() && !it->is_null()) {
        store.add_caption(ref, std::string(trim(it->get<std::string>())));
      }
      if (auto it = j.find("evidence"); it != j.end() && !it->is_null()) {
        store.add_evidence_json(ref, it->dump());
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

ImageFixtureStore ImageFixtureStore::load(const std::filesystem::path& path) {
  return std::filesystem::is_directory(path) ? load_directory(path) : load_manifest(path);
}

const std::string* ImageFixtureStore::caption(std::string_view image_ref) const {
  auto it = captions_.find(image_ref);
  return it == captions_.end() ? nullptr : &it->second;
}

const std::string* ImageFixtureStore::evidence_json(std::string_view image_ref) const {
  auto it = evidence_.find(image_ref);
  return it == evidence_.end() ? nullptr : &it->second;
}

CaptionCrossModalProvider::CaptionCrossModalProvider(
    std::shared_ptr<const ImageFixtureStore> images,
    std::shared_ptr<const EmbeddingProvider> text)
    : images_(std::move(images)), text_(std::move(text)) {}

double CaptionCrossModalProvider::similarity(std::string_view image_ref,
                                             std::string_view text) const {
  const std::string* caption = images_->caption(image_ref);
  if (caption == nullptr) {
    throw Error(ErrorCode::kImageUnresolvable, "no fixture for image " + std::string(image_ref));
  }
  return cosine(text_->embed_text(*caption), text_->embed_text(text));
}

RemoteCrossModalProvider::RemoteCrossModalProvider(RemoteEndpoint endpoint)
    : endpoint_(std::move(endpoint)), in_flight_(slot_count(endpoint_.max_in_flight)) {}

double RemoteCrossModalProvider::similarity(std::string_view image_ref,
                                            std::string_view text) const {
  SlotGuard slot(in_flight_);
  auto response =
      post_json(endpoint_.url, {{"image_ref", std::string(image_ref)}, {"text", std::string(text)}},
                endpoint_.timeout_ms, endpoint_.retries, ErrorCode::kProviderUnavailable);
  auto it = response.find("similarity");
  if (it == response.end() || !it->is_number()) {
    throw Error(ErrorCode::kProviderUnavailable, "similarity response has wrong shape");
  }
  return std::clamp(it->get<double>(), -1.0, 1.0);
}

}  // namespace feedwarden
