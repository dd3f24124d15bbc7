#include "feedwarden/service/config.h"

#include <algorithm>
#include <variant>
#include <vector>

#include "feedwarden/core/durable_file.h"
#include "feedwarden/core/error.h"
#include "feedwarden/core/text.h"

namespace feedwarden {

namespace {

using Slot = std::variant<double*, std::int64_t*, bool*, std::string*>;

struct Field {
  const char* key;
  Slot slot;
  bool is_path = false;
};

std::vector<Field> fields(ServiceConfig& c) {
  return {
      {"tau_clip", &c.tau_clip},
      {"tau_e", &c.tau_e},
      {"alpha", &c.alpha},
      {"gamma", &c.gamma},
      {"star_one", &c.star_one},
      {"star_two", &c.star_two},
      {"star_k", &c.star_k},
      {"epsilon_delta", &c.epsilon_delta},
      {"transition", &c.transition},
      {"audit_all", &c.audit_all},
      {"mode", &c.mode},
      {"embedding_provider", &c.embedding_provider},
      {"embedding_dim", &c.embedding_dim},
      {"backend", &c.backend},
      {"judge_timeout_ms", &c.judge_timeout_ms},
      {"vision_timeout_ms", &c.vision_timeout_ms},
      {"embedding_timeout_ms", &c.embedding_timeout_ms},
      {"retries", &c.retries},
      {"max_in_flight", &c.max_in_flight},
      {"judge_url", &c.judge_url},
      {"vision_url", &c.vision_url},
      {"embedding_url", &c.embedding_url},
      {"cross_modal_url", &c.cross_modal_url},
      {"intent_url", &c.intent_url},
      {"dispute_url", &c.dispute_url},
      {"images", &c.images, true},
      {"judge_script", &c.judge_script, true},
      {"replay", &c.replay, true},
      {"rules", &c.rules, true},
      {"intent_table", &c.intent_table, true},
      {"dispute_table", &c.dispute_table, true},
      {"storage_root", &c.storage_root, true},
      {"host", &c.host},
      {"port", &c.port},
  };
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kValidationError, key + ": " + why);
}

void assign(const Field& field, const nlohmann::json& value, const std::filesystem::path& base_dir) {
  const std::string key = field.key;
  std::visit(
      [&](auto* target) {
        using T = std::remove_pointer_t<decltype(target)>;
        if constexpr (std::is_same_v<T, double>) {
          if (!value.is_number()) invalid(key, "must be a number");
          *target = value.get<double>();
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          if (!value.is_number_integer()) invalid(key, "must be an integer");
          *target = value.get<std::int64_t>();
        } else if constexpr (std::is_same_v<T, bool>) {
          if (!value.is_boolean()) invalid(key, "must be a boolean");
          *target = value.get<bool>();
        } else {
          if (!value.is_string()) invalid(key, "must be a string");
          std::string text = value.get<std::string>();
          if (field.is_path && !text.empty() && !base_dir.empty() &&
              std::filesystem::path(text).is_relative()) {
            text = (base_dir / text).lexically_normal().string();
          }
          *target = std::move(text);
        }
      },
      field.slot);
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

void require_open_unit(const char* key, double v) {
  if (!(v > 0.0 && v < 1.0)) invalid(key, "must lie in (0, 1)");
}

void require_unit(const char* key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) invalid(key, "must lie in [0, 1]");
}

void require_one_of(const char* key, const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (v == o) return;
  }
  std::string list;
  for (const char* o : options) list += (list.empty() ? "" : ", ") + std::string(o);
  invalid(key, "must be one of " + list);
}

}  // namespace

void validate(const ServiceConfig& c) {
  require_unit("tau_clip", c.tau_clip);
  require_unit("tau_e", c.tau_e);
  require_open_unit("alpha", c.alpha);
  require_open_unit("gamma", c.gamma);
  require_unit("star_one", c.star_one);
  require_unit("star_two", c.star_two);
  if (c.star_one > c.star_two) invalid("star_one", "must not exceed star_two");
  if (c.star_k < 1) invalid("star_k", "must be >= 1");
  require_open_unit("epsilon_delta", c.epsilon_delta);
  require_one_of("transition", c.transition, {"uniform", "similarity_weighted"});
  require_one_of("mode", c.mode,
                 {"full", "remove_image", "remove_ma", "keyword_baseline", "text_only_baseline"});
  require_one_of("embedding_provider", c.embedding_provider, {"offline", "remote"});
  if (c.embedding_dim < 1) invalid("embedding_dim", "must be >= 1");
  require_one_of("backend", c.backend, {"stub", "remote"});
  if (c.judge_timeout_ms < 1) invalid("judge_timeout_ms", "must be >= 1");
  if (c.vision_timeout_ms < 1) invalid("vision_timeout_ms", "must be >= 1");
  if (c.embedding_timeout_ms < 1) invalid("embedding_timeout_ms", "must be >= 1");
  if (c.retries < 0) invalid("retries", "must be >= 0");
  if (c.max_in_flight < 1 || c.max_in_flight > 1024) invalid("max_in_flight", "must lie in [1, 1024]");
  if (c.embedding_provider == "remote" && c.embedding_url.empty()) {
    invalid("embedding_url", "required when embedding_provider is remote");
  }
  if (c.backend == "remote") {
    if (c.judge_url.empty()) invalid("judge_url", "required when backend is remote");
    if (c.vision_url.empty()) invalid("vision_url", "required when backend is remote");
  }
  if (c.storage_root.empty()) invalid("storage_root", "must not be empty");
  if (c.port < 0 || c.port > 65535) invalid("port", "must lie in [0, 65535]");
}

nlohmann::json ServiceConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  ServiceConfig copy = *this;
  for (const auto& field : fields(copy)) {
    std::visit([&](auto* target) { j[field.key] = *target; }, field.slot);
  }
  return j;
}

AdjudicationConfig ServiceConfig::adjudication() const {
  AdjudicationConfig a;
  a.tau_clip = tau_clip;
  a.stars = {star_one, star_two};
  a.star_k = static_cast<std::size_t>(star_k);
  a.audit_all = audit_all;
  a.mode = pipeline_mode();
  return a;
}

ServiceConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ServiceConfig config;
  if (!base_dir.empty()) config.storage_root = (base_dir / config.storage_root).string();
  if (trim(text).empty()) {
    validate(config);
    return config;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)) + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "line 1: config must be a JSON object");

  auto table = fields(config);
  for (const auto& [key, value] : j.items()) {
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) invalid(key, "unknown key");
    assign(*it, value, base_dir);
  }
  validate(config);
  return config;
}

ServiceConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kParseError, "cannot read config " + path.string());
  }
  return parse_config(text, std::filesystem::absolute(path).parent_path());
}

}  // namespace feedwarden
