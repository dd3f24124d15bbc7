#include "feedwarden/core/http_client.h"

#include <httplib.h>

namespace feedwarden {

namespace {

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url, ErrorCode failure_code) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) {
    throw Error(failure_code, "only http:// endpoints are supported: " + url);
  }
  const auto slash = url.find('/', scheme.size());
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         int timeout_ms, int retries, ErrorCode failure_code) {
  const SplitUrl target = split_url(url, failure_code);
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= retries; ++attempt) {
    httplib::Client client(target.origin);
    const auto sec = timeout_ms / 1000;
    const auto usec = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    auto response = client.Post(target.path, body.dump(), "application/json");
    if (!response) {
      last_error = httplib::to_string(response.error());
      continue;
    }
    if (response->status < 200 || response->status >= 300) {
      last_error = "HTTP status " + std::to_string(response->status);
      continue;
    }
    auto parsed = nlohmann::json::parse(response->body, nullptr, false);
    if (parsed.is_discarded()) {
      last_error = "response is not JSON";
      continue;
    }
    return parsed;
  }
  throw Error(failure_code, url + ": " + last_error);
}

}  // namespace feedwarden
