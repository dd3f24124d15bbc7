#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "feedwarden/core/error.h"

namespace feedwarden {

// POSTs a JSON body to an http:// URL and returns the parsed JSON response.
// Transport errors, timeouts, non-2xx statuses and unparseable bodies are
// retried `retries` times, then reported as Error(failure_code).
nlohmann::json post_json(const std::string& url, const nlohmann::json& body,
                         int timeout_ms, int retries, ErrorCode failure_code);

}  // namespace feedwarden
