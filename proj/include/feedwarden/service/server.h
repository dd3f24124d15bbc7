#pragma once

#include <memory>
#include <string>

#include "feedwarden/core/error.h"
#include "feedwarden/service/engine.h"

namespace httplib {
class Server;
}

namespace feedwarden {

// HTTP status for a domain error code: 4xx for caller mistakes, 409 for
// state conflicts, 502 for backend failures, 500 for storage faults.
int http_status(ErrorCode code);

// The fixed error envelope {code, message}.
nlohmann::json error_envelope(std::string_view code, std::string_view message);

/// JSON-only HTTP front end over an Engine. The caller owns the Engine.
/// Every request names its user in the X-User-Id header.
class ApiServer {
 public:
  explicit ApiServer(Engine& engine);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds the listener; port 0 picks a free port. Returns the bound port, or
  // -1 when the address is unavailable.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  void routes();

  Engine& engine_;
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace feedwarden
