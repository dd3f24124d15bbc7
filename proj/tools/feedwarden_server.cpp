// feedwarden-server: serves the HTTP API for one storage root.
//
// The config path comes from --config or the FEEDWARDEN_CONFIG environment
// variable; without either, every setting takes its default.
// Exit codes: 0 clean shutdown, 1 config error, 2 storage error.

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>

#include "feedwarden/core/error.h"
#include "feedwarden/service/config.h"
#include "feedwarden/service/engine.h"
#include "feedwarden/service/server.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitStorage = 2;

feedwarden::ApiServer* g_server = nullptr;

extern "C" void handle_signal(int) {
  if (g_server) g_server->stop();
}

bool is_storage_failure(feedwarden::ErrorCode code) {
  return code == feedwarden::ErrorCode::kStorageError || code == feedwarden::ErrorCode::kCorruptSnapshot;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedwarden HTTP service"};
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (default: $FEEDWARDEN_CONFIG)");
  CLI11_PARSE(app, argc, argv);
  if (config_path.empty()) {
    if (const char* env = std::getenv("FEEDWARDEN_CONFIG")) config_path = env;
  }

  feedwarden::ServiceConfig config;
  try {
    config = config_path.empty() ? feedwarden::parse_config("") : feedwarden::load_config(config_path);
  } catch (const feedwarden::Error& e) {
    std::cerr << "config error: " << feedwarden::error_code_name(e.code()) << ": " << e.what() << "\n";
    return kExitConfig;
  }

  std::unique_ptr<feedwarden::Engine> engine;
  try {
    engine = std::make_unique<feedwarden::Engine>(config, feedwarden::make_backends(config));
  } catch (const feedwarden::Error& e) {
    std::cerr << (is_storage_failure(e.code()) ? "storage error: " : "config error: ")
              << feedwarden::error_code_name(e.code()) << ": " << e.what() << "\n";
    return is_storage_failure(e.code()) ? kExitStorage : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "storage error: " << e.what() << "\n";
    return kExitStorage;
  }

  feedwarden::ApiServer server(*engine);
  const int port = server.bind(config.host, static_cast<int>(config.port));
  if (port < 0) {
    std::cerr << "config error: cannot listen on " << config.host << ":" << config.port << "\n";
    return kExitConfig;
  }
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on " << config.host << ":" << port << std::endl;
  server.listen();
  g_server = nullptr;
  return 0;
}
