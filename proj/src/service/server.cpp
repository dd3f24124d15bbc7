#include "feedwarden/service/server.h"

#include <httplib.h>

#include <optional>

#include "feedwarden/core/json_codec.h"
#include "feedwarden/telemetry/metrics.h"

namespace feedwarden {

namespace {

constexpr const char* kJson = "application/json";
constexpr int kDefaultTopRules = 15;
constexpr int kDefaultGovernanceDays = 7;

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  send(res, status, error_envelope(code, message));
}

Json parse_body(const httplib::Request& req, bool allow_empty = false) {
  if (req.body.empty()) {
    if (allow_empty) return Json::object();
    throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  }
  Json j;
  try {
    j = Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("request body: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return j;
}

std::string user_of(const httplib::Request& req) {
  std::string user = req.get_header_value("X-User-Id");
  if (user.empty()) throw Error(ErrorCode::kInvalidArgument, "missing X-User-Id header");
  return user;
}

std::optional<int> int_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const std::string text = req.get_param_value(name);
  try {
    std::size_t used = 0;
    const int value = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("query parameter ") + name + " must be an integer");
  }
}

// Events of one user, or of every user when the query asks for scope=all.
std::vector<TelemetryEvent> events_for(const Engine& engine, const httplib::Request& req,
                                       const std::string& user) {
  const auto snapshot = engine.telemetry();
  if (req.get_param_value("scope") == "all") return *snapshot;
  std::vector<TelemetryEvent> out;
  for (const auto& e : *snapshot) {
    if (e.user_id == user) out.push_back(e);
  }
  return out;
}

Json rules_json(const std::vector<Rule>& rules) {
  Json out = Json::array();
  for (const auto& r : rules) out.push_back(r);
  return out;
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Wraps a handler with the error envelope mapping.
Handler guarded(Handler inner) {
  return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
    try {
      inner(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
    } catch (const Json::exception& e) {
      send_error(res, 400, error_code_name(ErrorCode::kInvalidArgument), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  };
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownDossier:
    case ErrorCode::kUnknownAppeal:
    case ErrorCode::kUnknownProposal:
    case ErrorCode::kUnknownRule:
      return 404;
    case ErrorCode::kStaleProposal:
    case ErrorCode::kAlreadyResolved:
    case ErrorCode::kNotABlock:
      return 409;
    case ErrorCode::kBackendFailure:
    case ErrorCode::kMalformedVerdict:
    case ErrorCode::kMalformedProposal:
    case ErrorCode::kProviderUnavailable:
      return 502;
    case ErrorCode::kStorageError:
    case ErrorCode::kCorruptSnapshot:
      return 500;
    default:
      return 400;
  }
}

Json error_envelope(std::string_view code, std::string_view message) {
  return {{"code", code}, {"message", message}};
}

ApiServer::ApiServer(Engine& engine) : engine_(engine), http_(std::make_unique<httplib::Server>()) {
  // httplib defaults to SO_REUSEPORT, which lets a second server share a busy
  // port; plain SO_REUSEADDR makes an occupied port fail to bind.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  routes();
}

ApiServer::~ApiServer() = default;

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return http_->bind_to_any_port(host);
  return http_->bind_to_port(host, port) ? port : -1;
}

void ApiServer::listen() { http_->listen_after_bind(); }

void ApiServer::stop() { http_->stop(); }

void ApiServer::routes() {
  auto& s = *http_;
  Engine& engine = engine_;

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const std::string code = res.status == 404 ? "NotFound" : "HttpError";
      send_error(res, res.status, code, httplib::status_message(res.status));
    }
  });

  s.Post("/v1/adjudicate", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    FeedItem item = parse_body(req).template get<FeedItem>();
    send(res, 200, to_json(engine.adjudicate(user, item).adjudication));
  }));

  s.Get("/v1/rules", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, {{"rules", rules_json(engine.rules(user_of(req)))}});
  }));
  s.Get("/v1/rules/:id", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, engine.rule(user_of(req), req.path_params.at("id")));
  }));
  s.Get("/v1/rules/:id/history", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, {{"versions", rules_json(engine.rule_history(user_of(req), req.path_params.at("id")))}});
  }));
  s.Post("/v1/rules", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    send(res, 201, engine.create_rule(user, parse_body(req)));
  }));
  const auto update = guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    send(res, 200, engine.patch_rule(user, req.path_params.at("id"), parse_body(req)));
  });
  s.Patch("/v1/rules/:id", update);
  s.Put("/v1/rules/:id", update);
  s.Delete("/v1/rules/:id", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, engine.delete_rule(user_of(req), req.path_params.at("id")));
  }));

  s.Post("/v1/intent", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    const Json body = parse_body(req);
    const std::string utterance = body.at("utterance").template get<std::string>();
    send(res, 201, to_json(engine.parse_intent(user, utterance, optional_string(body, "platform_hint"))));
  }));
  s.Get("/v1/proposals", guarded([&engine](const auto& req, auto& res) {
    Json out = Json::array();
    for (const auto& p : engine.proposals(user_of(req))) out.push_back(to_json(p));
    send(res, 200, {{"proposals", out}});
  }));
  s.Post("/v1/proposals/:id/confirm", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    const Json body = parse_body(req, true);
    const Json edits = body.contains("edits") ? body.at("edits") : Json::object();
    const ConfirmResult r = engine.confirm_proposal(user, req.path_params.at("id"), edits);
    send(res, 200, {{"proposal", to_json(r.proposal)}, {"rule", r.rule}, {"created", r.created}});
  }));
  s.Post("/v1/proposals/:id/reject", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, to_json(engine.reject_proposal(user_of(req), req.path_params.at("id"))));
  }));

  s.Get("/v1/dossiers/:id", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, to_json(*engine.dossier(user_of(req), req.path_params.at("id"))));
  }));

  s.Post("/v1/appeals", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    const Json body = parse_body(req);
    const AppealResult r = engine.file_appeal(user, body.at("dossier_id").template get<std::string>(),
                                              body.value("message", std::string()));
    Json out = {{"appeal", to_json(r.appeal)}, {"dossier", to_json(*r.dossier)}};
    out["dispute_error"] = optional_to_json(r.dispute_error);
    send(res, 201, out);
  }));
  s.Get("/v1/appeals/:id", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, to_json(engine.appeal(user_of(req), req.path_params.at("id"))));
  }));
  s.Post("/v1/appeals/:id/resolve", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    const Json body = parse_body(req);
    const AppealDecision decision = parse_appeal_decision(body.at("decision").template get<std::string>());
    const ResolveResult r =
        engine.resolve_appeal(user, req.path_params.at("id"), decision, body.value("apply_proposal", true));
    Json out = {{"appeal", to_json(r.appeal)}};
    out["applied_rule"] = r.applied_rule ? Json(*r.applied_rule) : Json(nullptr);
    send(res, 200, out);
  }));

  s.Get("/v1/profile", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, engine.profile(user_of(req)));
  }));
  s.Patch("/v1/profile/tags/:tag", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    const Json body = parse_body(req);
    const Json& slider = body.at("slider");
    if (!slider.is_number()) throw Error(ErrorCode::kInvalidArgument, "slider must be a number");
    send(res, 200, engine.set_slider(user, req.path_params.at("tag"), slider.template get<double>()));
  }));
  s.Post("/v1/profile/interactions", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    send(res, 200, engine.ingest_interactions(user, parse_body(req)));
  }));
  s.Post("/v1/session/advance", guarded([&engine](const auto& req, auto& res) {
    send(res, 200, engine.advance_session(user_of(req)));
  }));

  s.Get("/v1/telemetry/summary", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    DayWindow window{int_param(req, "first_day"), int_param(req, "last_day")};
    send(res, 200, to_json(proxy_metrics(events_for(engine, req, user), window)));
  }));
  s.Get("/v1/telemetry/layers", guarded([&engine](const auto& req, auto& res) {
    const auto rows = layer_distribution(events_for(engine, req, user_of(req)));
    send(res, 200, {{"rows", to_json(rows)}, {"table", render_layer_table(rows)}});
  }));
  s.Get("/v1/telemetry/longtail", guarded([&engine](const auto& req, auto& res) {
    const int top = int_param(req, "top").value_or(kDefaultTopRules);
    const int m = int_param(req, "m").value_or(2);
    if (top < 1 || m < 0) throw Error(ErrorCode::kInvalidArgument, "top must be >= 1 and m >= 0");
    const auto report = rule_longtail(events_for(engine, req, user_of(req)), static_cast<std::size_t>(top), m);
    Json out = to_json(report);
    out["table"] = render_longtail_table(report);
    send(res, 200, out);
  }));
  s.Get("/v1/telemetry/governance", guarded([&engine](const auto& req, auto& res) {
    const int days = int_param(req, "days").value_or(kDefaultGovernanceDays);
    if (days < 1) throw Error(ErrorCode::kInvalidArgument, "days must be >= 1");
    const auto report = governance_efficiency(events_for(engine, req, user_of(req)), days);
    Json out = to_json(report);
    out["table"] = render_governance_table(report);
    send(res, 200, out);
  }));

  s.Get("/v1/graph", guarded([&engine](const auto& req, auto& res) {
    const std::string user = user_of(req);
    Json out = engine.graph(user);
    Json ranking = Json::array();
    for (const auto& r : engine.ranking(user)) ranking.push_back({{"id", r.id}, {"score", r.score}});
    out["ranking"] = ranking;
    send(res, 200, out);
  }));
  s.Get("/v1/config", guarded([&engine](const auto&, auto& res) { send(res, 200, engine.config().to_json()); }));
}

}  // namespace feedwarden
