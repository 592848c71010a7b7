#include "openfloor/http_server.hpp"

#include <httplib.h>

namespace openfloor {

namespace {

struct BadInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const RpcError& e) { send_json(res, e.status, e.body()); }

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw BadInput("body is not a JSON object");
    return j;
}

std::string token_of(const httplib::Request& req, const json& body) {
    if (body.contains("auth_token") && body["auth_token"].is_string())
        return body["auth_token"].get<std::string>();
    const auto header = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (header.rfind(kBearer, 0) == 0) return header.substr(kBearer.size());
    return {};
}

template <class T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) throw BadInput(std::string("missing ") + name);
    try {
        return j.at(name).get<T>();
    } catch (const json::exception&) {
        throw BadInput(std::string("bad ") + name);
    }
}

template <class T>
std::optional<T> optional_field(const json& j, const char* name) {
    if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
    return field<T>(j, name);
}

template <class T>
void reply(httplib::Response& res, const Rpc<T>& r) {
    if (!r) return send_error(res, r.error());
    if constexpr (std::is_same_v<T, Ok>) {
        send_json(res, 200, json{{"ok", true}});
    } else {
        send_json(res, 200, json(r.value()));
    }
}

// Wraps a handler so malformed input becomes a uniform 400.
template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const BadInput& e) {
            send_error(res, RpcError::bad_request(e.what()));
        } catch (const json::exception& e) {
            send_error(res, RpcError::bad_request(e.what()));
        } catch (const std::invalid_argument& e) {
            send_error(res, RpcError::bad_request(e.what()));
        }
    };
}

}  // namespace

HttpServer::HttpServer(Service& service, HttpOptions options)
    : service_(service), options_(options), server_(std::make_unique<httplib::Server>()) {
    routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::routes() {
    auto& s = *server_;
    Service& svc = service_;

    s.Post("/api/login", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               auto body = parse_body(req);
               auto r = svc.login(field<std::string>(body, "username"),
                                  field<std::string>(body, "password"));
               if (!r) return send_error(res, r.error());
               send_json(res, 200, json{{"auth_token", r->auth_token}, {"person_id", r->person_id}});
           }));

    s.Post("/api/poll", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               auto body = parse_body(req);
               PollRequest p;
               p.auth_token = token_of(req, body);
               p.auction_id = field<std::string>(body, "auction_id");
               p.cursor = body.contains("cursor") ? field<std::int64_t>(body, "cursor") : 0;
               p.client_send_time = optional_field<TimeMs>(body, "client_send_time").value_or(0);
               reply(res, svc.poll(p));
           }));

    s.Post("/api/bid", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               auto body = parse_body(req);
               BidRequest b;
               b.auth_token = token_of(req, body);
               b.auction_id = field<std::string>(body, "auction_id");
               b.slot_id = field<std::string>(body, "slot_id");
               b.amount = field<std::int64_t>(body, "amount");
               b.cursor_at_submit = field<std::int64_t>(body, "cursor_at_submit");
               b.client_send_time = optional_field<TimeMs>(body, "client_send_time").value_or(0);
               reply(res, svc.submit_bid(b));
           }));

    s.Get("/api/auctions", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              auto r = svc.list_auctions(token_of(req, json::object()));
              if (!r) return send_error(res, r.error());
              send_json(res, 200, json{{"auctions", r.value()}});
          }));

    s.Post("/api/admin/auction", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               auto body = parse_body(req);
               const auto token = token_of(req, body);
               if (!body.contains("config")) throw BadInput("missing config");
               AuctionConfig config;
               try {
                   config = body.at("config").get<AuctionConfig>();
               } catch (const std::exception& e) {
                   throw BadInput(std::string("bad config: ") + e.what());
               }
               auto r = svc.create_auction(token, config,
                                           optional_field<std::string>(body, "auctioneer_id"));
               if (!r) return send_error(res, r.error());
               send_json(res, 200, json{{"auction_id", r.value()}, {"phase", "Scheduled"}});
           }));

    s.Post(R"(/api/admin/([^/]+)/(admit|ban|prolong|cancel|invite|contract|password-delivered))",
           guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               auto body = parse_body(req);
               const auto token = token_of(req, body);
               const std::string id = req.matches[1];
               const std::string op = req.matches[2];
               if (op == "admit") return reply(res, svc.admit(token, id, field<std::string>(body, "person_id")));
               if (op == "ban") return reply(res, svc.ban(token, id, field<std::string>(body, "person_id")));
               if (op == "prolong") return reply(res, svc.prolong(token, id, field<DurationMs>(body, "delta_ms")));
               if (op == "cancel") return reply(res, svc.cancel(token, id));
               if (op == "contract")
                   return reply(res, svc.record_contract(token, id, field<std::string>(body, "person_id")));
               if (op == "password-delivered")
                   return reply(res, svc.record_password_delivered(
                                         token, id, field<std::string>(body, "person_id")));
               auto role = parse_role(field<std::string>(body, "role"));
               if (!role) throw BadInput("bad role");
               reply(res, svc.invite(token, id, field<std::string>(body, "person_id"), *role,
                                     optional_field<std::string>(body, "slot_id"),
                                     optional_field<TimeMs>(body, "valid_from"),
                                     optional_field<TimeMs>(body, "valid_until")));
           }));

    s.Get(R"(/api/admin/([^/]+)/status)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              auto r = svc.list_status(token_of(req, json::object()), req.matches[1]);
              if (!r) return send_error(res, r.error());
              send_json(res, 200, json{{"participants", r.value()}});
          }));

    if (options_.sim_clock) {
        ManualClock* clock = options_.sim_clock;
        s.Post("/api/sim/clock", guarded([clock, &svc](const httplib::Request& req, httplib::Response& res) {
                   auto body = parse_body(req);
                   if (auto t = optional_field<TimeMs>(body, "now")) clock->set(*t);
                   if (auto d = optional_field<DurationMs>(body, "advance_ms")) {
                       if (*d < 0) throw BadInput("advance_ms must be non-negative");
                       clock->advance(*d);
                   }
                   svc.tick_all();
                   send_json(res, 200, json{{"server_time", clock->now()}});
               }));
    }

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            json body{{"error", res.status == 404 ? "NotFound" : "HttpError"}};
            res.set_content(body.dump(), "application/json");
        }
    });
}

}  // namespace openfloor
