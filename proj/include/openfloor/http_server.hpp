#pragma once

#include <memory>
#include <string>

#include "openfloor/clock.hpp"
#include "openfloor/service.hpp"

namespace httplib {
class Server;
}

namespace openfloor {

struct HttpOptions {
    // When set, POST /api/sim/clock moves this clock (test mode only).
    ManualClock* sim_clock = nullptr;
};

// JSON-over-HTTP binding of Service. Tokens come from the body's
// "auth_token" or an "Authorization: Bearer" header.
class HttpServer {
public:
    HttpServer(Service& service, HttpOptions options = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds; port 0 picks a free one. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    // Blocks serving requests until stop().
    bool listen();
    void stop();
    void wait_until_ready() const;

private:
    void routes();

    Service& service_;
    HttpOptions options_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace openfloor
