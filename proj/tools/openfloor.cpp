#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "openfloor/auth.hpp"
#include "openfloor/event_store.hpp"
#include "openfloor/http_server.hpp"
#include "openfloor/report.hpp"
#include "openfloor/service.hpp"
#include "openfloor/sim.hpp"

namespace fs = std::filesystem;
using namespace openfloor;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::optional<fs::path> resolve_data_dir(const std::string& flag) {
    if (!flag.empty()) return fs::path(flag);
    if (const char* env = std::getenv("OPENFLOOR_DATA_DIR"); env && *env) return fs::path(env);
    return std::nullopt;
}

json read_json_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    return json::parse(in);
}

int fail(const std::string& what) {
    std::cerr << "openfloor: " << what << "\n";
    return 1;
}

int serve(const std::string& listen, const std::string& data_dir_flag, const std::string& config,
          double capacity, bool sim_clock) {
    auto data_dir = resolve_data_dir(data_dir_flag);
    if (!data_dir) return fail("no data directory (use --data-dir or OPENFLOOR_DATA_DIR)");
    std::error_code ec;
    fs::create_directories(*data_dir, ec);
    if (ec) return fail(ec.message());

    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) return fail("--listen expects host:port");
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));

    Directory directory;
    if (!config.empty()) {
        try {
            directory = Directory::from_json(read_json_file(config));
        } catch (const std::exception& e) {
            return fail(std::string("config: ") + e.what());
        }
    }

    auto recovered = recover(*data_dir);
    if (!recovered) return fail("recovery failed: " + recovered.error().detail);
    auto store = EventStore::open(*data_dir);
    if (!store) return fail("cannot open log: " + store.error().detail);

    SystemClock system_clock;
    ManualClock manual_clock(system_clock.now());
    const Clock& clock = sim_clock ? static_cast<const Clock&>(manual_clock) : system_clock;

    ServiceOptions options;
    options.capacity_rps = capacity;
    Service service(std::move(directory), clock, store->get(), options, std::move(recovered->states));
    Ticker ticker(service, 100);

    HttpOptions http;
    if (sim_clock) http.sim_clock = &manual_clock;
    HttpServer server(service, http);
    const int bound = server.bind(host, port);
    if (bound < 0) return fail("cannot bind " + listen);

    // Reports are written once per finished auction.
    std::atomic<bool> running{true};
    std::set<AuctionId> done;
    auto sweep = [&] {
        for (const auto& [id, s] : service.states()) {
            if (!is_terminal(s.phase) || done.count(id)) continue;
            if (auto r = write_reports(*data_dir, s); r) done.insert(id);
        }
    };
    std::thread reporter([&] {
        while (running) {
            sweep();
            for (int i = 0; i < 10 && running; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    });

    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "openfloor: listening on " << host << ":" << bound << ", data in " << data_dir->string()
              << "\n";
    server.listen();
    g_server = nullptr;
    running = false;
    reporter.join();
    sweep();
    return 0;
}

int inspect(const fs::path& dir) {
    auto log = read_log(events_file(dir));
    if (!log) return fail(std::string(to_string(log.error().code)) + " at seq " +
                          std::to_string(log.error().seq) + ": " + log.error().detail);
    for (const auto& r : log->records) {
        json j = json::parse(encode_record(r));
        std::cout << j.dump() << "\n";
    }
    std::cerr << log->records.size() << " records";
    if (log->torn_tail_dropped) std::cerr << ", torn tail ignored";
    std::cerr << "\n";
    return 0;
}

int verify(const fs::path& dir) {
    auto log = read_log(events_file(dir));
    if (!log) {
        std::cout << json{{"ok", false},
                          {"error", to_string(log.error().code)},
                          {"seq", log.error().seq},
                          {"detail", log.error().detail}}
                         .dump()
                  << "\n";
        return 1;
    }
    json violations = json::array();
    for (const auto& v : plausibility_check(log->records))
        violations.push_back(json{{"kind", to_string(v.kind)}, {"seq", v.seq}, {"detail", v.detail}});
    auto replayed = replay(log->records);
    json out{{"records", log->records.size()},
             {"torn_tail_dropped", log->torn_tail_dropped},
             {"violations", violations}};
    if (!replayed) {
        out["replay"] = json{{"error", to_string(replayed.error().code)},
                             {"seq", replayed.error().seq},
                             {"detail", replayed.error().detail}};
    } else {
        json digests = json::object();
        for (const auto& [id, s] : replayed.value()) digests[id] = state_digest(s);
        out["digests"] = digests;
    }
    const bool ok = violations.empty() && replayed.ok();
    out["ok"] = ok;
    std::cout << out.dump(2) << "\n";
    return ok ? 0 : 1;
}

int report(const std::string& auction_id, const std::string& data_dir_flag) {
    auto data_dir = resolve_data_dir(data_dir_flag);
    if (!data_dir) return fail("no data directory (use --data-dir or OPENFLOOR_DATA_DIR)");
    auto recovered = recover(*data_dir);
    if (!recovered) return fail("recovery failed: " + recovered.error().detail);
    auto it = recovered->states.find(auction_id);
    if (it == recovered->states.end()) return fail("unknown auction " + auction_id);
    auto written = write_reports(*data_dir, it->second);
    if (!written) return fail(written.error().detail);
    for (const auto& p : written.value()) std::cout << p.string() << "\n";
    return 0;
}

int simulate(const fs::path& file, std::optional<std::uint64_t> seed, const std::string& trace_file) {
    json j;
    try {
        j = read_json_file(file);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    auto scenario = sim::scenario_from_json(j);
    if (!scenario) return fail("ScenarioInvalid: " + scenario.error().detail);
    if (seed) scenario->seed = *seed;
    auto trace = sim::run(*scenario);
    if (!trace) return fail("ScenarioInvalid: " + trace.error().detail);

    if (!trace_file.empty()) {
        std::ofstream out(trace_file, std::ios::binary | std::ios::trunc);
        out << trace->to_jsonl();
        if (!out) return fail("cannot write " + trace_file);
    }

    auto close = sim::check_close_agreement(*trace);
    auto lost = sim::check_no_lost_bid(*trace);
    auto cap = sim::check_hard_cap(*trace);
    json auctions = json::array();
    for (const auto& a : trace->auctions)
        auctions.push_back(json{{"auction_id", a.auction_id},
                                {"phase", to_string(a.phase)},
                                {"close_time", a.close_time},
                                {"digest", a.digest}});
    json summary{{"seed", scenario->seed},
                 {"records", trace->records.size()},
                 {"bids", trace->bids.size()},
                 {"auctions", auctions},
                 {"max_close_lag_ms", close.max_lag_ms},
                 {"close_violations", close.violations.size()},
                 {"never_observed_close", close.never_observed},
                 {"disconnected", close.disconnected},
                 {"lost_bids", lost.size()},
                 {"hard_cap_violations", cap}};
    std::cout << summary.dump(2) << "\n";
    return close.violations.empty() && close.never_observed.empty() && lost.empty() && cap.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"openfloor realtime auction server"};
    app.require_subcommand(1);

    std::string listen = "127.0.0.1:8080", data_dir, config;
    double capacity = 500.0;
    bool sim_clock = false;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP server");
    serve_cmd->add_option("--listen", listen, "host:port");
    serve_cmd->add_option("--data-dir", data_dir, "Log, snapshot and report directory");
    serve_cmd->add_option("--config", config, "Directory of companies and persons (JSON)");
    serve_cmd->add_option("--capacity-rps", capacity, "Request capacity used for poll pacing");
    serve_cmd->add_flag("--sim-clock", sim_clock, "Use a manual clock driven by POST /api/sim/clock");

    std::string dir;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print decoded log records");
    inspect_cmd->add_option("data_dir", dir)->required();
    auto* verify_cmd = app.add_subcommand("verify", "Run plausibility checks and replay");
    verify_cmd->add_option("data_dir", dir)->required();

    std::string auction_id;
    auto* report_cmd = app.add_subcommand("report", "Regenerate reports for an auction");
    report_cmd->add_option("auction_id", auction_id)->required();
    report_cmd->add_option("--data-dir", data_dir, "Data directory");

    std::string scenario_file, trace_file;
    std::optional<std::uint64_t> seed;
    auto* sim_cmd = app.add_subcommand("sim", "Run a simulation scenario");
    sim_cmd->add_option("scenario", scenario_file)->required();
    sim_cmd->add_option("--seed", seed, "Override the scenario seed");
    sim_cmd->add_option("--trace", trace_file, "Write the trace as JSON lines");

    std::string password;
    int iterations = kDefaultPbkdf2Iterations;
    auto* hash_cmd = app.add_subcommand("hash-password", "Print a credential hash for --config");
    hash_cmd->add_option("password", password)->required();
    hash_cmd->add_option("--iterations", iterations)->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(listen, data_dir, config, capacity, sim_clock);
        if (*inspect_cmd) return inspect(dir);
        if (*verify_cmd) return verify(dir);
        if (*report_cmd) return report(auction_id, data_dir);
        if (*sim_cmd) return simulate(scenario_file, seed, trace_file);
        if (*hash_cmd) {
            std::cout << hash_password(password, iterations) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    return 0;
}
