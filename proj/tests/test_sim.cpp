#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "openfloor/sim.hpp"

using namespace openfloor;
using namespace openfloor::sim;

namespace {

Scenario load(const std::string& name) {
    std::ifstream in(std::string(OPENFLOOR_TEST_DATA) + "/" + name);
    REQUIRE(in);
    auto s = scenario_from_json(json::parse(in));
    REQUIRE_MESSAGE(s.ok(), (s.ok() ? "" : s.error().detail));
    return std::move(s).value();
}

// One reverse auction from t=1000 with a 20 s main phase.
Scenario single(std::vector<AgentSpec> agents) {
    Scenario s;
    s.seed = 1;
    auto c = fx::config(Format::Reverse, 1000, 20000, 100);
    c.auction_id = "sim-1";
    s.auctions.push_back(c);
    for (auto& a : agents) a.auction_id = "sim-1";
    s.agents = std::move(agents);
    return s;
}

AgentSpec agent(const std::string& id, Strategy strategy = {}) {
    AgentSpec a;
    a.person_id = id;
    a.company_id = id + "-co";
    a.strategy = std::move(strategy);
    return a;
}

}  // namespace

TEST_CASE("zero-delay scripted bid arrives when sent") {
    Strategy st;
    st.kind = StrategyKind::Scripted;
    st.bids.push_back({5000, "s1", 7000});
    auto trace = run(single({agent("solo", st)}));
    REQUIRE(trace.ok());
    REQUIRE(trace->bids.size() == 1);
    const auto& b = trace->bids[0];
    CHECK(b.sent == 5000);
    CHECK(b.arrived == b.sent);
    REQUIRE(b.outcome);
    CHECK(is_accepted(*b.outcome));
}

TEST_CASE("single zero-delay client sees the close within one poll") {
    auto trace = run(single({agent("solo")}));
    REQUIRE(trace.ok());
    auto agreement = check_close_agreement(*trace);
    REQUIRE(agreement.lags.size() == 1);
    CHECK(agreement.lags[0].lag_ms <= trace->agents[0].max_poll_ms);
    CHECK(agreement.violations.empty());
    CHECK(agreement.never_observed.empty());
}

TEST_CASE("undercutting cascade matches the extension fold") {
    auto s = load("two_undercutters.json");
    auto trace = run(s);
    REQUIRE(trace.ok());
    const auto& cfg = s.auctions[0];
    std::vector<TimeMs> times;
    std::vector<std::optional<TimeMs>> reported;
    for (const auto& b : trace->bids) {
        if (!b.outcome || !is_accepted(*b.outcome)) continue;
        times.push_back(b.arrived);
        reported.push_back(std::get<Accepted>(*b.outcome).new_end);
    }
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return times[x] < times[y]; });
    std::vector<TimeMs> sorted;
    for (auto i : order) sorted.push_back(times[i]);
    REQUIRE(sorted.size() > 5);

    auto fold = oracle::fold_extensions(cfg.start_time, cfg.main_duration_ms, cfg.hard_cap_ms,
                                        cfg.extension_schedule, cfg.closing_grace_ms, sorted);
    for (bool ok : fold.accepted) CHECK(ok);
    const auto& final_state = trace->final_states.at(cfg.auction_id);
    CHECK(fold.extensions == final_state.extension_count);
    CHECK(fold.final_end == final_state.current_end);
    CHECK(fold.extensions > 1);
    CHECK(check_no_lost_bid(*trace).empty());
    CHECK(check_hard_cap(*trace).empty());
    CHECK(check_close_agreement(*trace).violations.empty());
}

TEST_CASE("same seed gives identical trace bytes") {
    auto s = load("two_undercutters.json");
    auto a = run(s);
    auto b = run(s);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a->to_jsonl() == b->to_jsonl());
    CHECK(a->log_bytes == b->log_bytes);

    auto r1 = run(random_close_scenario(42, 20, 400));
    auto r2 = run(random_close_scenario(42, 20, 400));
    CHECK(r1->to_jsonl() == r2->to_jsonl());
    auto r3 = run(random_close_scenario(43, 20, 400));
    CHECK(r1->to_jsonl() != r3->to_jsonl());
}

TEST_CASE("disconnected clients are reported separately") {
    auto gone = agent("gone");
    gone.disconnect_at = 5000;
    auto trace = run(single({agent("stays"), gone}));
    REQUIRE(trace.ok());
    auto agreement = check_close_agreement(*trace);
    CHECK(agreement.disconnected == std::vector<PersonId>{"gone"});
    REQUIRE(agreement.lags.size() == 1);
    CHECK(agreement.lags[0].agent == "stays");
    CHECK(agreement.never_observed.empty());
}

TEST_CASE("time sync inside the harness tracks the true offset") {
    auto s = load("two_undercutters.json");
    auto trace = run(s);
    REQUIRE(trace.ok());
    for (const auto& a : trace->agents) {
        REQUIRE(a.estimate);
        const auto jitter = std::max(a.max_up_delay, a.max_down_delay);
        CHECK(std::abs(a.estimate->offset_ms - a.true_offset_ms) <= jitter);
    }
}

TEST_CASE("scenario JSON round trip and validation") {
    auto s = load("two_undercutters.json");
    auto back = scenario_from_json(scenario_to_json(s));
    REQUIRE(back.ok());
    CHECK(scenario_to_json(back.value()).dump() == scenario_to_json(s).dump());

    auto bad = scenario_from_json(json{{"agents", json::array()}});
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.error().code == SimError::ScenarioInvalid);

    auto unknown_strategy = scenario_to_json(s);
    unknown_strategy["agents"][0]["strategy"]["type"] = "telepathic";
    CHECK_FALSE(scenario_from_json(unknown_strategy).ok());
}

TEST_CASE("random close scenarios keep every client in agreement") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto trace = run(random_close_scenario(seed, 15, 400));
        REQUIRE(trace.ok());
        auto agreement = check_close_agreement(*trace);
        CHECK(agreement.violations.empty());
        CHECK(agreement.never_observed.empty());
        CHECK(agreement.max_lag_ms <= 3900);
        CHECK(check_no_lost_bid(*trace).empty());
        CHECK(check_hard_cap(*trace).empty());
    }
}
