// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "openfloor/engine.hpp"
#include "openfloor/event_store.hpp"
#include "openfloor/service.hpp"
#include "openfloor/sim.hpp"
#include "openfloor/timesync.hpp"
#include "openfloor/traffic.hpp"
#include "openfloor/views.hpp"

using namespace openfloor;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
    std::vector<std::string> failures;

    void fail(std::string what) {
        pass = false;
        if (failures.size() < 5) failures.push_back(std::move(what));
    }
};

// ---------------------------------------------------------------------------
// Engine driver without a test framework.

PersonRef person(const std::string& id) { return PersonRef{id, id + "-co", "Name of " + id}; }

// Distinctive ids so a substring search cannot hit ordinary words.
const PersonId kOriginator = "originator-q7";
const PersonId kAuctioneer = "auctioneer-k3";

AuctionConfig base_config(Format format, TimeMs start, DurationMs main, DurationMs cap, std::int64_t tick) {
    AuctionConfig c;
    c.auction_id = "acc-1";
    c.title = "Acceptance auction";
    c.format = format;
    c.currency = "EUR";
    c.start_time = start;
    c.main_duration_ms = main;
    c.hard_cap_ms = cap;
    c.tick_size = tick;
    c.slots.push_back(Slot{"s1", "Slot s1", Quantity{1, "pcs"}, std::nullopt});
    return c;
}

struct Driver {
    AuctionState state;
    bool ok = true;
    std::string error;

    explicit Driver(const AuctionConfig& c) {
        auto r = create_auction(cmd::CreateAuction{c, person(kOriginator), person(kAuctioneer)}, c.start_time - 1000);
        if (!r) {
            ok = false;
            error = std::string(to_string(r.error()));
            return;
        }
        state = std::move(r).value().state;
    }

    std::optional<Effects> run(CommandBody body, TimeMs at) {
        const std::string name(command_name(body));
        auto r = apply_in_place(state, Command{state.config.auction_id, at, std::move(body)});
        if (!r) {
            if (ok) error = std::string(to_string(r.error())) + " (" + name + " at " + std::to_string(at) + ")";
            ok = false;
            return std::nullopt;
        }
        return std::move(r).value();
    }

    void bidder(const std::string& id, std::optional<SlotId> slot = std::nullopt) {
        const TimeMs t = state.last_time;
        run(cmd::Invite{person(id), Role::Bidder, slot, {}, {}}, t);
        run(cmd::RecordContract{id}, t);
        run(cmd::Admit{id}, t);
    }

    void observer(const std::string& id) { run(cmd::Invite{person(id), Role::Observer, {}, {}, {}}, state.last_time); }

    std::optional<BidOutcome> bid(const std::string& who, const SlotId& slot, std::int64_t amount, TimeMs at,
                                  std::int64_t cursor = 0) {
        auto fx = run(cmd::PlaceBid{who, slot, amount, cursor}, at);
        if (!fx) return std::nullopt;
        return fx->outcome;
    }
};

// ---------------------------------------------------------------------------
// Extension semantics and hard cap share the same 1000 scripts.

struct ScriptStats {
    int scripts = 0;
    std::int64_t bids = 0;
    std::int64_t extensions = 0;
    int mismatches = 0;
    int cap_violations = 0;
    std::vector<std::string> cap_details;
    std::vector<std::string> mismatch_details;
    double seconds = 0;
    bool example_ok = false;
    std::string example_detail;
};

const ScriptStats& bid_scripts() {
    static const ScriptStats stats = [] {
        ScriptStats out;
        const auto t0 = std::chrono::steady_clock::now();

        {
            // A bid 50 s before the end moves it to bid time + 180 s.
            auto c = base_config(Format::Reverse, 10000, 3600000, 7200000, 100);
            Driver d(c);
            d.bidder("early");
            d.run(cmd::Tick{}, c.start_time);
            const TimeMs end = d.state.current_end;
            const TimeMs at = end - 50000;
            auto o = d.bid("early", "s1", 100000, at);
            const bool ok = d.ok && o && is_accepted(*o) && std::get<Accepted>(*o).new_end == at + 180000 &&
                            d.state.current_end == at + 180000;
            out.example_ok = ok;
            out.example_detail = "bid at end-50s -> end " + std::to_string(d.state.current_end - at) + " ms after bid";
        }

        std::mt19937_64 rng(20240601);
        for (int script = 0; script < 1000; ++script) {
            ++out.scripts;
            const DurationMs main = 60000 + static_cast<DurationMs>(rng() % 540001);
            const DurationMs cap = main + static_cast<DurationMs>(rng() % (3 * main + 1));
            const TimeMs start = 100000;
            auto c = base_config(Format::Reverse, start, main, cap, 100);
            Driver d(c);
            for (int b = 0; b < 3; ++b) d.bidder("bidder-" + std::to_string(b));
            d.run(cmd::Tick{}, start);

            // Bid times drift forward in random steps; most scripts run into
            // the soft-close window and a good share reach the hard cap.
            std::vector<TimeMs> times;
            const int n = 1 + static_cast<int>(rng() % 60);
            TimeMs t = start + static_cast<TimeMs>(rng() % static_cast<std::uint64_t>(main));
            const DurationMs step_cap = 1 + static_cast<DurationMs>(rng() % 60000);
            for (int i = 0; i < n; ++i) {
                times.push_back(t);
                t += static_cast<DurationMs>(rng() % static_cast<std::uint64_t>(step_cap));
            }

            const auto fold = oracle::fold_extensions(start, main, cap, c.extension_schedule, c.closing_grace_ms, times);
            bool same = d.ok;
            std::int64_t amount = 10000000;
            for (std::size_t i = 0; i < times.size() && same; ++i) {
                ++out.bids;
                amount -= 100;
                auto o = d.bid("bidder-" + std::to_string(i % 3), "s1", amount, times[i]);
                if (!o) {
                    same = false;
                    break;
                }
                const bool acc = is_accepted(*o);
                if (acc && times[i] >= start + cap) {
                    ++out.cap_violations;
                    if (out.cap_details.size() < 5)
                        out.cap_details.push_back("script " + std::to_string(script) + " accepted bid at " +
                                                  std::to_string(times[i]));
                }
                if (acc != fold.accepted[i]) same = false;
                if (acc && d.state.current_end != *fold.end_after[i]) same = false;
                if (d.state.current_end > d.state.hard_end) ++out.cap_violations;
            }
            if (same) {
                d.run(cmd::Tick{}, std::max(d.state.last_time, d.state.hard_end));
                same = d.ok && d.state.phase == Phase::Closed && d.state.current_end == fold.final_end &&
                       d.state.extension_count == fold.extensions;
                if (d.state.current_end > start + cap) {
                    ++out.cap_violations;
                    if (out.cap_details.size() < 5)
                        out.cap_details.push_back("script " + std::to_string(script) + " ended past the cap");
                }
            }
            out.extensions += d.state.extension_count;
            if (!same) {
                ++out.mismatches;
                if (out.mismatch_details.size() < 5)
                    out.mismatch_details.push_back("script " + std::to_string(script) + (d.ok ? "" : ": " + d.error));
            }
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }();
    return stats;
}

Verdict extension_semantics() {
    Verdict v;
    const auto& s = bid_scripts();
    if (!s.example_ok) v.fail("example: " + s.example_detail);
    for (const auto& m : s.mismatch_details) v.fail("oracle mismatch in " + m);
    if (s.mismatches > 0) v.fail(std::to_string(s.mismatches) + " scripts disagree with the oracle");
    if (s.seconds >= 5.0) v.fail("took " + std::to_string(s.seconds) + " s");
    std::ostringstream d;
    d << s.example_detail << "; " << s.scripts << " scripts, " << s.bids << " bids, " << s.extensions
      << " extensions, " << s.mismatches << " mismatches, " << s.seconds << " s";
    v.detail = d.str();
    return v;
}

Verdict hard_cap() {
    Verdict v;
    const auto& s = bid_scripts();
    for (const auto& m : s.cap_details) v.fail(m);
    if (s.cap_violations > 0) v.fail(std::to_string(s.cap_violations) + " violations");
    v.detail = std::to_string(s.scripts) + " scripts, " + std::to_string(s.cap_violations) + " violations";
    return v;
}

// ---------------------------------------------------------------------------

Verdict two_phase_close() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    DurationMs worst_lag = 0, worst_poll = 0, worst_delay = 0;
    std::int64_t lags = 0, bids = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const int clients = 5 + static_cast<int>((seed * 7) % 46);
        auto trace = sim::run(sim::random_close_scenario(seed, clients, 400, 3000));
        if (!trace) {
            v.fail("seed " + std::to_string(seed) + ": " + trace.error().detail);
            continue;
        }
        const auto agreement = sim::check_close_agreement(*trace);
        for (const auto& l : agreement.violations)
            v.fail("seed " + std::to_string(seed) + " " + l.agent + " lag " + std::to_string(l.lag_ms) +
                   " > bound " + std::to_string(l.bound_ms));
        for (const auto& p : agreement.never_observed) v.fail("seed " + std::to_string(seed) + " " + p + " never saw Closed");
        for (const auto& l : agreement.lags)
            if (l.lag_ms > 3900)
                v.fail("seed " + std::to_string(seed) + " " + l.agent + " lag " + std::to_string(l.lag_ms) + " > 3900");
        for (const auto& b : sim::check_no_lost_bid(*trace))
            v.fail("seed " + std::to_string(seed) + " lost bid from " + b.agent + " at " + std::to_string(b.arrived));
        for (const auto& h : sim::check_hard_cap(*trace)) v.fail("seed " + std::to_string(seed) + " " + h);
        worst_lag = std::max(worst_lag, agreement.max_lag_ms);
        lags += static_cast<std::int64_t>(agreement.lags.size());
        bids += static_cast<std::int64_t>(trace->bids.size());
        for (const auto& a : trace->agents) {
            worst_poll = std::max(worst_poll, a.max_poll_ms);
            worst_delay = std::max({worst_delay, a.max_up_delay, a.max_down_delay});
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (worst_poll > 1000) v.fail("poll interval " + std::to_string(worst_poll) + " ms exceeded 1 s");
    if (worst_delay > 400) v.fail("one-way delay " + std::to_string(worst_delay) + " ms exceeded 400 ms");
    if (secs >= 30.0) v.fail("took " + std::to_string(secs) + " s");
    std::ostringstream d;
    d << "100 runs, " << lags << " client closes, " << bids << " bids, max lag " << worst_lag << " ms, max poll "
      << worst_poll << " ms, max delay " << worst_delay << " ms, " << secs << " s";
    v.detail = d.str();
    return v;
}

// ---------------------------------------------------------------------------
// Privacy: random states viewed by every participant.

constexpr std::int64_t kAmountFloor = 10'000'000'000;  // far above any time or seq value

void walk(const json& j, const std::function<void(const std::string& key, const json& value)>& f,
          const std::string& key = "") {
    f(key, j);
    if (j.is_object()) {
        for (const auto& [k, val] : j.items()) walk(val, f, k);
    } else if (j.is_array()) {
        for (const auto& val : j) walk(val, f, key);
    }
}

Verdict privacy() {
    Verdict v;
    std::mt19937_64 rng(777);
    std::int64_t pairs = 0, states = 0;
    auto tag = [&] {
        std::ostringstream s;
        s << std::hex << rng();
        return s.str();
    };
    while (pairs < 12000) {
        ++states;
        const bool reverse = rng() % 4 != 0;
        auto c = base_config(reverse ? Format::Reverse : Format::English, 100000, 600000, 1200000, 1);
        const int slots = 1 + static_cast<int>(rng() % 4);
        for (int s = 1; s < slots; ++s) c.slots.push_back(Slot{"s" + std::to_string(s + 1), "Slot", Quantity{1, "pcs"}, std::nullopt});
        if (reverse && rng() % 3) c.historic_value = Money{kAmountFloor + 500000 + static_cast<std::int64_t>(rng() % 500000), "EUR"};
        if (reverse && rng() % 2) c.target_value = Money{kAmountFloor + static_cast<std::int64_t>(rng() % 500000), "EUR"};
        if (rng() % 3 == 0) c.slots[0].start_price = Money{kAmountFloor + 2000000, "EUR"};

        Driver d(c);
        std::vector<std::string> bidders, observers;
        const int nb = 2 + static_cast<int>(rng() % 5);
        for (int i = 0; i < nb; ++i) {
            bidders.push_back("bidder-" + tag());
            std::optional<SlotId> restrict;
            if (rng() % 4 == 0) restrict = "s" + std::to_string(1 + rng() % slots);
            d.bidder(bidders.back(), restrict);
        }
        const int no = 1 + static_cast<int>(rng() % 2);
        for (int i = 0; i < no; ++i) {
            observers.push_back("observer-" + tag());
            d.observer(observers.back());
        }
        d.run(cmd::Tick{}, c.start_time);
        std::set<std::int64_t> amounts;
        std::map<std::pair<std::string, SlotId>, std::int64_t> last;
        const int nbids = static_cast<int>(rng() % 25);
        TimeMs now = c.start_time;
        for (int i = 0; i < nbids; ++i) {
            now += static_cast<TimeMs>(rng() % 20000);
            const auto& who = bidders[rng() % bidders.size()];
            const SlotId slot = "s" + std::to_string(1 + rng() % slots);
            auto it = last.find({who, slot});
            std::int64_t amount;
            if (it == last.end()) amount = kAmountFloor + 1000000 + static_cast<std::int64_t>(rng() % 1000000);
            else amount = it->second + (reverse ? -1 : 1) * static_cast<std::int64_t>(1 + rng() % 5000);
            auto o = d.bid(who, slot, amount, now);
            if (o && is_accepted(*o)) last[{who, slot}] = amount;
            amounts.insert(amount);
        }
        if (rng() % 4 == 0 && d.state.phase != Phase::Closed) d.run(cmd::Ban{bidders[rng() % bidders.size()]}, now);
        if (rng() % 3 == 0) d.run(cmd::Tick{}, d.state.hard_end);
        if (!d.ok) {
            v.fail("state setup failed: " + d.error);
            break;
        }
        if (c.historic_value) amounts.insert(c.historic_value->amount);
        if (c.target_value) amounts.insert(c.target_value->amount);
        if (c.slots[0].start_price) amounts.insert(c.slots[0].start_price->amount);

        std::vector<std::string> identities;  // every string tied to a specific person
        for (const auto& [id, p] : d.state.participants)
            identities.insert(identities.end(), {id, p.person.name, p.person.company_id});
        auto identities_of_others = [&](const PersonId& self) {
            const auto& me = d.state.participants.at(self).person;
            std::vector<std::string> out;
            for (const auto& s : identities)
                if (s != me.person_id && s != me.name && s != me.company_id) out.push_back(s);
            return out;
        };

        const TimeMs view_time = d.state.last_time;
        auto rendered = [&](const PersonId& who, Role role) {
            json out = json::array();
            auto view = render_view(d.state, who, role, view_time);
            if (!view) return out;
            out.push_back(json(view.value()));
            MessageRedactor redact(d.state, who, role, view_time);
            for (const auto& m : d.state.messages) out.push_back(redact(m));
            return out;
        };
        auto leaks = [](const std::string& dump, const std::vector<std::string>& needles) -> std::optional<std::string> {
            for (const auto& n : needles)
                if (dump.find(n) != std::string::npos) return n;
            return std::nullopt;
        };

        for (const auto& b : bidders) {
            ++pairs;
            const auto dump = rendered(b, Role::Bidder).dump();
            if (auto n = leaks(dump, identities_of_others(b))) v.fail("bidder view leaks identity " + *n);
        }
        for (const auto& o : observers) {
            ++pairs;
            const json j = rendered(o, Role::Observer);
            walk(j, [&](const std::string& key, const json& value) {
                if (key == "amount" || key == "currency") v.fail("observer view has key " + key);
                if (value.is_number() && std::abs(value.get<double>()) >= 1e9)
                    v.fail("observer view has absolute number " + value.dump());
                if (value.is_string()) {
                    const auto s = value.get<std::string>();
                    for (auto a : amounts)
                        if (s.find(std::to_string(a)) != std::string::npos) v.fail("observer view has amount " + s);
                }
            });
        }
        {
            ++pairs;
            const auto dump = rendered(kOriginator, Role::Originator).dump();
            if (auto n = leaks(dump, identities_of_others(kOriginator))) v.fail("originator view leaks identity " + *n);
        }
        if (!v.pass) break;
    }
    v.detail = std::to_string(pairs) + " (state, viewer) pairs over " + std::to_string(states) + " states";
    return v;
}

// ---------------------------------------------------------------------------

Verdict time_sync() {
    using namespace timesync;
    Verdict v;
    std::mt19937_64 rng(4242);
    int symmetric_errors = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::int64_t truth = static_cast<std::int64_t>(rng() % 7200001) - 3600000;
        const std::int64_t delay = static_cast<std::int64_t>(rng() % 1001);
        std::vector<SyncSample> s;
        TimeMs local = static_cast<TimeMs>(rng() % 1000000000);
        for (int k = 0; k < 8; ++k) {
            s.push_back(SyncSample{local, local + delay + truth, local + 2 * delay});
            local += 1000;
        }
        auto e = estimate(s);
        if (!e || e->offset_ms != truth) ++symmetric_errors;
    }
    if (symmetric_errors) v.fail(std::to_string(symmetric_errors) + " symmetric trials with nonzero error");
    std::ostringstream d;
    d << "symmetric 1000/1000 exact" << (symmetric_errors ? " (FAILED)" : "");
    for (std::int64_t j : {50, 200, 800}) {
        std::uniform_int_distribution<std::int64_t> delay(0, j);
        int within = 0;
        std::int64_t worst = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const std::int64_t truth = static_cast<std::int64_t>(rng() % 7200001) - 3600000;
            std::vector<SyncSample> s;
            TimeMs local = static_cast<TimeMs>(rng() % 1000000000);
            for (int k = 0; k < 8; ++k) {
                const auto up = delay(rng), down = delay(rng);
                s.push_back(SyncSample{local, local + up + truth, local + up + down});
                local += 1000;
            }
            auto e = estimate(s);
            if (!e) continue;
            const auto err = std::abs(e->offset_ms - truth);
            worst = std::max(worst, err);
            if (2 * err <= j) ++within;
        }
        if (within < 990) v.fail("j=" + std::to_string(j) + ": only " + std::to_string(within) + "/1000 within j/2");
        d << "; j=" << j << " " << within << "/1000 within j/2 (max error " << worst << ")";
    }
    v.detail = d.str();
    return v;
}

// ---------------------------------------------------------------------------

Verdict poll_pacing() {
    Verdict v;
    std::vector<std::int64_t> remaining{std::numeric_limits<std::int64_t>::min(), -3600000, -1, 0, 1};
    for (std::int64_t r = 0; r <= 14400000; r += 250) remaining.push_back(r);
    remaining.push_back(std::numeric_limits<std::int64_t>::max());
    std::vector<double> loads{-1.0, 0.0, std::numeric_limits<double>::quiet_NaN(),
                              std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 1e9};
    for (int i = 1; i <= 200; ++i) loads.push_back(i * 0.05);
    std::int64_t cells = 0;
    for (auto r : remaining) {
        for (double l : loads) {
            ++cells;
            const auto p = poll_interval(r, l);
            if (p < kMinPollMs || p > kMaxPollMs)
                v.fail("poll_interval(" + std::to_string(r) + ", " + std::to_string(l) + ") = " + std::to_string(p));
        }
    }
    const auto base = poll_interval(3600000, 0.0);
    if (base != 1000) v.fail("base case " + std::to_string(base) + " ms");
    v.detail = std::to_string(cells) + " grid cells in [250, 5000]; base case " + std::to_string(base) + " ms";
    return v;
}

// ---------------------------------------------------------------------------

Verdict winners_and_binding() {
    Verdict v;
    std::mt19937_64 rng(99);
    int ties = 0, binding_count = 0, slots_checked = 0;
    for (int round = 0; round < 1000; ++round) {
        const bool reverse = rng() % 3 != 0;
        auto c = base_config(reverse ? Format::Reverse : Format::English, 100000, 60000, 120000, 1);
        const int slots = 1 + static_cast<int>(rng() % 4);
        for (int s = 1; s < slots; ++s) c.slots.push_back(Slot{"s" + std::to_string(s + 1), "Slot", Quantity{1, "pcs"}, std::nullopt});
        std::optional<std::int64_t> target;
        if (reverse && rng() % 4) {
            target = 10 + static_cast<std::int64_t>(rng() % (40 * slots));
            c.target_value = Money{*target, "EUR"};
            c.historic_value = Money{*target + 50, "EUR"};
        }
        Driver d(c);
        for (int b = 0; b < 5; ++b) d.bidder("b" + std::to_string(b));
        d.run(cmd::Tick{}, c.start_time);
        const int bids = static_cast<int>(rng() % 21);
        for (int i = 0; i < bids; ++i) {
            const auto who = "b" + std::to_string(rng() % 5);
            const auto slot = "s" + std::to_string(1 + rng() % slots);
            d.bid(who, slot, 1 + static_cast<std::int64_t>(rng() % 40), c.start_time + 100 + i);
        }
        if (rng() % 4 == 0) d.run(cmd::Ban{"b" + std::to_string(rng() % 5)}, d.state.last_time);
        d.run(cmd::Tick{}, d.state.hard_end);
        if (!d.ok) {
            v.fail("round " + std::to_string(round) + ": " + d.error);
            continue;
        }
        auto winners = determine_winners(d.state);
        if (!winners) {
            v.fail("round " + std::to_string(round) + ": determine_winners failed");
            continue;
        }
        std::vector<std::optional<std::int64_t>> winning;
        for (const auto& sr : winners.value()) {
            ++slots_checked;
            std::vector<oracle::PlainBid> plain;
            std::map<std::int64_t, int> amount_counts;
            for (const auto& b : d.state.bids) {
                if (b.slot_id != sr.slot_id) continue;
                plain.push_back({b.amount.amount, b.seq, b.voided});
                if (!b.voided) ++amount_counts[b.amount.amount];
            }
            const auto expect = oracle::brute_force_winner_seq(reverse, plain);
            if (expect.has_value() != sr.winner.has_value() || (expect && *expect != sr.winner->seq))
                v.fail("round " + std::to_string(round) + " slot " + sr.slot_id + " winner differs");
            if (sr.winner && amount_counts[sr.winner->amount.amount] > 1) ++ties;
            winning.push_back(sr.winner ? std::optional(sr.winner->amount.amount) : std::nullopt);
        }
        auto b = binding_result(d.state, winners.value());
        const bool expect_binding = oracle::binding(reverse, target, winning);
        if (!b || (*b == Binding::Binding) != expect_binding)
            v.fail("round " + std::to_string(round) + " binding differs");
        if (expect_binding) ++binding_count;
    }
    if (ties == 0) v.fail("no tied winning amounts were exercised");
    if (binding_count == 0) v.fail("no Binding outcome was exercised");
    v.detail = "1000 auctions, " + std::to_string(slots_checked) + " slots, " + std::to_string(ties) +
               " tied winners, " + std::to_string(binding_count) + " binding";
    return v;
}

// ---------------------------------------------------------------------------

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("openfloor-acc-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

void write_file(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

std::map<AuctionId, std::string> digests(const StateMap& states) {
    std::map<AuctionId, std::string> out;
    for (const auto& [id, s] : states) out[id] = state_digest(s);
    return out;
}

Verdict crash_recovery() {
    Verdict v;
    std::mt19937_64 rng(31337);
    int torn = 0, kills = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto where = "scenario " + std::to_string(seed);
        auto trace = sim::run(sim::random_close_scenario(1000 + seed, 5 + static_cast<int>(seed % 16), 400));
        if (!trace) {
            v.fail(where + ": " + trace.error().detail);
            continue;
        }
        const auto& bytes = trace->log_bytes;
        std::vector<std::size_t> line_ends;  // offset one past each newline
        for (std::size_t i = 0; i < bytes.size(); ++i)
            if (bytes[i] == '\n') line_ends.push_back(i + 1);

        auto live = digests(trace->final_states);
        std::map<AuctionId, std::string> from_trace;
        for (const auto& a : trace->auctions) from_trace[a.auction_id] = a.digest;
        if (live != from_trace) v.fail(where + ": trace digests disagree with final states");

        // Full log followed by a torn record.
        {
            TempDir dir;
            const std::size_t start = line_ends.size() > 1 ? line_ends[line_ends.size() - 2] : 0;
            const std::string last_line = bytes.substr(start, line_ends.back() - start);
            const std::size_t cut = 1 + rng() % (last_line.size() - 2);
            write_file(events_file(dir.path), bytes + last_line.substr(0, cut));
            auto rec = recover(dir.path, false);
            if (!rec) {
                v.fail(where + ": recover failed: " + rec.error().detail);
                continue;
            }
            ++torn;
            if (!rec->torn_tail_dropped) v.fail(where + ": torn tail not reported");
            if (digests(rec->states) != live) v.fail(where + ": replayed digest differs from live");
            auto log = read_log(events_file(dir.path));
            if (!log || !plausibility_check(log->records).empty()) v.fail(where + ": plausibility check not clean");
        }

        // Killed mid-run: a prefix of whole batches plus part of the next one.
        {
            const auto& records = trace->records;
            std::vector<std::size_t> boundaries;  // record index of each command after the first
            for (std::size_t i = 1; i < records.size(); ++i)
                if (records[i].is_command()) boundaries.push_back(i);
            if (boundaries.empty()) continue;
            const std::size_t keep = boundaries[rng() % boundaries.size()];
            std::size_t next_end = keep + 1;  // end of the batch that gets torn
            while (next_end < records.size() && !records[next_end].is_command()) ++next_end;
            std::string prefix = bytes.substr(0, line_ends[keep - 1]);
            std::string tail;
            if (records[keep].emits > 0 && rng() % 2) {
                // Command written, its messages lost.
                tail = bytes.substr(line_ends[keep - 1], line_ends[keep] - line_ends[keep - 1]);
            } else {
                const std::size_t from = line_ends[keep - 1];
                const std::size_t len = line_ends[next_end - 1] - from;
                tail = bytes.substr(from, 1 + rng() % (len - 1));
            }
            TempDir dir;
            write_file(events_file(dir.path), prefix + tail);
            auto rec = recover(dir.path, false);
            auto expect = replay(std::span(records).first(keep));
            ++kills;
            if (!rec || !expect) {
                v.fail(where + ": kill recovery failed");
                continue;
            }
            if (!rec->torn_tail_dropped) v.fail(where + ": torn tail after kill not reported");
            if (digests(rec->states) != digests(expect.value())) v.fail(where + ": kill replay digest differs");
            if (rec->last_seq != records[keep - 1].global_seq) v.fail(where + ": wrong last seq after kill");
            auto reopened = EventStore::open(dir.path);
            if (!reopened || reopened.value()->last_seq() != records[keep - 1].global_seq)
                v.fail(where + ": reopen did not resume after the last whole batch");
            auto log = read_log(events_file(dir.path));
            if (!log || log->torn_tail_dropped || !plausibility_check(log->records).empty())
                v.fail(where + ": log after reopen not clean");
        }
    }
    v.detail = std::to_string(torn) + " full logs with torn tail, " + std::to_string(kills) + " mid-run kills";
    return v;
}

// ---------------------------------------------------------------------------

Directory cursor_directory() {
    json j{{"companies", json::array()}, {"persons", json::array()}};
    std::vector<std::string> ids{"auct", "orig", "b1", "b2", "b3", "obs"};
    for (const auto& id : ids) {
        j["companies"].push_back(json{{"company_id", id + "-co"}, {"name", id + " company"}});
        j["persons"].push_back(
            json{{"person_id", id}, {"name", "Name of " + id}, {"company_id", id + "-co"}, {"password", "pw-" + id}});
    }
    return Directory::from_json(j, 1);
}

Verdict cursor_delivery() {
    Verdict v;
    const Directory directory = cursor_directory();
    std::int64_t delivered_total = 0, polls = 0;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        std::mt19937_64 rng(seed);
        ManualClock clock(1000000);
        Service service(directory, clock);
        std::map<std::string, std::string> tokens;
        for (const char* id : {"auct", "orig", "b1", "b2", "b3", "obs"}) tokens[id] = service.open_session(id);
        auto c = base_config(Format::Reverse, 1001000, 60000 + static_cast<DurationMs>(rng() % 120000), 0, 100);
        c.auction_id = "a-1";
        c.hard_cap_ms = 2 * c.main_duration_ms;
        if (rng() % 2) c.slots.push_back(Slot{"s2", "Slot s2", Quantity{1, "pcs"}, std::nullopt});
        if (!service.create_auction(tokens["orig"], c, PersonId{"auct"})) {
            v.fail("seed " + std::to_string(seed) + ": create failed");
            continue;
        }
        for (const char* b : {"b1", "b2", "b3"}) {
            std::optional<SlotId> slot;
            if (c.slots.size() > 1 && rng() % 2) slot = "s2";
            service.invite(tokens["orig"], "a-1", b, Role::Bidder, slot);
            service.record_contract(tokens["orig"], "a-1", b);
            service.admit(tokens["auct"], "a-1", b);
        }
        service.invite(tokens["orig"], "a-1", "obs", Role::Observer, std::nullopt);

        const std::vector<std::string> clients{"auct", "orig", "b1", "b2", "b3", "obs"};
        std::map<std::string, std::int64_t> cursor;
        std::map<std::string, std::vector<std::int64_t>> got;
        std::map<std::string, std::int64_t> amount{{"b1", 5000000}, {"b2", 5000000}, {"b3", 5000000}};
        auto poll = [&](const std::string& who) {
            ++polls;
            auto r = service.poll(PollRequest{tokens[who], "a-1", cursor[who], clock.now()});
            if (!r) {
                v.fail("seed " + std::to_string(seed) + " " + who + " poll: " + r.error().error);
                return;
            }
            for (const auto& m : r->messages) got[who].push_back(m["seq"].get<std::int64_t>());
            cursor[who] = r->new_cursor;
        };

        // Random interleaving of polls, bids and clock steps until the close.
        for (int step = 0; step < 4000; ++step) {
            const auto state = service.snapshot("a-1");
            if (state->phase == Phase::Closed && rng() % 8 == 0) break;
            switch (rng() % 4) {
                case 0:
                    clock.advance(static_cast<DurationMs>(rng() % 3000));
                    if (rng() % 2) service.tick_all();
                    break;
                case 1: {
                    const auto& who = clients[2 + rng() % 3];
                    amount[who] -= 100 * static_cast<std::int64_t>(1 + rng() % 3);
                    const SlotId slot = c.slots.size() > 1 && rng() % 2 ? "s2" : "s1";
                    service.submit_bid(BidRequest{tokens[who], "a-1", slot, amount[who], cursor[who], clock.now()});
                    break;
                }
                default:
                    poll(clients[rng() % clients.size()]);
            }
        }
        clock.advance(c.hard_cap_ms + 10000);
        service.tick_all();
        for (const auto& who : clients) poll(who);

        const std::int64_t n = service.snapshot("a-1")->latest_seq();
        std::vector<std::int64_t> expect(static_cast<std::size_t>(n));
        std::iota(expect.begin(), expect.end(), 1);
        for (const auto& who : clients) {
            if (got[who] != expect)
                v.fail("seed " + std::to_string(seed) + " " + who + " got " + std::to_string(got[who].size()) +
                       " messages, expected 1.." + std::to_string(n));
            delivered_total += static_cast<std::int64_t>(got[who].size());
        }
        if (!v.pass && v.failures.size() >= 5) break;
    }
    v.detail = "1000 schedules, " + std::to_string(polls) + " polls, " + std::to_string(delivered_total) +
               " messages delivered";
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"extension semantics", extension_semantics},
        {"hard cap", hard_cap},
        {"two-phase close agreement", two_phase_close},
        {"privacy redaction", privacy},
        {"time sync", time_sync},
        {"poll pacing", poll_pacing},
        {"winner/binding oracle", winners_and_binding},
        {"crash recovery", crash_recovery},
        {"cursor delivery", cursor_delivery},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.fail(std::string("exception: ") + e.what());
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
        if (!v.pass) ++failed;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << " [" << ms << " ms]\n";
        for (const auto& f : v.failures) std::cout << "     - " << f << "\n";
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed\n" : std::string("all criteria passed\n"));
    return failed ? 1 : 0;
}
