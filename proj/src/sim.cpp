#include "openfloor/sim.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "openfloor/clock.hpp"
#include "openfloor/service.hpp"

namespace openfloor::sim {

DurationMs LinkModel::draw(std::mt19937_64& rng) const {
    if (jitter_ms <= 0) return base_ms;
    return base_ms + std::uniform_int_distribution<DurationMs>(0, jitter_ms)(rng);
}

namespace {

constexpr std::string_view kOriginator = "originator";
constexpr std::string_view kAuctioneer = "auctioneer";

std::string_view to_string(StrategyKind k) {
    switch (k) {
    case StrategyKind::Passive: return "passive";
    case StrategyKind::Scripted: return "scripted";
    case StrategyKind::Undercut: return "undercut";
    case StrategyKind::Sniper: return "sniper";
    }
    return "passive";
}

std::optional<StrategyKind> parse_strategy(std::string_view s) {
    for (auto k : {StrategyKind::Passive, StrategyKind::Scripted, StrategyKind::Undercut,
                   StrategyKind::Sniper}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

LinkModel link_from_json(const json& j) {
    return LinkModel{j.value("base_ms", DurationMs{0}), j.value("jitter_ms", DurationMs{0})};
}

json link_to_json(const LinkModel& l) { return json{{"base_ms", l.base_ms}, {"jitter_ms", l.jitter_ms}}; }

// In-memory byte sink so a run produces a real log without touching disk.
class MemorySink final : public LogSink {
public:
    explicit MemorySink(std::string& out) : out_(out) {}
    Result<Ok, StoreError> write(std::string_view bytes) override {
        out_.append(bytes);
        return Ok{};
    }
    Result<Ok, StoreError> flush() override { return Ok{}; }

private:
    std::string& out_;
};

std::optional<Phase> phase_of(const json& view) {
    if (!view.is_object() || !view.contains("phase")) return std::nullopt;
    return parse_phase(view["phase"].get<std::string>());
}

struct Agent {
    AgentSpec spec;
    std::string token;
    std::int64_t cursor = 0;
    std::optional<Phase> last_phase;
    json last_view;
    timesync::OffsetEstimator estimator;
    std::size_t burst_left = 0;
    bool done = false;
    bool bid_pending = false;
    bool reaction_scheduled = false;
    bool snipe_scheduled = false;
    bool sniped = false;
    AgentResult result;

    TimeMs local(TimeMs true_time) const { return true_time + spec.clock_offset_ms; }
    bool may_bid() const {
        return !done && !bid_pending && spec.role == Role::Bidder &&
               (last_phase == Phase::Open || last_phase == Phase::Extension);
    }
};

class Runner {
public:
    explicit Runner(const Scenario& s)
        : scenario_(s),
          rng_(s.seed),
          clock_(s.clock_start),
          store_(std::make_unique<MemorySink>(log_bytes_), 0, 0, {},
                 StoreOptions{FlushPolicy::PerBatch, false, 0, std::nullopt}) {}

    Result<Trace, ScenarioProblem> run();

private:
    using Action = std::function<void(TimeMs)>;
    struct Event {
        TimeMs at;
        std::uint64_t order;
        Action action;
        bool operator>(const Event& o) const {
            return at != o.at ? at > o.at : order > o.order;
        }
    };

    void at(TimeMs t, Action a) { queue_.push(Event{t, next_order_++, std::move(a)}); }
    Result<Ok, ScenarioProblem> setup();
    void connect(std::size_t i, TimeMs t);
    void send_poll(std::size_t i, TimeMs t);
    void on_poll(std::size_t i, Observation obs, Rpc<PollResponse>& response, TimeMs t);
    void react(std::size_t i, TimeMs t);
    void submit(std::size_t i, const SlotId& slot, std::int64_t amount, TimeMs t);
    std::optional<std::int64_t> undercut_amount(const Agent& a) const;
    void plan_snipe(std::size_t i, TimeMs t);
    void tick(TimeMs t);
    bool finished() const;
    bool disconnected(Agent& a, TimeMs t);

    const Scenario& scenario_;
    std::mt19937_64 rng_;
    ManualClock clock_;
    std::string log_bytes_;
    EventStore store_;
    std::unique_ptr<Service> service_;
    std::vector<Agent> agents_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t next_order_ = 0;
    std::vector<Observation> observations_;
    std::vector<BidSubmission> bids_;
    TimeMs horizon_ = 0;
};

Result<Ok, ScenarioProblem> Runner::setup() {
    auto problem = [](std::string d) { return ScenarioProblem{SimError::ScenarioInvalid, std::move(d)}; };

    Directory dir;
    auto add_person = [&dir](const PersonId& id, const CompanyId& company) {
        dir.companies[company] = Company{company, company};
        dir.persons[id] = Person{id, id, company, {}};
    };
    add_person(std::string(kOriginator), "buyer-co");
    add_person(std::string(kAuctioneer), "host-co");
    for (const auto& a : scenario_.agents) add_person(a.person_id, a.company_id);
    service_ = std::make_unique<Service>(std::move(dir), clock_, &store_);

    const auto originator = service_->open_session(std::string(kOriginator));
    const auto auctioneer = service_->open_session(std::string(kAuctioneer));
    for (const auto& config : scenario_.auctions) {
        auto r = service_->create_auction(originator, config, std::string(kAuctioneer));
        if (!r) return problem("auction " + config.auction_id + ": " + r.error().error);
        horizon_ = std::max(horizon_, config.start_time + config.hard_cap_ms);
    }
    for (const auto& a : scenario_.agents) {
        auto fail = [&](const RpcError& e) { return problem("agent " + a.person_id + ": " + e.error); };
        if (auto r = service_->invite(auctioneer, a.auction_id, a.person_id, a.role, a.slot_id); !r)
            return fail(r.error());
        if (a.role != Role::Bidder) continue;
        if (auto r = service_->record_contract(auctioneer, a.auction_id, a.person_id); !r)
            return fail(r.error());
        if (auto r = service_->admit(auctioneer, a.auction_id, a.person_id); !r) return fail(r.error());
    }
    return Ok{};
}

bool Runner::disconnected(Agent& a, TimeMs t) {
    if (a.spec.disconnect_at && t >= *a.spec.disconnect_at) {
        a.result.disconnected = true;
        a.done = true;
    }
    return a.result.disconnected;
}

void Runner::connect(std::size_t i, TimeMs t) {
    auto& a = agents_[i];
    clock_.set(t);
    a.token = service_->open_session(a.spec.person_id);
    a.burst_left = scenario_.burst_size > 0 ? scenario_.burst_size - 1 : 0;
    if (a.spec.strategy.kind == StrategyKind::Scripted) {
        for (const auto& b : a.spec.strategy.bids) {
            const TimeMs when = std::max(t, b.at - a.spec.clock_offset_ms);
            at(when, [this, i, b](TimeMs now) {
                if (!disconnected(agents_[i], now) && !agents_[i].done)
                    submit(i, b.slot_id, b.amount, now);
            });
        }
    }
    send_poll(i, t);
}

void Runner::send_poll(std::size_t i, TimeMs t) {
    auto& a = agents_[i];
    if (a.done || disconnected(a, t)) return;
    Observation obs;
    obs.agent = a.spec.person_id;
    obs.sent = t;
    obs.cursor = a.cursor;
    obs.up_delay = a.spec.up.draw(rng_);
    PollRequest req{a.token, a.spec.auction_id, a.cursor, a.local(t)};
    at(t + obs.up_delay, [this, i, obs, req](TimeMs arrival) mutable {
        clock_.set(arrival);
        // Shared so queue copies of the event stay cheap.
        auto response = std::make_shared<Rpc<PollResponse>>(service_->poll(req));
        obs.down_delay = agents_[i].spec.down.draw(rng_);
        at(arrival + obs.down_delay, [this, i, obs, response](TimeMs t2) { on_poll(i, obs, *response, t2); });
    });
}

void Runner::on_poll(std::size_t i, Observation obs, Rpc<PollResponse>& response, TimeMs t) {
    auto& a = agents_[i];
    if (a.done || disconnected(a, t)) return;
    a.result.max_up_delay = std::max(a.result.max_up_delay, obs.up_delay);
    a.result.max_down_delay = std::max(a.result.max_down_delay, obs.down_delay);
    if (!response) {
        // Access revoked (e.g. banned); the client gives up.
        a.done = true;
        return;
    }
    auto& r = response.value();
    (void)a.estimator.add({a.local(obs.sent), r.server_time, a.local(t)});
    a.result.estimate = a.estimator.current();
    for (const auto& m : r.messages) a.result.delivered.push_back(m["seq"].get<std::int64_t>());
    a.cursor = r.new_cursor;
    a.last_view = std::move(r.view);
    a.last_phase = phase_of(a.last_view);
    a.result.max_poll_ms = std::max(a.result.max_poll_ms, r.next_poll_ms);

    obs.received = t;
    obs.server_time = r.server_time;
    obs.phase = a.last_phase.value_or(Phase::Scheduled);
    obs.new_cursor = r.new_cursor;
    obs.next_poll_ms = r.next_poll_ms;
    observations_.push_back(obs);

    if (a.last_phase && is_terminal(*a.last_phase)) {
        a.result.closed_observed_at = t;
        a.done = true;
        return;
    }
    if (a.burst_left > 0) {
        --a.burst_left;
        send_poll(i, t);
    } else {
        at(t + r.next_poll_ms, [this, i](TimeMs now) { send_poll(i, now); });
    }

    switch (a.spec.strategy.kind) {
    case StrategyKind::Undercut:
        if (a.may_bid() && !a.reaction_scheduled && undercut_amount(a)) {
            a.reaction_scheduled = true;
            at(t + a.spec.strategy.react_ms, [this, i](TimeMs now) { react(i, now); });
        }
        break;
    case StrategyKind::Sniper:
        if (!a.sniped && !a.snipe_scheduled && a.may_bid() && a.estimator.synced()) plan_snipe(i, t);
        break;
    default: break;
    }
}

std::optional<std::int64_t> Runner::undercut_amount(const Agent& a) const {
    const auto& st = a.spec.strategy;
    const auto* cfg = [&]() -> const AuctionConfig* {
        for (const auto& c : scenario_.auctions)
            if (c.auction_id == a.spec.auction_id) return &c;
        return nullptr;
    }();
    if (!cfg) return std::nullopt;
    const std::int64_t step = st.step > 0 ? st.step : cfg->tick_size;
    const bool reverse = cfg->format == Format::Reverse;

    const auto slots = a.last_view.find("slots");
    if (slots == a.last_view.end()) return std::nullopt;
    std::optional<std::int64_t> target;
    for (const auto& slot : *slots) {
        if (slot["slot_id"] != st.slot_id) continue;
        const auto& entries = slot["entries"];
        if (entries.empty()) {
            target = st.opening_amount;
        } else {
            const auto& best = entries.front();
            if (best.value("own", false)) return std::nullopt;
            const auto amount = best["value"]["amount"].get<std::int64_t>();
            target = reverse ? amount - step : amount + step;
        }
    }
    if (!target) return std::nullopt;
    if (reverse ? *target < st.limit : *target > st.limit) return std::nullopt;
    return target;
}

void Runner::react(std::size_t i, TimeMs t) {
    auto& a = agents_[i];
    a.reaction_scheduled = false;
    if (disconnected(a, t) || !a.may_bid()) return;
    if (auto amount = undercut_amount(a)) submit(i, a.spec.strategy.slot_id, *amount, t);
}

void Runner::plan_snipe(std::size_t i, TimeMs t) {
    auto& a = agents_[i];
    const auto est = a.estimator.current();
    if (!est || !a.last_view.contains("current_end")) return;
    const auto remaining = timesync::remaining_ms(a.last_view["current_end"].get<TimeMs>(), a.local(t), *est);
    const auto wait = std::max<DurationMs>(0, remaining - a.spec.strategy.lead_ms);
    a.snipe_scheduled = true;
    at(t + wait, [this, i](TimeMs now) {
        auto& a = agents_[i];
        a.snipe_scheduled = false;
        if (disconnected(a, now) || a.sniped || !a.may_bid()) return;
        const auto est = a.estimator.current();
        const auto remaining =
            timesync::remaining_ms(a.last_view["current_end"].get<TimeMs>(), a.local(now), *est);
        if (remaining > a.spec.strategy.lead_ms) return plan_snipe(i, now);
        a.sniped = true;
        submit(i, a.spec.strategy.slot_id, a.spec.strategy.amount, now);
    });
}

void Runner::submit(std::size_t i, const SlotId& slot, std::int64_t amount, TimeMs t) {
    auto& a = agents_[i];
    a.bid_pending = true;
    BidSubmission sub;
    sub.agent = a.spec.person_id;
    sub.slot_id = slot;
    sub.amount = amount;
    sub.sent = t;
    sub.up_delay = a.spec.up.draw(rng_);
    sub.last_seen_phase = a.last_phase;
    sub.cursor_at_submit = a.cursor;
    const std::size_t index = bids_.size();
    bids_.push_back(sub);
    BidRequest req{a.token, a.spec.auction_id, slot, amount, a.cursor, a.local(t)};
    at(t + sub.up_delay, [this, i, index, req](TimeMs arrival) {
        clock_.set(arrival);
        auto r = service_->submit_bid(req);
        auto& sub = bids_[index];
        sub.arrived = arrival;
        if (r) {
            sub.arrived = r->server_time;
            sub.outcome = r->outcome;
        } else {
            sub.error = r.error().error;
        }
        const auto down = agents_[i].spec.down.draw(rng_);
        at(arrival + down, [this, i](TimeMs) { agents_[i].bid_pending = false; });
    });
}

void Runner::tick(TimeMs t) {
    clock_.set(t);
    service_->tick_all();
    if (!finished()) at(t + std::max<DurationMs>(1, scenario_.tick_ms), [this](TimeMs now) { tick(now); });
}

bool Runner::finished() const {
    for (const auto& c : scenario_.auctions) {
        auto s = service_->snapshot(c.auction_id);
        if (!s || !is_terminal(s->phase)) return false;
    }
    return std::all_of(agents_.begin(), agents_.end(), [](const Agent& a) { return a.done; });
}

Result<Trace, ScenarioProblem> Runner::run() {
    if (auto r = setup(); !r) return r.error();
    for (const auto& spec : scenario_.agents) {
        Agent a;
        a.spec = spec;
        a.estimator = timesync::OffsetEstimator(timesync::Params{scenario_.burst_size, 25, 1, 4});
        a.result.person_id = spec.person_id;
        a.result.role = spec.role;
        a.result.auction_id = spec.auction_id;
        a.result.true_offset_ms = -spec.clock_offset_ms;
        agents_.push_back(std::move(a));
    }
    for (std::size_t i = 0; i < agents_.size(); ++i)
        at(std::max(scenario_.clock_start, agents_[i].spec.connect_at), [this, i](TimeMs t) { connect(i, t); });
    at(scenario_.clock_start, [this](TimeMs t) { tick(t); });

    // Without an explicit end, stop well after the last possible close.
    const TimeMs limit = scenario_.run_until.value_or(horizon_ + 120000);
    while (!queue_.empty()) {
        Event e = queue_.top();
        if (e.at > limit) break;
        queue_.pop();
        e.action(e.at);
        if (!scenario_.run_until && finished()) break;
    }

    Trace trace;
    trace.log_bytes = log_bytes_;
    std::istringstream lines(log_bytes_);
    std::string line;
    std::int64_t seq = 0;
    while (std::getline(lines, line)) {
        auto rec = decode_record(line, ++seq);
        if (!rec) return ScenarioProblem{SimError::ScenarioInvalid, "log: " + rec.error().detail};
        trace.records.push_back(std::move(rec).value());
    }
    trace.observations = std::move(observations_);
    trace.bids = std::move(bids_);
    for (auto& a : agents_) trace.agents.push_back(std::move(a.result));
    trace.final_states = service_->states();
    for (const auto& [id, s] : trace.final_states) {
        AuctionResult ar;
        ar.auction_id = id;
        ar.phase = s.phase;
        ar.close_time = s.close_time;
        ar.hard_end = s.hard_end;
        ar.closing_grace_ms = s.config.closing_grace_ms;
        for (const auto& m : s.messages) {
            if (const auto* c = m.as<msg::ClosingAnnounced>()) ar.announced_end = c->announced_end;
        }
        ar.digest = state_digest(s);
        trace.auctions.push_back(std::move(ar));
    }
    return trace;
}

json observation_json(const Observation& o) {
    return json{{"type", "observation"},       {"agent", o.agent},
                {"sent", o.sent},              {"received", o.received},
                {"server_time", o.server_time}, {"phase", to_string(o.phase)},
                {"cursor", o.cursor},          {"new_cursor", o.new_cursor},
                {"next_poll_ms", o.next_poll_ms}, {"up_delay", o.up_delay},
                {"down_delay", o.down_delay}};
}

json bid_json(const BidSubmission& b) {
    json j{{"type", "bid"},         {"agent", b.agent},       {"slot_id", b.slot_id},
           {"amount", b.amount},    {"sent", b.sent},         {"arrived", b.arrived},
           {"up_delay", b.up_delay}, {"cursor_at_submit", b.cursor_at_submit}};
    j["last_seen_phase"] = b.last_seen_phase ? json(to_string(*b.last_seen_phase)) : json(nullptr);
    if (b.outcome) j["outcome"] = *b.outcome;
    if (!b.error.empty()) j["error"] = b.error;
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------

Result<Scenario, ScenarioProblem> scenario_from_json(const json& j) {
    auto problem = [](std::string d) { return ScenarioProblem{SimError::ScenarioInvalid, std::move(d)}; };
    try {
        Scenario s;
        s.seed = j.value("seed", std::uint64_t{1});
        s.tick_ms = j.value("tick_ms", DurationMs{100});
        s.burst_size = j.value("burst_size", std::size_t{8});
        if (j.contains("run_until") && !j["run_until"].is_null()) s.run_until = j["run_until"].get<TimeMs>();
        if (j.contains("auctions")) {
            s.auctions = j.at("auctions").get<std::vector<AuctionConfig>>();
        } else if (j.contains("auction")) {
            s.auctions.push_back(j.at("auction").get<AuctionConfig>());
        }
        if (s.auctions.empty()) return problem("no auctions");
        TimeMs earliest = s.auctions.front().start_time;
        for (const auto& a : s.auctions) earliest = std::min(earliest, a.start_time);
        s.clock_start = j.value("clock_start", earliest);
        if (s.tick_ms <= 0) return problem("tick_ms must be positive");

        std::set<PersonId> seen{std::string(kOriginator), std::string(kAuctioneer)};
        for (const auto& ja : j.value("agents", json::array())) {
            AgentSpec a;
            a.person_id = ja.at("person_id").get<std::string>();
            if (!seen.insert(a.person_id).second) return problem("duplicate or reserved person " + a.person_id);
            a.company_id = ja.value("company_id", a.person_id + "-co");
            auto role = parse_role(ja.value("role", std::string("Bidder")));
            if (!role || (*role != Role::Bidder && *role != Role::Observer))
                return problem("agent " + a.person_id + ": role must be Bidder or Observer");
            a.role = *role;
            if (ja.contains("slot_id") && !ja["slot_id"].is_null()) a.slot_id = ja["slot_id"].get<std::string>();
            a.auction_id = ja.value("auction_id", s.auctions.front().auction_id);
            if (std::none_of(s.auctions.begin(), s.auctions.end(),
                             [&](const AuctionConfig& c) { return c.auction_id == a.auction_id; }))
                return problem("agent " + a.person_id + ": unknown auction " + a.auction_id);
            a.clock_offset_ms = ja.value("clock_offset_ms", DurationMs{0});
            if (ja.contains("link")) a.up = a.down = link_from_json(ja["link"]);
            if (ja.contains("up")) a.up = link_from_json(ja["up"]);
            if (ja.contains("down")) a.down = link_from_json(ja["down"]);
            if (a.up.base_ms < 0 || a.up.jitter_ms < 0 || a.down.base_ms < 0 || a.down.jitter_ms < 0)
                return problem("agent " + a.person_id + ": negative delay");
            a.connect_at = ja.value("connect_at", s.clock_start);
            if (ja.contains("disconnect_at") && !ja["disconnect_at"].is_null())
                a.disconnect_at = ja["disconnect_at"].get<TimeMs>();

            const auto js = ja.value("strategy", json::object());
            auto kind = parse_strategy(js.value("type", std::string("passive")));
            if (!kind) return problem("agent " + a.person_id + ": unknown strategy");
            auto& st = a.strategy;
            st.kind = *kind;
            for (const auto& b : js.value("bids", json::array()))
                st.bids.push_back({b.at("at").get<TimeMs>(), b.at("slot_id").get<std::string>(),
                                   b.at("amount").get<std::int64_t>()});
            st.slot_id = js.value("slot_id", std::string{});
            st.opening_amount = js.value("opening_amount", std::int64_t{0});
            st.limit = js.value("limit", std::int64_t{0});
            st.step = js.value("step", std::int64_t{0});
            st.react_ms = js.value("react_ms", DurationMs{0});
            st.amount = js.value("amount", std::int64_t{0});
            st.lead_ms = js.value("lead_ms", DurationMs{0});
            if (st.kind != StrategyKind::Passive && a.role != Role::Bidder)
                return problem("agent " + a.person_id + ": only bidders can bid");
            if ((st.kind == StrategyKind::Undercut || st.kind == StrategyKind::Sniper) && st.slot_id.empty())
                return problem("agent " + a.person_id + ": strategy needs slot_id");
            s.agents.push_back(std::move(a));
        }
        return s;
    } catch (const std::exception& e) {
        return problem(e.what());
    }
}

json scenario_to_json(const Scenario& s) {
    json agents = json::array();
    for (const auto& a : s.agents) {
        json st{{"type", to_string(a.strategy.kind)}};
        const auto& k = a.strategy;
        switch (k.kind) {
        case StrategyKind::Scripted: {
            json bids = json::array();
            for (const auto& b : k.bids) bids.push_back({{"at", b.at}, {"slot_id", b.slot_id}, {"amount", b.amount}});
            st["bids"] = std::move(bids);
            break;
        }
        case StrategyKind::Undercut:
            st.update({{"slot_id", k.slot_id}, {"opening_amount", k.opening_amount}, {"limit", k.limit},
                       {"step", k.step}, {"react_ms", k.react_ms}});
            break;
        case StrategyKind::Sniper:
            st.update({{"slot_id", k.slot_id}, {"amount", k.amount}, {"lead_ms", k.lead_ms}});
            break;
        case StrategyKind::Passive: break;
        }
        json ja{{"person_id", a.person_id},         {"company_id", a.company_id},
                {"role", to_string(a.role)},         {"auction_id", a.auction_id},
                {"clock_offset_ms", a.clock_offset_ms}, {"up", link_to_json(a.up)},
                {"down", link_to_json(a.down)},      {"connect_at", a.connect_at},
                {"strategy", std::move(st)}};
        if (a.slot_id) ja["slot_id"] = *a.slot_id;
        if (a.disconnect_at) ja["disconnect_at"] = *a.disconnect_at;
        agents.push_back(std::move(ja));
    }
    json j{{"seed", s.seed},   {"clock_start", s.clock_start}, {"tick_ms", s.tick_ms},
           {"burst_size", s.burst_size}, {"auctions", s.auctions}, {"agents", std::move(agents)}};
    if (s.run_until) j["run_until"] = *s.run_until;
    return j;
}

Result<Trace, ScenarioProblem> run(const Scenario& scenario) {
    if (scenario.auctions.empty()) return ScenarioProblem{SimError::ScenarioInvalid, "no auctions"};
    Runner runner(scenario);
    return runner.run();
}

std::string Trace::to_jsonl() const {
    std::string out;
    auto line = [&out](const json& j) { out += j.dump() + "\n"; };
    for (const auto& r : records) line(json{{"type", "record"}, {"record", json::parse(encode_record(r))}});
    for (const auto& o : observations) line(observation_json(o));
    for (const auto& b : bids) line(bid_json(b));
    for (const auto& a : agents) {
        json j{{"type", "agent"},
               {"person_id", a.person_id},
               {"role", to_string(a.role)},
               {"auction_id", a.auction_id},
               {"disconnected", a.disconnected},
               {"true_offset_ms", a.true_offset_ms},
               {"delivered", a.delivered.size()},
               {"max_up_delay", a.max_up_delay},
               {"max_down_delay", a.max_down_delay},
               {"max_poll_ms", a.max_poll_ms}};
        j["closed_observed_at"] = a.closed_observed_at ? json(*a.closed_observed_at) : json(nullptr);
        if (a.estimate)
            j["estimate"] = json{{"offset_ms", a.estimate->offset_ms},
                                 {"rtt_ms", a.estimate->rtt_ms},
                                 {"sample_count", a.estimate->sample_count}};
        line(j);
    }
    for (const auto& a : auctions) {
        line(json{{"type", "final"},
                  {"auction_id", a.auction_id},
                  {"phase", to_string(a.phase)},
                  {"close_time", a.close_time},
                  {"announced_end", a.announced_end},
                  {"hard_end", a.hard_end},
                  {"digest", a.digest}});
    }
    return out;
}

// ---------------------------------------------------------------------------

CloseAgreement check_close_agreement(const Trace& trace) {
    CloseAgreement out;
    std::map<AuctionId, DurationMs> max_delay, max_poll;
    for (const auto& a : trace.agents) {
        auto& d = max_delay[a.auction_id];
        d = std::max({d, a.max_up_delay, a.max_down_delay});
        auto& p = max_poll[a.auction_id];
        p = std::max(p, a.max_poll_ms);
    }
    for (const auto& b : trace.bids) {
        for (const auto& a : trace.agents) {
            if (a.person_id == b.agent) max_delay[a.auction_id] = std::max(max_delay[a.auction_id], b.up_delay);
        }
    }

    for (const auto& a : trace.agents) {
        if (a.disconnected) {
            out.disconnected.push_back(a.person_id);
            continue;
        }
        auto it = std::find_if(trace.auctions.begin(), trace.auctions.end(),
                               [&](const AuctionResult& r) { return r.auction_id == a.auction_id; });
        if (it == trace.auctions.end() || !is_terminal(it->phase)) continue;
        if (!a.closed_observed_at) {
            out.never_observed.push_back(a.person_id);
            continue;
        }
        CloseLag lag{a.person_id, a.auction_id, *a.closed_observed_at - it->close_time,
                     it->closing_grace_ms + max_delay[a.auction_id] + max_poll[a.auction_id]};
        out.max_lag_ms = std::max(out.max_lag_ms, lag.lag_ms);
        if (lag.lag_ms > lag.bound_ms) out.violations.push_back(lag);
        out.lags.push_back(lag);
    }
    return out;
}

std::vector<BidSubmission> check_no_lost_bid(const Trace& trace) {
    std::map<PersonId, AuctionId> auction_of;
    for (const auto& a : trace.agents) auction_of[a.person_id] = a.auction_id;
    std::vector<BidSubmission> out;
    for (const auto& b : trace.bids) {
        if (!b.outcome || is_accepted(*b.outcome)) continue;
        if (b.last_seen_phase != Phase::Open && b.last_seen_phase != Phase::Extension) continue;
        auto it = std::find_if(trace.auctions.begin(), trace.auctions.end(), [&](const AuctionResult& r) {
            return r.auction_id == auction_of[b.agent];
        });
        if (it == trace.auctions.end()) continue;
        if (b.up_delay >= it->closing_grace_ms || b.arrived >= it->hard_end) continue;
        if (std::get<Rejected>(*b.outcome).reason == RejectReason::AuctionClosed) out.push_back(b);
    }
    return out;
}

std::vector<std::string> check_hard_cap(const Trace& trace) {
    std::vector<std::string> out;
    for (const auto& [id, s] : trace.final_states) {
        for (const auto& b : s.bids) {
            if (b.server_time >= s.hard_end)
                out.push_back(id + ": bid " + std::to_string(b.bid_id) + " accepted at " +
                              std::to_string(b.server_time));
        }
        if (s.current_end > s.hard_end) out.push_back(id + ": end past hard cap");
        if (s.phase == Phase::Closed && s.close_time > s.hard_end)
            out.push_back(id + ": closed after hard cap");
    }
    return out;
}

Scenario random_close_scenario(std::uint64_t seed, int clients, DurationMs max_delay_ms,
                               DurationMs closing_grace_ms) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 17);
    auto uniform = [&rng](std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    };

    Scenario s;
    s.seed = seed;
    s.clock_start = 0;

    AuctionConfig c;
    c.auction_id = "close-" + std::to_string(seed);
    c.title = "Close agreement run";
    c.format = Format::Reverse;
    c.currency = "EUR";
    c.start_time = 5000;
    c.main_duration_ms = 20000;
    c.hard_cap_ms = 60000;
    c.closing_grace_ms = closing_grace_ms;
    c.tick_size = 100;
    c.historic_value = Money{1000000, "EUR"};
    c.slots.push_back(Slot{"lot-1", "Lot 1", Quantity{1, "pcs"}, Money{1000000, "EUR"}});
    s.auctions.push_back(c);

    const int observers = std::max(0, clients / 5);
    for (int k = 0; k < clients; ++k) {
        AgentSpec a;
        a.person_id = "client-" + std::to_string(k);
        a.company_id = "co-" + std::to_string(k);
        a.auction_id = c.auction_id;
        a.clock_offset_ms = uniform(-3600000, 3600000);
        const auto up_base = uniform(0, max_delay_ms / 2);
        a.up = LinkModel{up_base, uniform(0, max_delay_ms - up_base)};
        const auto down_base = uniform(0, max_delay_ms / 2);
        a.down = LinkModel{down_base, uniform(0, max_delay_ms - down_base)};
        a.connect_at = uniform(0, 4000);
        if (uniform(0, 19) == 0) a.disconnect_at = uniform(10000, 40000);
        if (k < observers) {
            a.role = Role::Observer;
        } else if (uniform(0, 9) == 0) {
            a.strategy.kind = StrategyKind::Sniper;
            a.strategy.slot_id = "lot-1";
            a.strategy.amount = 100 * uniform(4000, 6000);
            a.strategy.lead_ms = uniform(500, 4000);
        } else {
            a.strategy.kind = StrategyKind::Undercut;
            a.strategy.slot_id = "lot-1";
            a.strategy.opening_amount = 1000000 - 100 * uniform(0, 50);
            a.strategy.limit = 100 * uniform(6000, 9500);
            a.strategy.step = 100 * uniform(1, 20);
            a.strategy.react_ms = uniform(50, 2500);
        }
        s.agents.push_back(std::move(a));
    }
    return s;
}

}  // namespace openfloor::sim
