#include "openfloor/service.hpp"

#include <algorithm>
#include <chrono>

namespace openfloor {

namespace {

int status_for(EngineError e) {
    switch (e) {
    case EngineError::NotFound:
    case EngineError::UnknownReference:
    case EngineError::UnknownSlot: return 404;
    case EngineError::InvalidArgument:
    case EngineError::InvalidConfig: return 400;
    case EngineError::TimeRegression: return 500;
    default: return 409;
    }
}

RpcError engine_error(EngineError e) { return {status_for(e), std::string(to_string(e)), nullptr}; }

RpcError store_error(const StoreFailure& f) {
    return {503, std::string(to_string(f.code)), nullptr};
}

}  // namespace

std::optional<PersonRef> Directory::ref(const PersonId& id) const {
    auto it = persons.find(id);
    if (it == persons.end()) return std::nullopt;
    return PersonRef{it->second.person_id, it->second.company_id, it->second.name};
}

Directory Directory::from_json(const json& j, int pbkdf2_iterations) {
    Directory d;
    for (const auto& c : j.value("companies", json::array())) {
        Company company{c.at("company_id").get<std::string>(), c.value("name", std::string{})};
        d.companies[company.company_id] = company;
    }
    for (const auto& p : j.value("persons", json::array())) {
        Person person;
        person.person_id = p.at("person_id").get<std::string>();
        person.name = p.value("name", person.person_id);
        person.company_id = p.at("company_id").get<std::string>();
        if (!d.companies.count(person.company_id))
            throw std::invalid_argument("unknown company " + person.company_id);
        if (p.contains("credential_hash"))
            person.credential_hash = p.at("credential_hash").get<std::string>();
        else if (p.contains("password"))
            person.credential_hash =
                hash_password(p.at("password").get<std::string>(), pbkdf2_iterations);
        d.persons[person.person_id] = person;
    }
    return d;
}

json RpcError::body() const {
    json j{{"error", error}};
    if (!detail.is_null()) j["detail"] = detail;
    return j;
}

void to_json(json& j, const PollResponse& r) {
    j = json{{"server_time", r.server_time},
             {"messages", r.messages},
             {"view", r.view},
             {"next_poll_ms", r.next_poll_ms},
             {"new_cursor", r.new_cursor}};
}

void to_json(json& j, const BidResponse& r) {
    j = r.outcome;
    j["server_time"] = r.server_time;
}

void to_json(json& j, const AuctionSummary& s) {
    j = json{{"auction_id", s.auction_id},   {"title", s.title},
             {"format", to_string(s.format)}, {"phase", to_string(s.phase)},
             {"role", to_string(s.role)},     {"start_time", s.start_time},
             {"current_end", s.current_end}};
}

void to_json(json& j, const StatusRow& r) {
    const auto& p = r.participant;
    j = json{{"person_id", p.person.person_id},
             {"name", p.person.name},
             {"company_id", p.person.company_id},
             {"role", to_string(p.role)},
             {"invited", p.status.invited},
             {"contract_signed", p.status.contract_signed},
             {"password_delivered", p.status.password_delivered},
             {"admitted", p.status.admitted},
             {"banned", p.status.banned}};
    if (p.slot_id) j["slot_id"] = *p.slot_id;
}

// ---------------------------------------------------------------------------

Service::Service(Directory directory, const Clock& clock, EventStore* store,
                 ServiceOptions options, StateMap recovered)
    : directory_(std::move(directory)),
      clock_(clock),
      store_(store),
      options_(options),
      tokens_(options.token_idle_ms),
      traffic_(options.capacity_rps),
      dummy_hash_(hash_password("openfloor-dummy", 1)) {
    // Match the cost of real verifications so timing does not reveal which
    // usernames exist.
    for (const auto& [id, p] : directory_.persons) {
        if (auto iters = hash_iterations(p.credential_hash)) {
            dummy_hash_ = hash_password("openfloor-dummy", *iters);
            break;
        }
    }
    for (auto& [id, s] : recovered) publish(id, std::make_shared<const AuctionState>(std::move(s)));
}

Rpc<LoginResponse> Service::login(const std::string& username, const std::string& password) {
    traffic_.record(clock_.now());
    auto it = directory_.persons.find(username);
    if (it == directory_.persons.end() || it->second.credential_hash.empty()) {
        verify_password(password, dummy_hash_);
        return RpcError::bad_credentials();
    }
    if (!verify_password(password, it->second.credential_hash)) return RpcError::bad_credentials();
    return LoginResponse{tokens_.issue(username, clock_.now()), username};
}

std::string Service::open_session(const PersonId& person) {
    return tokens_.issue(person, clock_.now());
}

Rpc<PersonId> Service::authenticate(const std::string& token) {
    if (token.empty()) return RpcError::unauthorized();
    auto person = tokens_.resolve(token, clock_.now());
    if (!person) return RpcError::unauthorized();
    return *person;
}

std::shared_ptr<const AuctionState> Service::snapshot(const AuctionId& id) const {
    std::shared_lock lock(snap_mu_);
    auto it = auctions_.find(id);
    return it == auctions_.end() ? nullptr : it->second.state;
}

std::optional<Service::Published> Service::published(const AuctionId& id) const {
    std::shared_lock lock(snap_mu_);
    auto it = auctions_.find(id);
    if (it == auctions_.end()) return std::nullopt;
    return it->second;
}

StateMap Service::states() const {
    std::shared_lock lock(snap_mu_);
    StateMap out;
    for (const auto& [id, p] : auctions_) out.emplace(id, *p.state);
    return out;
}

void Service::publish(const AuctionId& id, std::shared_ptr<const AuctionState> state) {
    auto index = std::make_shared<const ViewIndex>(ViewIndex::build(*state));
    std::unique_lock lock(snap_mu_);
    auctions_[id] = Published{std::move(state), std::move(index)};
}

Rpc<Effects> Service::execute(Command command) {
    std::lock_guard lock(exec_mu_);
    if (store_ && store_->failed()) return RpcError{503, "StorageUnavailable", nullptr};

    Applied applied;
    if (const auto* create = std::get_if<cmd::CreateAuction>(&command.body)) {
        if (snapshot(command.auction_id)) return engine_error(EngineError::AlreadyExists);
        auto r = openfloor::create_auction(*create, command.at);
        if (!r) return engine_error(r.error());
        applied = std::move(r).value();
    } else {
        auto current = snapshot(command.auction_id);
        if (!current) return RpcError::unknown_auction();
        // Handlers read the clock before taking the lock; keep receipt order.
        command.at = std::max(command.at, current->last_time);
        auto r = apply(*current, command);
        if (!r) return engine_error(r.error());
        applied = std::move(r).value();
    }

    if (store_) {
        if (auto r = store_->append(command, applied.effects.emitted); !r) return store_error(r.error());
    }
    publish(command.auction_id, std::make_shared<const AuctionState>(std::move(applied.state)));
    if (store_ && store_->options().snapshot_every > 0 &&
        store_->last_seq() - store_->last_snapshot_seq() >= store_->options().snapshot_every) {
        // A failed snapshot only costs recovery time; the log stays authoritative.
        (void)store_->maybe_snapshot(states());
    }
    return std::move(applied.effects);
}

void Service::maybe_tick(const AuctionId& id) {
    const TimeMs now = clock_.now();
    auto s = snapshot(id);
    if (!s || !tick_would_change(*s, now)) return;
    (void)execute(Command{id, now, cmd::Tick{}});
}

void Service::tick_all() {
    std::vector<AuctionId> ids;
    {
        std::shared_lock lock(snap_mu_);
        for (const auto& [id, s] : auctions_) ids.push_back(id);
    }
    for (const auto& id : ids) maybe_tick(id);
}

// ---------------------------------------------------------------------------

Rpc<PollResponse> Service::poll(const PollRequest& req) {
    traffic_.record(clock_.now());
    auto who = authenticate(req.auth_token);
    if (!who) return who.error();
    if (req.cursor < 0) return RpcError::bad_request("cursor");
    if (!snapshot(req.auction_id)) return RpcError::unknown_auction();

    maybe_tick(req.auction_id);
    const TimeMs now = clock_.now();
    const auto pub = published(req.auction_id);
    const auto& state = pub->state;
    const auto* p = state->participant(*who);
    if (!p) return RpcError::forbidden();
    auto view = render_view(*state, *who, p->role, now, pub->index.get());
    if (!view) return RpcError::forbidden();

    const std::int64_t latest = state->latest_seq();
    if (req.cursor > latest) return RpcError{409, "CursorAhead", nullptr};

    PollResponse out;
    out.server_time = now;
    MessageRedactor redact(*state, *who, p->role, now, pub->index.get());
    for (std::int64_t seq = req.cursor + 1; seq <= latest; ++seq)
        out.messages.push_back(redact(state->messages[static_cast<std::size_t>(seq - 1)]));
    out.new_cursor = latest;
    out.view = *view;
    out.next_poll_ms =
        poll_interval(std::max<std::int64_t>(0, state->current_end - now), traffic_.load_factor(now));
    return out;
}

Rpc<BidResponse> Service::submit_bid(const BidRequest& req) {
    traffic_.record(clock_.now());
    auto who = authenticate(req.auth_token);
    if (!who) return who.error();
    if (!snapshot(req.auction_id)) return RpcError::unknown_auction();

    auto fx = execute(Command{req.auction_id, clock_.now(),
                              cmd::PlaceBid{*who, req.slot_id, req.amount, req.cursor_at_submit}});
    if (!fx) return fx.error();
    auto state = snapshot(req.auction_id);
    return BidResponse{state->last_time, *fx->outcome};
}

Rpc<std::vector<AuctionSummary>> Service::list_auctions(const std::string& token) {
    traffic_.record(clock_.now());
    auto who = authenticate(token);
    if (!who) return who.error();
    std::vector<AuctionSummary> out;
    std::shared_lock lock(snap_mu_);
    for (const auto& [id, pub] : auctions_) {
        const auto& s = pub.state;
        const auto* p = s->participant(*who);
        if (!p || p->status.banned) continue;
        out.push_back(AuctionSummary{id, s->config.title, s->config.format, s->phase, p->role,
                                     s->config.start_time, s->current_end});
    }
    return out;
}

Rpc<std::shared_ptr<const AuctionState>> Service::require_role(const std::string& token,
                                                               const AuctionId& id, Who who) {
    auto person = authenticate(token);
    if (!person) return person.error();
    auto s = snapshot(id);
    if (!s) return RpcError::unknown_auction();
    const auto* p = s->participant(*person);
    if (!p) return RpcError::forbidden();
    const bool allowed = p->role == Role::Auctioneer ||
                         (who == Who::Setup && p->role == Role::Originator);
    if (!allowed) return RpcError::forbidden();
    return s;
}

Rpc<Ok> Service::admin_command(const std::string& token, const AuctionId& id, Who who,
                               CommandBody body) {
    traffic_.record(clock_.now());
    if (auto r = require_role(token, id, who); !r) return r.error();
    auto fx = execute(Command{id, clock_.now(), std::move(body)});
    if (!fx) return fx.error();
    return Ok{};
}

Rpc<AuctionId> Service::create_auction(const std::string& token, const AuctionConfig& config,
                                       const std::optional<PersonId>& auctioneer) {
    traffic_.record(clock_.now());
    auto who = authenticate(token);
    if (!who) return who.error();
    auto violations = validate_config(config);
    if (!violations.empty()) {
        json detail = json::array();
        for (auto v : violations) detail.push_back(to_string(v));
        return RpcError{400, "InvalidConfig", detail};
    }
    auto originator = directory_.ref(*who);
    if (!originator) return RpcError::forbidden();
    cmd::CreateAuction c{config, *originator, std::nullopt};
    if (auctioneer) {
        c.auctioneer = directory_.ref(*auctioneer);
        if (!c.auctioneer) return engine_error(EngineError::UnknownReference);
    }
    auto fx = execute(Command{config.auction_id, clock_.now(), std::move(c)});
    if (!fx) return fx.error();
    return config.auction_id;
}

Rpc<Ok> Service::invite(const std::string& token, const AuctionId& id, const PersonId& person,
                        Role role, const std::optional<SlotId>& slot,
                        std::optional<TimeMs> valid_from, std::optional<TimeMs> valid_until) {
    auto ref = directory_.ref(person);
    if (!ref) {
        if (auto r = require_role(token, id, Who::Setup); !r) return r.error();
        return engine_error(EngineError::UnknownReference);
    }
    return admin_command(token, id, Who::Setup,
                         cmd::Invite{*ref, role, slot, valid_from, valid_until});
}

Rpc<Ok> Service::record_contract(const std::string& token, const AuctionId& id,
                                 const PersonId& person) {
    return admin_command(token, id, Who::Setup, cmd::RecordContract{person});
}

Rpc<Ok> Service::record_password_delivered(const std::string& token, const AuctionId& id,
                                           const PersonId& person) {
    return admin_command(token, id, Who::Setup, cmd::RecordPasswordDelivered{person});
}

Rpc<Ok> Service::admit(const std::string& token, const AuctionId& id, const PersonId& person) {
    return admin_command(token, id, Who::Auctioneer, cmd::Admit{person});
}

Rpc<Ok> Service::ban(const std::string& token, const AuctionId& id, const PersonId& person) {
    return admin_command(token, id, Who::Auctioneer, cmd::Ban{person});
}

Rpc<Ok> Service::prolong(const std::string& token, const AuctionId& id, DurationMs delta_ms) {
    return admin_command(token, id, Who::Auctioneer, cmd::Prolong{delta_ms});
}

Rpc<Ok> Service::cancel(const std::string& token, const AuctionId& id) {
    return admin_command(token, id, Who::Auctioneer, cmd::Cancel{});
}

Rpc<std::vector<StatusRow>> Service::list_status(const std::string& token, const AuctionId& id) {
    traffic_.record(clock_.now());
    auto s = require_role(token, id, Who::Auctioneer);
    if (!s) return s.error();
    std::vector<StatusRow> out;
    for (const auto& [pid, p] : (*s)->participants) out.push_back({p});
    return out;
}

// ---------------------------------------------------------------------------

Ticker::Ticker(Service& service, DurationMs period_ms) {
    thread_ = std::thread([this, &service, period_ms] {
        std::unique_lock lock(mu_);
        while (!stop_) {
            lock.unlock();
            service.tick_all();
            lock.lock();
            cv_.wait_for(lock, std::chrono::milliseconds(period_ms), [this] { return stop_; });
        }
    });
}

Ticker::~Ticker() {
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
}

}  // namespace openfloor
