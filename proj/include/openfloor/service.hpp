#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "openfloor/auth.hpp"
#include "openfloor/clock.hpp"
#include "openfloor/engine.hpp"
#include "openfloor/event_store.hpp"
#include "openfloor/json.hpp"
#include "openfloor/traffic.hpp"
#include "openfloor/views.hpp"

namespace openfloor {

// Registered people and companies; loaded from the server's --config file.
struct Directory {
    std::map<CompanyId, Company> companies;
    std::map<PersonId, Person> persons;

    std::optional<PersonRef> ref(const PersonId& id) const;

    // {"companies": [...], "persons": [...]}. A person may carry a plaintext
    // "password" instead of "credential_hash"; it is hashed on load.
    static Directory from_json(const json& j, int pbkdf2_iterations = kDefaultPbkdf2Iterations);
};

// Transport-level failure. `error` is the stable name clients switch on;
// engine errors surface under their own names (e.g. "NotSigned").
struct RpcError {
    int status = 400;
    std::string error;
    json detail;  // null unless there is something safe to add

    json body() const;
    static RpcError unauthorized() { return {401, "Unauthorized", nullptr}; }
    static RpcError bad_credentials() { return {401, "BadCredentials", nullptr}; }
    static RpcError forbidden() { return {403, "Forbidden", nullptr}; }
    static RpcError unknown_auction() { return {404, "UnknownAuction", nullptr}; }
    static RpcError bad_request(std::string what) { return {400, "BadRequest", std::move(what)}; }
};

template <class T>
using Rpc = Result<T, RpcError>;

struct LoginResponse {
    std::string auth_token;
    PersonId person_id;
};

struct PollRequest {
    std::string auth_token;
    AuctionId auction_id;
    std::int64_t cursor = 0;
    TimeMs client_send_time = 0;
};

struct PollResponse {
    TimeMs server_time = 0;
    json messages = json::array();  // role-redacted, seq > cursor, in order
    json view;
    DurationMs next_poll_ms = kBasePollMs;
    std::int64_t new_cursor = 0;
};
void to_json(json& j, const PollResponse& r);

struct BidRequest {
    std::string auth_token;
    AuctionId auction_id;
    SlotId slot_id;
    std::int64_t amount = 0;
    std::int64_t cursor_at_submit = 0;
    TimeMs client_send_time = 0;
};

struct BidResponse {
    TimeMs server_time = 0;
    BidOutcome outcome;
};
void to_json(json& j, const BidResponse& r);

struct AuctionSummary {
    AuctionId auction_id;
    std::string title;
    Format format = Format::Reverse;
    Phase phase = Phase::Scheduled;
    Role role = Role::Observer;
    TimeMs start_time = 0;
    TimeMs current_end = 0;
};
void to_json(json& j, const AuctionSummary& s);

struct StatusRow {
    Participant participant;
};
void to_json(json& j, const StatusRow& r);

struct ServiceOptions {
    double capacity_rps = 500.0;
    DurationMs token_idle_ms = kTokenIdleTimeoutMs;
};

// All mutations funnel through one executor lock and are logged before they
// become visible; readers work on immutable per-auction snapshots.
class Service {
public:
    // `store` may be null (in-memory only). Existing auctions are taken from
    // `recovered` when the caller has replayed a log.
    Service(Directory directory, const Clock& clock, EventStore* store = nullptr,
            ServiceOptions options = {}, StateMap recovered = {});

    Rpc<LoginResponse> login(const std::string& username, const std::string& password);
    // Issues a token without a password check; for embedded harnesses.
    std::string open_session(const PersonId& person);

    Rpc<PollResponse> poll(const PollRequest& req);
    Rpc<BidResponse> submit_bid(const BidRequest& req);
    Rpc<std::vector<AuctionSummary>> list_auctions(const std::string& token);

    Rpc<AuctionId> create_auction(const std::string& token, const AuctionConfig& config,
                                  const std::optional<PersonId>& auctioneer);
    Rpc<Ok> invite(const std::string& token, const AuctionId& id, const PersonId& person, Role role,
                   const std::optional<SlotId>& slot, std::optional<TimeMs> valid_from = {},
                   std::optional<TimeMs> valid_until = {});
    Rpc<Ok> record_contract(const std::string& token, const AuctionId& id, const PersonId& person);
    Rpc<Ok> record_password_delivered(const std::string& token, const AuctionId& id,
                                      const PersonId& person);
    Rpc<Ok> admit(const std::string& token, const AuctionId& id, const PersonId& person);
    Rpc<Ok> ban(const std::string& token, const AuctionId& id, const PersonId& person);
    Rpc<Ok> prolong(const std::string& token, const AuctionId& id, DurationMs delta_ms);
    Rpc<Ok> cancel(const std::string& token, const AuctionId& id);
    Rpc<std::vector<StatusRow>> list_status(const std::string& token, const AuctionId& id);

    // Applies every due phase transition at the current clock time.
    void tick_all();

    std::shared_ptr<const AuctionState> snapshot(const AuctionId& id) const;
    StateMap states() const;
    TrafficMonitor& traffic() { return traffic_; }
    const Clock& clock() const { return clock_; }

private:
    enum class Who { Auctioneer, Setup };  // Setup = auctioneer or originator

    // A state version together with the view index built from it.
    struct Published {
        std::shared_ptr<const AuctionState> state;
        std::shared_ptr<const ViewIndex> index;
    };
    std::optional<Published> published(const AuctionId& id) const;

    Rpc<PersonId> authenticate(const std::string& token);
    Rpc<std::shared_ptr<const AuctionState>> require_role(const std::string& token,
                                                          const AuctionId& id, Who who);
    Rpc<Effects> execute(Command command);
    Rpc<Ok> admin_command(const std::string& token, const AuctionId& id, Who who, CommandBody body);
    void publish(const AuctionId& id, std::shared_ptr<const AuctionState> state);
    void maybe_tick(const AuctionId& id);

    Directory directory_;
    const Clock& clock_;
    EventStore* store_;
    ServiceOptions options_;
    TokenTable tokens_;
    TrafficMonitor traffic_;
    std::string dummy_hash_;

    std::mutex exec_mu_;
    mutable std::shared_mutex snap_mu_;
    std::map<AuctionId, Published> auctions_;
};

// Background thread calling tick_all() at a fixed period.
class Ticker {
public:
    Ticker(Service& service, DurationMs period_ms);
    ~Ticker();
    Ticker(const Ticker&) = delete;
    Ticker& operator=(const Ticker&) = delete;

private:
    std::mutex mu_;
    std::condition_variable cv_;
    bool stop_ = false;
    std::thread thread_;
};

}  // namespace openfloor
