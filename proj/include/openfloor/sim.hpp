#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "openfloor/domain.hpp"
#include "openfloor/engine.hpp"
#include "openfloor/event_store.hpp"
#include "openfloor/json.hpp"
#include "openfloor/result.hpp"
#include "openfloor/timesync.hpp"

namespace openfloor::sim {

// One-way delay = base + U(0, jitter), drawn independently per message.
struct LinkModel {
    DurationMs base_ms = 0;
    DurationMs jitter_ms = 0;

    DurationMs max_delay() const { return base_ms + jitter_ms; }
    DurationMs draw(std::mt19937_64& rng) const;
};

struct ScriptedBid {
    TimeMs at = 0;  // agent's local clock
    SlotId slot_id;
    std::int64_t amount = 0;
};

enum class StrategyKind { Passive, Scripted, Undercut, Sniper };

struct Strategy {
    StrategyKind kind = StrategyKind::Passive;
    std::vector<ScriptedBid> bids;  // Scripted
    SlotId slot_id;                 // Undercut, Sniper
    std::int64_t opening_amount = 0;  // Undercut: first bid when the slot is empty
    std::int64_t limit = 0;         // Undercut: floor (reverse) or ceiling (English)
    std::int64_t step = 0;          // Undercut: 0 = tick size
    DurationMs react_ms = 0;        // Undercut: delay after observing a rival lead
    std::int64_t amount = 0;        // Sniper
    DurationMs lead_ms = 0;         // Sniper: fire when the estimated remaining time drops to this
};

struct AgentSpec {
    PersonId person_id;
    CompanyId company_id;  // defaults to "<person_id>-co"
    Role role = Role::Bidder;
    std::optional<SlotId> slot_id;  // bidder right restricted to one slot
    AuctionId auction_id;           // defaults to the first auction
    DurationMs clock_offset_ms = 0; // agent clock = true time + offset
    LinkModel up;                   // agent -> server
    LinkModel down;                 // server -> agent
    TimeMs connect_at = 0;          // true time
    std::optional<TimeMs> disconnect_at;
    Strategy strategy;
};

struct Scenario {
    std::uint64_t seed = 1;
    TimeMs clock_start = 0;
    std::vector<AuctionConfig> auctions;
    std::vector<AgentSpec> agents;
    DurationMs tick_ms = 100;
    std::optional<TimeMs> run_until;  // default: until every client saw the close
    std::size_t burst_size = 8;
};

enum class SimError { ScenarioInvalid };

struct ScenarioProblem {
    SimError code = SimError::ScenarioInvalid;
    std::string detail;
};

// Scenario file schema; unknown fields are ignored.
Result<Scenario, ScenarioProblem> scenario_from_json(const json& j);
json scenario_to_json(const Scenario& s);

// ---------------------------------------------------------------------------
// Trace

struct Observation {
    PersonId agent;
    TimeMs sent = 0;         // true time the poll left the agent
    TimeMs received = 0;     // true time the response arrived
    TimeMs server_time = 0;
    Phase phase = Phase::Scheduled;
    std::int64_t cursor = 0;
    std::int64_t new_cursor = 0;
    DurationMs next_poll_ms = 0;
    DurationMs up_delay = 0;
    DurationMs down_delay = 0;
};

struct BidSubmission {
    PersonId agent;
    SlotId slot_id;
    std::int64_t amount = 0;
    TimeMs sent = 0;       // true time
    TimeMs arrived = 0;    // server receipt time
    DurationMs up_delay = 0;
    std::optional<Phase> last_seen_phase;
    std::int64_t cursor_at_submit = 0;
    std::optional<BidOutcome> outcome;  // absent if the server refused the call
    std::string error;                  // RPC error name otherwise
};

struct AgentResult {
    PersonId person_id;
    Role role = Role::Bidder;
    AuctionId auction_id;
    bool disconnected = false;
    DurationMs true_offset_ms = 0;  // server - agent
    std::optional<timesync::OffsetEstimate> estimate;
    std::optional<TimeMs> closed_observed_at;  // true time
    std::vector<std::int64_t> delivered;       // seqs in delivery order
    DurationMs max_up_delay = 0;
    DurationMs max_down_delay = 0;
    DurationMs max_poll_ms = 0;
};

struct AuctionResult {
    AuctionId auction_id;
    Phase phase = Phase::Scheduled;
    TimeMs close_time = 0;
    TimeMs announced_end = 0;  // end time announced by the last ClosingAnnounced
    TimeMs hard_end = 0;
    DurationMs closing_grace_ms = 0;
    std::string digest;
};

struct Trace {
    std::vector<LogRecord> records;  // every logged command and message
    std::vector<Observation> observations;
    std::vector<BidSubmission> bids;
    std::vector<AgentResult> agents;
    std::vector<AuctionResult> auctions;
    StateMap final_states;
    std::string log_bytes;  // events.jsonl content of the run

    std::string to_jsonl() const;
};

Result<Trace, ScenarioProblem> run(const Scenario& scenario);

// ---------------------------------------------------------------------------
// Checks over a finished trace

struct CloseLag {
    PersonId agent;
    AuctionId auction_id;
    DurationMs lag_ms = 0;  // observation of Closed minus server close time
    DurationMs bound_ms = 0;
};

struct CloseAgreement {
    DurationMs max_lag_ms = 0;
    std::vector<CloseLag> lags;
    std::vector<CloseLag> violations;      // lag above bound
    std::vector<PersonId> never_observed;  // connected but never saw Closed
    std::vector<PersonId> disconnected;    // excluded from the bound
};

// Bound per auction: closing grace + max one-way delay + max poll interval,
// all taken from the trace.
CloseAgreement check_close_agreement(const Trace& trace);

// Bids from clients whose last observed phase was Open or Extension, with an
// uplink delay below the closing grace and arriving before the hard cap,
// that were rejected as AuctionClosed.
std::vector<BidSubmission> check_no_lost_bid(const Trace& trace);

// Accepted bids at or after the hard cap, and auctions that ended past it.
std::vector<std::string> check_hard_cap(const Trace& trace);

// Random scenario for close-agreement runs: one reverse auction, n reactive
// bidders plus observers, one-way delays bounded by max_delay_ms.
Scenario random_close_scenario(std::uint64_t seed, int clients, DurationMs max_delay_ms,
                               DurationMs closing_grace_ms = kDefaultClosingGraceMs);

}  // namespace openfloor::sim
