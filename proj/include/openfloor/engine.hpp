#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "openfloor/domain.hpp"
#include "openfloor/result.hpp"

namespace openfloor {

struct PersonRef {
    PersonId person_id;
    CompanyId company_id;
    std::string name;

    bool operator==(const PersonRef&) const = default;
};

struct Participant {
    PersonRef person;
    Role role = Role::Observer;
    std::optional<SlotId> slot_id;
    ParticipantStatus status;

    bool operator==(const Participant&) const = default;
};

// Dynamic state of one auction. The engine is a pure fold of commands over
// this value; nothing in here depends on wall-clock time.
struct AuctionState {
    AuctionConfig config;
    Phase phase = Phase::Scheduled;
    TimeMs current_end = 0;
    TimeMs hard_end = 0;  // start + hard cap, moved only by admin prolong
    std::int64_t extension_count = 0;
    std::int64_t closing_seq = 0;  // seq of the pending ClosingAnnounced, 0 if none
    TimeMs announced_end = 0;
    TimeMs close_time = 0;
    TimeMs last_time = 0;
    std::int64_t next_bid_id = 1;
    std::vector<Message> messages;
    std::vector<Bid> bids;  // in seq order, voided ones included
    std::map<PersonId, Participant> participants;
    std::vector<AccessRight> rights;

    std::int64_t latest_seq() const { return messages.empty() ? 0 : messages.back().seq; }
    const Participant* participant(const PersonId& id) const;
    std::vector<ParticipantStatus> statuses() const;
    bool has_auctioneer() const;
    TimeMs grace_deadline() const { return std::min(announced_end + config.closing_grace_ms, hard_end); }

    bool operator==(const AuctionState&) const = default;
};

// ---------------------------------------------------------------------------
// Commands

namespace cmd {

struct CreateAuction {
    AuctionConfig config;
    PersonRef originator;
    std::optional<PersonRef> auctioneer;
    bool operator==(const CreateAuction&) const = default;
};
struct PlaceBid {
    PersonId person;
    SlotId slot;
    std::int64_t amount = 0;  // minor units, auction currency
    std::int64_t cursor_at_submit = 0;
    bool operator==(const PlaceBid&) const = default;
};
struct Tick {
    bool operator==(const Tick&) const = default;
};
struct Invite {
    PersonRef person;
    Role role = Role::Observer;
    std::optional<SlotId> slot_id;
    std::optional<TimeMs> valid_from;
    std::optional<TimeMs> valid_until;
    bool operator==(const Invite&) const = default;
};
struct RecordContract {
    PersonId person;
    bool operator==(const RecordContract&) const = default;
};
struct RecordPasswordDelivered {
    PersonId person;
    bool operator==(const RecordPasswordDelivered&) const = default;
};
struct Admit {
    PersonId person;
    bool operator==(const Admit&) const = default;
};
struct Ban {
    PersonId person;
    bool operator==(const Ban&) const = default;
};
struct Prolong {
    DurationMs delta_ms = 0;
    bool operator==(const Prolong&) const = default;
};
struct Cancel {
    bool operator==(const Cancel&) const = default;
};

}  // namespace cmd

using CommandBody =
    std::variant<cmd::CreateAuction, cmd::PlaceBid, cmd::Tick, cmd::Invite, cmd::RecordContract,
                 cmd::RecordPasswordDelivered, cmd::Admit, cmd::Ban, cmd::Prolong, cmd::Cancel>;

std::string_view command_name(const CommandBody& body);

// Totally ordered by receipt; `at` is the server receipt time.
struct Command {
    AuctionId auction_id;
    TimeMs at = 0;
    CommandBody body;

    bool operator==(const Command&) const = default;
};

// ---------------------------------------------------------------------------
// Outcomes and errors

enum class RejectReason {
    IllegalPhase,
    AuctionClosed,
    UnknownSlot,
    NotABidder,
    Banned,
    NotAdmitted,
    NonPositiveAmount,
    ClosingCursorTooNew,
    AboveStartPrice,
    BelowStartPrice,
    WrongDirection,
    InsufficientImprovement,
};

std::string_view to_string(RejectReason r);
std::optional<RejectReason> parse_reject_reason(std::string_view s);

struct Accepted {
    Bid bid;
    int rank = 0;
    std::optional<TimeMs> new_end;
    bool operator==(const Accepted&) const = default;
};
struct Rejected {
    RejectReason reason;
    bool operator==(const Rejected&) const = default;
};
using BidOutcome = std::variant<Accepted, Rejected>;

inline bool is_accepted(const BidOutcome& o) { return std::holds_alternative<Accepted>(o); }

enum class EngineError {
    IllegalPhase,
    UnknownReference,
    AlreadyClosed,
    AlreadyExists,
    NotFound,
    NotSigned,
    NotABidder,
    Banned,
    AlreadyBanned,
    CannotBanAuctioneer,
    RoleConflict,
    SecondBidderSameCompany,
    NotAdmitted,
    AuctioneerAlreadyAssigned,
    NotClosed,
    UnknownSlot,
    TimeRegression,
    InvalidConfig,
    InvalidArgument,
};

std::string_view to_string(EngineError e);

struct Effects {
    std::vector<Message> emitted;
    std::optional<BidOutcome> outcome;  // set for PlaceBid only
};

struct Applied {
    AuctionState state;
    Effects effects;
};

// ---------------------------------------------------------------------------
// Operations

// Builds the Scheduled state for a new auction. The originator (and the
// auctioneer, when given) are registered as participants.
Result<Applied, EngineError> create_auction(const cmd::CreateAuction& c, TimeMs now);

// Pure transition: same (state, command) always yields the same result.
// Every command first advances time (an implicit tick at `cmd.at`).
Result<Applied, EngineError> apply(const AuctionState& state, const Command& command);

// In-place variant of apply(). On error the state is left untouched.
Result<Effects, EngineError> apply_in_place(AuctionState& state, const Command& command);

// True when tick(state, now) would emit at least one message.
bool tick_would_change(const AuctionState& state, TimeMs now);

// The building blocks below mutate `state` and append emitted messages to
// `out`. apply() is the intended entry point; these are exposed for tests.
void tick(AuctionState& state, TimeMs now, std::vector<Message>& out);

BidOutcome place_bid(AuctionState& state, const PersonId& person, const SlotId& slot,
                     std::int64_t amount, std::int64_t cursor_at_submit, TimeMs now,
                     std::vector<Message>& out);

// Soft-close rule. Returns the new end when an extension was granted.
std::optional<TimeMs> maybe_extend(AuctionState& state, TimeMs now, std::int64_t trigger_bid_id,
                                   std::vector<Message>& out);

Result<Ok, EngineError> ban_participant(AuctionState& state, const PersonId& person, TimeMs now,
                                        std::vector<Message>& out);
Result<Ok, EngineError> prolong(AuctionState& state, DurationMs delta_ms, TimeMs now,
                                std::vector<Message>& out);
Result<Ok, EngineError> cancel(AuctionState& state, TimeMs now, std::vector<Message>& out);

struct RankingEntry {
    PersonId bidder;
    std::int64_t best_amount = 0;
    std::int64_t best_seq = 0;
    int rank = 0;
    bool operator==(const RankingEntry&) const = default;
};

// Best non-voided bid per bidder, best first; ties go to the earlier bid.
Result<std::vector<RankingEntry>, EngineError> current_ranking(const AuctionState& state,
                                                               const SlotId& slot);

// true if `a` beats `b` under the auction format, ties by earlier seq.
bool better_bid(Format format, std::int64_t a_amount, std::int64_t a_seq, std::int64_t b_amount,
                std::int64_t b_seq);

struct SlotResult {
    SlotId slot_id;
    std::optional<Bid> winner;
    bool operator==(const SlotResult&) const = default;
};

Result<std::vector<SlotResult>, EngineError> determine_winners(const AuctionState& state);

enum class Binding { Binding, FreeChoice };
std::string_view to_string(Binding b);

Result<Binding, EngineError> binding_result(const AuctionState& state,
                                            const std::vector<SlotResult>& winners);

// Hex SHA-256 over the canonical JSON form of the state.
std::string state_digest(const AuctionState& state);

}  // namespace openfloor
