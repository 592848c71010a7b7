#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "openfloor/result.hpp"

namespace openfloor {

// Server-epoch milliseconds. Clients never supply authoritative times.
using TimeMs = std::int64_t;
using DurationMs = std::int64_t;

using AuctionId = std::string;
using SlotId = std::string;
using PersonId = std::string;
using CompanyId = std::string;

// Integer minor units (cents). No floating point anywhere near prices.
struct Money {
    std::int64_t amount = 0;
    std::string currency;

    bool operator==(const Money&) const = default;
};

enum class Format { English, Reverse };

enum class Role { Auctioneer, Bidder, Originator, Observer };

std::string_view to_string(Format f);
std::string_view to_string(Role r);
std::optional<Format> parse_format(std::string_view s);
std::optional<Role> parse_role(std::string_view s);

struct Quantity {
    double value = 0;
    std::string unit;

    bool operator==(const Quantity&) const = default;
};

struct Slot {
    SlotId slot_id;
    std::string description;
    Quantity quantity;
    std::optional<Money> start_price;

    bool operator==(const Slot&) const = default;
};

// Decaying reaction windows: 3 min down to 5 s, last entry repeats.
inline const std::vector<DurationMs> kDefaultExtensionSchedule = {
    180000, 120000, 60000, 30000, 15000, 10000, 5000};
inline constexpr DurationMs kDefaultClosingGraceMs = 3000;

struct AuctionConfig {
    AuctionId auction_id;
    std::string title;
    Format format = Format::Reverse;
    std::string currency;
    TimeMs start_time = 0;
    DurationMs main_duration_ms = 0;
    DurationMs hard_cap_ms = 0;  // total length including extensions
    std::vector<DurationMs> extension_schedule = kDefaultExtensionSchedule;
    DurationMs closing_grace_ms = kDefaultClosingGraceMs;
    std::int64_t tick_size = 1;  // minor units, auction currency
    std::optional<Money> historic_value;
    std::optional<Money> target_value;
    std::vector<Slot> slots;

    const Slot* find_slot(std::string_view id) const;
    // g(k), with the last schedule entry repeating.
    DurationMs extension_window(std::int64_t k) const;

    bool operator==(const AuctionConfig&) const = default;
};

struct Company {
    CompanyId company_id;
    std::string name;

    bool operator==(const Company&) const = default;
};

struct Person {
    PersonId person_id;
    std::string name;
    CompanyId company_id;
    std::string credential_hash;

    bool operator==(const Person&) const = default;
};

struct AccessRight {
    PersonId person_id;
    AuctionId auction_id;
    std::optional<SlotId> slot_id;  // absent = all slots
    Role role = Role::Observer;
    std::optional<TimeMs> valid_from;
    std::optional<TimeMs> valid_until;

    bool covers_slot(std::string_view slot) const { return !slot_id || *slot_id == slot; }
    bool valid_at(TimeMs t) const {
        return (!valid_from || t >= *valid_from) && (!valid_until || t < *valid_until);
    }

    bool operator==(const AccessRight&) const = default;
};

// Invite -> sign contract -> (password delivered) -> admit workflow.
struct ParticipantStatus {
    PersonId person_id;
    AuctionId auction_id;
    bool invited = false;
    bool contract_signed = false;
    bool password_delivered = false;
    bool admitted = false;
    bool banned = false;

    bool operator==(const ParticipantStatus&) const = default;
};

struct Bid {
    std::int64_t bid_id = 0;
    AuctionId auction_id;
    SlotId slot_id;
    PersonId bidder;
    Money amount;
    TimeMs server_time = 0;
    std::int64_t seq = 0;  // seq of the BidPlaced message
    bool voided = false;

    bool operator==(const Bid&) const = default;
};

enum class Phase { Scheduled, Open, Extension, Closing, Closed, Cancelled };

std::string_view to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view s);
inline bool is_terminal(Phase p) { return p == Phase::Closed || p == Phase::Cancelled; }
inline bool is_biddable(Phase p) {
    return p == Phase::Open || p == Phase::Extension || p == Phase::Closing;
}

// Message payloads. Every state change visible to clients is one of these.
namespace msg {

struct BidPlaced {
    Bid bid;
    bool operator==(const BidPlaced&) const = default;
};
struct StateChanged {
    Phase from = Phase::Scheduled;
    Phase to = Phase::Scheduled;
    bool operator==(const StateChanged&) const = default;
};
struct ExtensionGranted {
    TimeMs new_end = 0;
    std::int64_t extension_count = 0;
    std::int64_t trigger_bid_id = 0;
    bool operator==(const ExtensionGranted&) const = default;
};
struct ClosingAnnounced {
    TimeMs announced_end = 0;
    TimeMs grace_until = 0;
    bool operator==(const ClosingAnnounced&) const = default;
};
struct Closed {
    TimeMs close_time = 0;
    bool hard_cap = false;
    bool operator==(const Closed&) const = default;
};
struct ParticipantInvited {
    PersonId person_id;
    CompanyId company_id;
    std::string name;
    Role role = Role::Observer;
    std::optional<SlotId> slot_id;
    bool operator==(const ParticipantInvited&) const = default;
};
struct ContractSigned {
    PersonId person_id;
    bool operator==(const ContractSigned&) const = default;
};
struct PasswordDelivered {
    PersonId person_id;
    bool operator==(const PasswordDelivered&) const = default;
};
struct ParticipantAdmitted {
    PersonId person_id;
    bool operator==(const ParticipantAdmitted&) const = default;
};
struct ParticipantBanned {
    PersonId person_id;
    std::vector<std::int64_t> voided_bid_ids;
    bool operator==(const ParticipantBanned&) const = default;
};
struct AuctionCancelled {
    bool operator==(const AuctionCancelled&) const = default;
};
struct AuctionProlonged {
    DurationMs delta_ms = 0;
    TimeMs new_end = 0;
    TimeMs new_hard_end = 0;
    Phase phase = Phase::Open;
    bool operator==(const AuctionProlonged&) const = default;
};

}  // namespace msg

using MessagePayload =
    std::variant<msg::BidPlaced, msg::StateChanged, msg::ExtensionGranted, msg::ClosingAnnounced,
                 msg::Closed, msg::ParticipantBanned, msg::ParticipantAdmitted,
                 msg::AuctionCancelled, msg::AuctionProlonged, msg::ParticipantInvited,
                 msg::ContractSigned, msg::PasswordDelivered>;

enum class MessageKind {
    BidPlaced,
    StateChanged,
    ExtensionGranted,
    ClosingAnnounced,
    Closed,
    ParticipantBanned,
    ParticipantAdmitted,
    AuctionCancelled,
    AuctionProlonged,
    ParticipantInvited,
    ContractSigned,
    PasswordDelivered,
};

std::string_view to_string(MessageKind k);
std::optional<MessageKind> parse_message_kind(std::string_view s);

struct Message {
    std::int64_t seq = 0;  // per auction, gapless from 1
    TimeMs server_time = 0;
    MessagePayload payload;

    MessageKind kind() const { return static_cast<MessageKind>(payload.index()); }
    template <class P>
    const P* as() const {
        return std::get_if<P>(&payload);
    }

    bool operator==(const Message&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

enum class ConfigViolation {
    MissingAuctionId,
    InvalidCurrency,
    NonPositiveMainDuration,
    NonPositiveHardCap,
    MainExceedsHardCap,
    EmptyExtensionSchedule,
    NonPositiveExtension,
    ExtensionScheduleIncreasing,
    NonPositiveClosingGrace,
    NonPositiveTickSize,
    ReferencePriceOnEnglish,
    NonPositivePrice,
    CurrencyMismatch,
    TargetNotBelowHistoric,
    NoSlots,
    DuplicateSlotId,
    NonPositiveQuantity,
};

std::string_view to_string(ConfigViolation v);

// Empty iff every AuctionConfig invariant holds.
std::vector<ConfigViolation> validate_config(const AuctionConfig& config);

enum class AccessError {
    SecondBidderSameCompany,
    RoleConflict,
    NotAdmitted,
    UnknownReference,
};

std::string_view to_string(AccessError e);

using CompanyLookup = std::function<std::optional<CompanyId>(const PersonId&)>;

// Records `right` into `rights`. One role per (person, auction); at most one
// admitted bidder per company; bidder rights require admission.
Result<std::vector<AccessRight>, AccessError> grant_access(
    const AccessRight& right, std::span<const AccessRight> rights,
    std::span<const ParticipantStatus> statuses, const CompanyLookup& company_of);

}  // namespace openfloor
