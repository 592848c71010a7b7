#include "openfloor/domain.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace openfloor {

namespace {

template <class E, std::size_t N>
std::optional<E> parse_from(const std::array<std::string_view, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    return std::nullopt;
}

constexpr std::array<std::string_view, 2> kFormatNames = {"English", "Reverse"};
constexpr std::array<std::string_view, 4> kRoleNames = {"Auctioneer", "Bidder", "Originator",
                                                         "Observer"};
constexpr std::array<std::string_view, 6> kPhaseNames = {"Scheduled", "Open",   "Extension",
                                                          "Closing",   "Closed", "Cancelled"};
constexpr std::array<std::string_view, 12> kKindNames = {
    "BidPlaced",          "StateChanged",        "ExtensionGranted", "ClosingAnnounced",
    "Closed",             "ParticipantBanned",   "ParticipantAdmitted", "AuctionCancelled",
    "AuctionProlonged",   "ParticipantInvited",  "ContractSigned",   "PasswordDelivered"};

bool valid_currency_code(std::string_view c) {
    return c.size() == 3 &&
           std::all_of(c.begin(), c.end(), [](char ch) { return ch >= 'A' && ch <= 'Z'; });
}

}  // namespace

std::string_view to_string(Format f) { return kFormatNames[static_cast<std::size_t>(f)]; }
std::string_view to_string(Role r) { return kRoleNames[static_cast<std::size_t>(r)]; }
std::string_view to_string(Phase p) { return kPhaseNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(MessageKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<Format> parse_format(std::string_view s) { return parse_from<Format>(kFormatNames, s); }
std::optional<Role> parse_role(std::string_view s) { return parse_from<Role>(kRoleNames, s); }
std::optional<Phase> parse_phase(std::string_view s) { return parse_from<Phase>(kPhaseNames, s); }
std::optional<MessageKind> parse_message_kind(std::string_view s) {
    return parse_from<MessageKind>(kKindNames, s);
}

std::string_view to_string(ConfigViolation v) {
    switch (v) {
    case ConfigViolation::MissingAuctionId: return "MissingAuctionId";
    case ConfigViolation::InvalidCurrency: return "InvalidCurrency";
    case ConfigViolation::NonPositiveMainDuration: return "NonPositiveMainDuration";
    case ConfigViolation::NonPositiveHardCap: return "NonPositiveHardCap";
    case ConfigViolation::MainExceedsHardCap: return "MainExceedsHardCap";
    case ConfigViolation::EmptyExtensionSchedule: return "EmptyExtensionSchedule";
    case ConfigViolation::NonPositiveExtension: return "NonPositiveExtension";
    case ConfigViolation::ExtensionScheduleIncreasing: return "ExtensionScheduleIncreasing";
    case ConfigViolation::NonPositiveClosingGrace: return "NonPositiveClosingGrace";
    case ConfigViolation::NonPositiveTickSize: return "NonPositiveTickSize";
    case ConfigViolation::ReferencePriceOnEnglish: return "ReferencePriceOnEnglish";
    case ConfigViolation::NonPositivePrice: return "NonPositivePrice";
    case ConfigViolation::CurrencyMismatch: return "CurrencyMismatch";
    case ConfigViolation::TargetNotBelowHistoric: return "TargetNotBelowHistoric";
    case ConfigViolation::NoSlots: return "NoSlots";
    case ConfigViolation::DuplicateSlotId: return "DuplicateSlotId";
    case ConfigViolation::NonPositiveQuantity: return "NonPositiveQuantity";
    }
    return "Unknown";
}

std::string_view to_string(AccessError e) {
    switch (e) {
    case AccessError::SecondBidderSameCompany: return "SecondBidderSameCompany";
    case AccessError::RoleConflict: return "RoleConflict";
    case AccessError::NotAdmitted: return "NotAdmitted";
    case AccessError::UnknownReference: return "UnknownReference";
    }
    return "Unknown";
}

const Slot* AuctionConfig::find_slot(std::string_view id) const {
    auto it = std::find_if(slots.begin(), slots.end(), [&](const Slot& s) { return s.slot_id == id; });
    return it == slots.end() ? nullptr : &*it;
}

DurationMs AuctionConfig::extension_window(std::int64_t k) const {
    if (extension_schedule.empty()) return 0;
    auto last = static_cast<std::int64_t>(extension_schedule.size()) - 1;
    return extension_schedule[static_cast<std::size_t>(std::min(k, last))];
}

std::vector<ConfigViolation> validate_config(const AuctionConfig& c) {
    std::vector<ConfigViolation> out;
    auto flag = [&](ConfigViolation v) {
        if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    };

    if (c.auction_id.empty()) flag(ConfigViolation::MissingAuctionId);
    if (!valid_currency_code(c.currency)) flag(ConfigViolation::InvalidCurrency);
    if (c.main_duration_ms <= 0) flag(ConfigViolation::NonPositiveMainDuration);
    if (c.hard_cap_ms <= 0) flag(ConfigViolation::NonPositiveHardCap);
    if (c.main_duration_ms > c.hard_cap_ms) flag(ConfigViolation::MainExceedsHardCap);

    if (c.extension_schedule.empty()) flag(ConfigViolation::EmptyExtensionSchedule);
    for (std::size_t i = 0; i < c.extension_schedule.size(); ++i) {
        if (c.extension_schedule[i] <= 0) flag(ConfigViolation::NonPositiveExtension);
        if (i > 0 && c.extension_schedule[i] > c.extension_schedule[i - 1])
            flag(ConfigViolation::ExtensionScheduleIncreasing);
    }
    if (c.closing_grace_ms <= 0) flag(ConfigViolation::NonPositiveClosingGrace);
    if (c.tick_size <= 0) flag(ConfigViolation::NonPositiveTickSize);

    auto check_price = [&](const Money& m) {
        if (m.amount <= 0) flag(ConfigViolation::NonPositivePrice);
        if (m.currency != c.currency) flag(ConfigViolation::CurrencyMismatch);
    };
    if (c.format == Format::English && (c.historic_value || c.target_value))
        flag(ConfigViolation::ReferencePriceOnEnglish);
    if (c.historic_value) check_price(*c.historic_value);
    if (c.target_value) check_price(*c.target_value);
    if (c.historic_value && c.target_value && c.target_value->amount >= c.historic_value->amount)
        flag(ConfigViolation::TargetNotBelowHistoric);

    if (c.slots.empty()) flag(ConfigViolation::NoSlots);
    std::set<SlotId> seen;
    for (const auto& s : c.slots) {
        if (!seen.insert(s.slot_id).second) flag(ConfigViolation::DuplicateSlotId);
        if (!(s.quantity.value > 0)) flag(ConfigViolation::NonPositiveQuantity);
        if (s.start_price) check_price(*s.start_price);
    }
    return out;
}

Result<std::vector<AccessRight>, AccessError> grant_access(
    const AccessRight& right, std::span<const AccessRight> rights,
    std::span<const ParticipantStatus> statuses, const CompanyLookup& company_of) {
    auto company = company_of(right.person_id);
    if (!company || right.auction_id.empty()) return AccessError::UnknownReference;

    auto status_of = [&](const PersonId& p) -> const ParticipantStatus* {
        for (const auto& s : statuses)
            if (s.person_id == p && s.auction_id == right.auction_id) return &s;
        return nullptr;
    };

    for (const auto& r : rights) {
        if (r.auction_id != right.auction_id) continue;
        if (r.person_id == right.person_id && r.role != right.role) return AccessError::RoleConflict;
    }

    if (right.role == Role::Bidder) {
        const auto* own = status_of(right.person_id);
        if (!own || !own->admitted || own->banned) return AccessError::NotAdmitted;
        for (const auto& r : rights) {
            if (r.auction_id != right.auction_id || r.role != Role::Bidder) continue;
            if (r.person_id == right.person_id) continue;
            const auto* other = status_of(r.person_id);
            if (!other || !other->admitted) continue;
            if (company_of(r.person_id) == company) return AccessError::SecondBidderSameCompany;
        }
    }

    std::vector<AccessRight> out(rights.begin(), rights.end());
    if (std::find(out.begin(), out.end(), right) == out.end()) out.push_back(right);
    return out;
}

}  // namespace openfloor
