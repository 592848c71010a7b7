#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "openfloor/engine.hpp"
#include "openfloor/json.hpp"
#include "openfloor/result.hpp"

namespace openfloor {

enum class ViewError { NoAccessRight, NoReferenceAvailable, UnknownSlot };
std::string_view to_string(ViewError e);

// Stable anonymous labels "Bidder-<n>", numbered by first-bid order across the
// whole auction. Voided bids still count so labels never shift after a ban.
std::map<PersonId, std::string> pseudonyms(const AuctionState& state);

// Labels and rankings of one state version, shared by every viewer's
// projection. Building it once per version keeps polls cheap.
struct ViewIndex {
    std::map<PersonId, std::string> labels;
    std::map<SlotId, std::vector<RankingEntry>> rankings;

    static ViewIndex build(const AuctionState& state);
};

// Fixed-point percentage with two decimals.
struct Percent {
    std::int64_t hundredths = 0;
    std::string str() const;  // "75.00"
    bool operator==(const Percent&) const = default;
};

// round-half-up(100 * amount / reference), two decimals.
Percent percent_of(std::int64_t amount, std::int64_t reference);

// Reference for observer percentages: historic value, else the slot's start
// price, else the first non-voided bid on the slot.
Result<std::int64_t, ViewError> reference_amount(const AuctionState& state, const SlotId& slot);

Result<Percent, ViewError> percent_of_reference(const AuctionState& state, const SlotId& slot,
                                                std::int64_t amount);

struct ViewEntry {
    int rank = 0;
    std::string label;
    bool own = false;
    std::optional<Money> amount;          // all roles but Observer
    std::optional<std::string> percent;   // Observer only, e.g. "75.00%"
    std::optional<PersonId> person_id;    // Auctioneer only
};

struct SlotView {
    SlotId slot_id;
    std::string description;
    std::vector<ViewEntry> entries;
    std::optional<int> own_rank;
    int competitor_count = 0;
};

struct Identity {
    PersonId person_id;
    std::string name;
    CompanyId company_id;
};

struct AuctionView {
    AuctionId auction_id;
    std::string title;
    Format format = Format::Reverse;
    Role viewer_role = Role::Observer;
    Phase phase = Phase::Scheduled;
    std::int64_t extension_count = 0;
    TimeMs current_end = 0;
    TimeMs hard_end = 0;
    TimeMs server_time = 0;
    std::optional<TimeMs> grace_until;
    std::int64_t tick_size = 0;  // omitted for observers
    std::optional<Money> historic_value;
    std::optional<Money> target_value;
    std::vector<SlotView> slots;
    std::optional<std::map<std::string, Identity>> identity_map;  // Auctioneer only
};

void to_json(json& j, const AuctionView& v);

// Role-redacted projection. Fails when the viewer does not currently hold
// `role` for this auction.
// `index`, when given, must have been built from `state`.
Result<AuctionView, ViewError> render_view(const AuctionState& state, const PersonId& viewer,
                                           Role role, TimeMs server_time,
                                           const ViewIndex* index = nullptr);

// The role's view of individual messages. Auctioneers see the canonical
// form; everyone else sees pseudonyms, and observers see percentages. Bids on
// slots outside the viewer's rights keep their seq but lose their content.
class MessageRedactor {
public:
    MessageRedactor(const AuctionState& state, PersonId viewer, Role role, TimeMs now,
                    const ViewIndex* index = nullptr);
    MessageRedactor(const MessageRedactor&) = delete;
    MessageRedactor& operator=(const MessageRedactor&) = delete;

    json operator()(const Message& message) const;

private:
    json person_fields(const PersonId& person) const;
    json money_value(const SlotId& slot, const Money& amount) const;

    const AuctionState& state_;
    PersonId viewer_;
    Role role_;
    std::map<PersonId, std::string> own_labels_;
    const std::map<PersonId, std::string>* labels_;
    std::vector<SlotId> visible_;
    std::map<SlotId, std::int64_t> references_;
};

// Slots the viewer may see under its access rights.
std::vector<SlotId> visible_slots(const AuctionState& state, const PersonId& viewer, Role role,
                                  TimeMs now);

}  // namespace openfloor
