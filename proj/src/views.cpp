#include "openfloor/views.hpp"

#include <algorithm>
#include <cstdio>
#include <string_view>
#include <unordered_set>

namespace openfloor {

namespace {

const AccessRight* find_right(const AuctionState& s, const PersonId& viewer, Role role, TimeMs now) {
    for (const auto& r : s.rights) {
        if (r.person_id == viewer && r.role == role && r.valid_at(now)) return &r;
    }
    return nullptr;
}

bool holds_role(const AuctionState& s, const PersonId& viewer, Role role, TimeMs now) {
    const auto* p = s.participant(viewer);
    if (!p || p->role != role || p->status.banned) return false;
    if (role == Role::Bidder && !p->status.admitted) return false;
    return find_right(s, viewer, role, now) != nullptr;
}

int competitor_count(const AuctionState& s, const SlotId& slot) {
    int n = 0;
    for (const auto& [id, p] : s.participants) {
        if (p.role != Role::Bidder || !p.status.admitted || p.status.banned) continue;
        bool covered = std::any_of(s.rights.begin(), s.rights.end(), [&](const AccessRight& r) {
            return r.person_id == id && r.role == Role::Bidder && r.covers_slot(slot);
        });
        if (covered) ++n;
    }
    return n;
}

}  // namespace

std::string_view to_string(ViewError e) {
    switch (e) {
    case ViewError::NoAccessRight: return "NoAccessRight";
    case ViewError::NoReferenceAvailable: return "NoReferenceAvailable";
    case ViewError::UnknownSlot: return "UnknownSlot";
    }
    return "Unknown";
}

std::map<PersonId, std::string> pseudonyms(const AuctionState& state) {
    std::map<PersonId, std::string> out;
    std::unordered_set<std::string_view> seen;
    // Once every bidder has a label the remaining bids cannot add one.
    const auto bidders = static_cast<std::size_t>(std::count_if(
        state.participants.begin(), state.participants.end(),
        [](const auto& p) { return p.second.role == Role::Bidder; }));
    for (const auto& b : state.bids) {
        if (seen.size() >= bidders) break;
        if (seen.insert(b.bidder).second) out.emplace(b.bidder, "Bidder-" + std::to_string(seen.size()));
    }
    return out;
}

ViewIndex ViewIndex::build(const AuctionState& state) {
    ViewIndex out;
    out.labels = pseudonyms(state);
    for (const auto& slot : state.config.slots)
        out.rankings[slot.slot_id] = current_ranking(state, slot.slot_id).value();
    return out;
}

std::string Percent::str() const {
    const bool negative = hundredths < 0;
    const std::int64_t mag = negative ? -hundredths : hundredths;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%lld.%02lld", negative ? "-" : "",
                  static_cast<long long>(mag / 100), static_cast<long long>(mag % 100));
    return buf;
}

Percent percent_of(std::int64_t amount, std::int64_t reference) {
    // floor(10000 * amount / reference + 1/2), exact in 128-bit integers.
    __int128 num = static_cast<__int128>(amount) * 20000 + reference;
    __int128 den = static_cast<__int128>(reference) * 2;
    if (den < 0) num = -num, den = -den;
    __int128 q = num / den;
    if (num % den != 0 && num < 0) --q;
    return Percent{static_cast<std::int64_t>(q)};
}

Result<std::int64_t, ViewError> reference_amount(const AuctionState& state, const SlotId& slot) {
    const Slot* def = state.config.find_slot(slot);
    if (!def) return ViewError::UnknownSlot;
    if (state.config.historic_value) return state.config.historic_value->amount;
    if (def->start_price) return def->start_price->amount;
    for (const auto& b : state.bids) {
        if (b.slot_id == slot && !b.voided) return b.amount.amount;
    }
    return ViewError::NoReferenceAvailable;
}

Result<Percent, ViewError> percent_of_reference(const AuctionState& state, const SlotId& slot,
                                                std::int64_t amount) {
    auto ref = reference_amount(state, slot);
    if (!ref) return ref.error();
    return percent_of(amount, ref.value());
}

std::vector<SlotId> visible_slots(const AuctionState& state, const PersonId& viewer, Role role,
                                  TimeMs now) {
    std::vector<SlotId> out;
    for (const auto& slot : state.config.slots) {
        bool covered = std::any_of(state.rights.begin(), state.rights.end(), [&](const AccessRight& r) {
            return r.person_id == viewer && r.role == role && r.valid_at(now) &&
                   r.covers_slot(slot.slot_id);
        });
        if (covered) out.push_back(slot.slot_id);
    }
    return out;
}

Result<AuctionView, ViewError> render_view(const AuctionState& state, const PersonId& viewer,
                                           Role role, TimeMs server_time, const ViewIndex* index) {
    if (!holds_role(state, viewer, role, server_time)) return ViewError::NoAccessRight;

    const auto& cfg = state.config;
    const bool monetary = role != Role::Observer;
    std::optional<ViewIndex> own_index;
    if (!index) index = &own_index.emplace(ViewIndex::build(state));
    const auto& labels = index->labels;

    AuctionView v;
    v.auction_id = cfg.auction_id;
    v.title = cfg.title;
    v.format = cfg.format;
    v.viewer_role = role;
    v.phase = state.phase;
    v.extension_count = state.extension_count;
    v.current_end = state.current_end;
    v.hard_end = state.hard_end;
    v.server_time = server_time;
    if (state.phase == Phase::Closing) v.grace_until = state.grace_deadline();
    if (monetary) v.tick_size = cfg.tick_size;
    // Reference prices belong to the buying side.
    if (role == Role::Auctioneer || role == Role::Originator) {
        v.historic_value = cfg.historic_value;
        v.target_value = cfg.target_value;
    }

    for (const auto& slot_id : visible_slots(state, viewer, role, server_time)) {
        const Slot* def = cfg.find_slot(slot_id);
        SlotView sv;
        sv.slot_id = slot_id;
        sv.description = def->description;
        sv.competitor_count = competitor_count(state, slot_id);

        auto found = index->rankings.find(slot_id);
        if (found == index->rankings.end()) return ViewError::UnknownSlot;
        const auto& ranking = found->second;
        std::optional<std::int64_t> reference;
        if (!monetary && !ranking.empty()) {
            auto ref = reference_amount(state, slot_id);
            if (!ref) return ref.error();
            reference = ref.value();
        }
        for (const auto& e : ranking) {
            ViewEntry ve;
            ve.rank = e.rank;
            ve.label = labels.at(e.bidder);
            ve.own = e.bidder == viewer;
            if (monetary) {
                ve.amount = Money{e.best_amount, cfg.currency};
            } else {
                ve.percent = percent_of(e.best_amount, *reference).str() + "%";
            }
            if (role == Role::Auctioneer) ve.person_id = e.bidder;
            if (ve.own && role == Role::Bidder) sv.own_rank = e.rank;
            sv.entries.push_back(std::move(ve));
        }
        v.slots.push_back(std::move(sv));
    }

    if (role == Role::Auctioneer) {
        std::map<std::string, Identity> ids;
        for (const auto& [person, label] : labels) {
            const auto* p = state.participant(person);
            ids[label] = Identity{person, p ? p->person.name : "", p ? p->person.company_id : ""};
        }
        v.identity_map = std::move(ids);
    }
    return v;
}

void to_json(json& j, const AuctionView& v) {
    json slots = json::array();
    for (const auto& s : v.slots) {
        json entries = json::array();
        for (const auto& e : s.entries) {
            // Assigned key by key: brace-initialised objects cost several
            // temporaries each, and polls build one entry per bidder.
            json je = json::object();
            je["rank"] = e.rank;
            je["label"] = e.label;
            je["own"] = e.own;
            if (e.amount) je["value"] = *e.amount;
            if (e.percent) je["value"] = *e.percent;
            if (e.person_id) je["person_id"] = *e.person_id;
            entries.push_back(std::move(je));
        }
        json js{{"slot_id", s.slot_id},
                {"description", s.description},
                {"entries", std::move(entries)},
                {"competitor_count", s.competitor_count}};
        if (s.own_rank) js["own_rank"] = *s.own_rank;
        slots.push_back(std::move(js));
    }
    j = json{{"auction_id", v.auction_id},
             {"title", v.title},
             {"format", v.format},
             {"viewer_role", v.viewer_role},
             {"phase", v.phase},
             {"extension_count", v.extension_count},
             {"current_end", v.current_end},
             {"hard_end", v.hard_end},
             {"server_time", v.server_time},
             {"slots", std::move(slots)}};
    if (v.grace_until) j["grace_until"] = *v.grace_until;
    if (v.viewer_role != Role::Observer) j["tick_size"] = v.tick_size;
    if (v.historic_value) j["historic_value"] = *v.historic_value;
    if (v.target_value) j["target_value"] = *v.target_value;
    if (v.identity_map) {
        json ids = json::object();
        for (const auto& [label, id] : *v.identity_map) {
            ids[label] = json{{"person_id", id.person_id}, {"name", id.name}, {"company_id", id.company_id}};
        }
        j["identity_map"] = std::move(ids);
    }
}

// ---------------------------------------------------------------------------

MessageRedactor::MessageRedactor(const AuctionState& state, PersonId viewer, Role role, TimeMs now,
                                 const ViewIndex* index)
    : state_(state), viewer_(std::move(viewer)), role_(role), labels_(&own_labels_) {
    if (role_ == Role::Auctioneer) return;
    if (index) labels_ = &index->labels;
    else own_labels_ = pseudonyms(state_);
    visible_ = visible_slots(state_, viewer_, role_, now);
    if (role_ == Role::Observer) {
        for (const auto& slot : visible_) {
            if (auto ref = reference_amount(state_, slot)) references_[slot] = ref.value();
        }
    }
}

json MessageRedactor::person_fields(const PersonId& person) const {
    json j = json::object();
    if (auto it = labels_->find(person); it != labels_->end()) j["label"] = it->second;
    j["own"] = person == viewer_;
    return j;
}

json MessageRedactor::money_value(const SlotId& slot, const Money& amount) const {
    if (role_ != Role::Observer) return amount;
    auto it = references_.find(slot);
    if (it == references_.end()) return nullptr;
    return percent_of(amount.amount, it->second).str() + "%";
}

json MessageRedactor::operator()(const Message& m) const {
    if (role_ == Role::Auctioneer) return m;

    json out = json::object();
    out["seq"] = m.seq;
    out["server_time"] = m.server_time;
    out["kind"] = to_string(m.kind());
    json payload = std::visit(
        [&](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, msg::BidPlaced>) {
                const Bid& b = p.bid;
                if (std::find(visible_.begin(), visible_.end(), b.slot_id) == visible_.end())
                    return json{{"hidden", true}};
                json bid = person_fields(b.bidder);
                bid["bid_id"] = b.bid_id;
                bid["slot_id"] = b.slot_id;
                bid["server_time"] = b.server_time;
                bid["seq"] = b.seq;
                bid["value"] = money_value(b.slot_id, b.amount);
                return json{{"bid", std::move(bid)}};
            } else if constexpr (std::is_same_v<T, msg::ParticipantInvited>) {
                json j = person_fields(p.person_id);
                j["role"] = p.role;
                if (p.slot_id) j["slot_id"] = *p.slot_id;
                return j;
            } else if constexpr (std::is_same_v<T, msg::ParticipantBanned>) {
                json j = person_fields(p.person_id);
                j["voided_bid_ids"] = p.voided_bid_ids;
                return j;
            } else if constexpr (std::is_same_v<T, msg::ParticipantAdmitted> ||
                                 std::is_same_v<T, msg::ContractSigned> ||
                                 std::is_same_v<T, msg::PasswordDelivered>) {
                return person_fields(p.person_id);
            } else {
                return payload_to_json(m.payload);
            }
        },
        m.payload);
    out["payload"] = std::move(payload);
    return out;
}

}  // namespace openfloor
