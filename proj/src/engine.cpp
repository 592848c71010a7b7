#include "openfloor/engine.hpp"

#include <openssl/sha.h>

#include <array>
#include <cstdio>
#include <string_view>
#include <unordered_map>

#include "openfloor/json.hpp"

namespace openfloor {

namespace {

void emit(AuctionState& s, TimeMs now, MessagePayload payload, std::vector<Message>& out) {
    Message m{s.latest_seq() + 1, now, std::move(payload)};
    s.messages.push_back(m);
    out.push_back(std::move(m));
}

EngineError from_access_error(AccessError e) {
    switch (e) {
    case AccessError::SecondBidderSameCompany: return EngineError::SecondBidderSameCompany;
    case AccessError::RoleConflict: return EngineError::RoleConflict;
    case AccessError::NotAdmitted: return EngineError::NotAdmitted;
    case AccessError::UnknownReference: return EngineError::UnknownReference;
    }
    return EngineError::UnknownReference;
}

CompanyLookup company_lookup(const AuctionState& s) {
    return [&s](const PersonId& id) -> std::optional<CompanyId> {
        if (const auto* p = s.participant(id)) return p->person.company_id;
        return std::nullopt;
    };
}

Result<Ok, EngineError> record_right(AuctionState& s, const AccessRight& right) {
    auto statuses = s.statuses();
    auto granted = grant_access(right, s.rights, statuses, company_lookup(s));
    if (!granted) return from_access_error(granted.error());
    s.rights = std::move(granted).value();
    return Ok{};
}

const Bid* latest_own_bid(const AuctionState& s, const PersonId& person, const SlotId& slot) {
    for (auto it = s.bids.rbegin(); it != s.bids.rend(); ++it) {
        if (it->bidder == person && it->slot_id == slot && !it->voided) return &*it;
    }
    return nullptr;
}

Result<Ok, EngineError> invite(AuctionState& s, const cmd::Invite& c, TimeMs now,
                               std::vector<Message>& out) {
    if (is_terminal(s.phase)) return EngineError::AlreadyClosed;
    if (c.person.person_id.empty() || c.person.company_id.empty())
        return EngineError::UnknownReference;
    if (c.slot_id && !s.config.find_slot(*c.slot_id)) return EngineError::UnknownSlot;
    if (const auto* existing = s.participant(c.person.person_id)) {
        return existing->role == c.role ? EngineError::AlreadyExists : EngineError::RoleConflict;
    }
    if (c.role == Role::Auctioneer && s.has_auctioneer())
        return EngineError::AuctioneerAlreadyAssigned;

    Participant p;
    p.person = c.person;
    p.role = c.role;
    p.slot_id = c.slot_id;
    p.status.person_id = c.person.person_id;
    p.status.auction_id = s.config.auction_id;
    p.status.invited = true;
    s.participants[c.person.person_id] = p;

    // Non-bidding roles get their access right immediately; bidders only on
    // admission, after the contract has been signed.
    if (c.role != Role::Bidder) {
        AccessRight right{c.person.person_id, s.config.auction_id, c.slot_id, c.role,
                          c.valid_from, c.valid_until};
        if (auto r = record_right(s, right); !r) {
            s.participants.erase(c.person.person_id);
            return r.error();
        }
    }
    emit(s, now,
         msg::ParticipantInvited{c.person.person_id, c.person.company_id, c.person.name, c.role,
                                 c.slot_id},
         out);
    return Ok{};
}

Result<Ok, EngineError> admit(AuctionState& s, const PersonId& person, TimeMs now,
                              std::vector<Message>& out) {
    if (is_terminal(s.phase)) return EngineError::AlreadyClosed;
    auto it = s.participants.find(person);
    if (it == s.participants.end()) return EngineError::NotFound;
    auto& p = it->second;
    if (p.role != Role::Bidder) return EngineError::NotABidder;
    if (p.status.banned) return EngineError::Banned;
    if (p.status.admitted) return EngineError::AlreadyExists;
    if (!p.status.invited || !p.status.contract_signed) return EngineError::NotSigned;

    p.status.admitted = true;
    AccessRight right{person, s.config.auction_id, p.slot_id, Role::Bidder, std::nullopt,
                      std::nullopt};
    if (auto r = record_right(s, right); !r) {
        p.status.admitted = false;
        return r.error();
    }
    emit(s, now, msg::ParticipantAdmitted{person}, out);
    return Ok{};
}

template <class Flag>
Result<Ok, EngineError> record_flag(AuctionState& s, const PersonId& person, TimeMs now,
                                    std::vector<Message>& out, bool ParticipantStatus::*field,
                                    Flag message) {
    if (is_terminal(s.phase)) return EngineError::AlreadyClosed;
    auto it = s.participants.find(person);
    if (it == s.participants.end()) return EngineError::NotFound;
    if (it->second.status.*field) return EngineError::AlreadyExists;
    it->second.status.*field = true;
    emit(s, now, std::move(message), out);
    return Ok{};
}

}  // namespace

// ---------------------------------------------------------------------------

const Participant* AuctionState::participant(const PersonId& id) const {
    auto it = participants.find(id);
    return it == participants.end() ? nullptr : &it->second;
}

std::vector<ParticipantStatus> AuctionState::statuses() const {
    std::vector<ParticipantStatus> out;
    out.reserve(participants.size());
    for (const auto& [_, p] : participants) out.push_back(p.status);
    return out;
}

bool AuctionState::has_auctioneer() const {
    for (const auto& [_, p] : participants)
        if (p.role == Role::Auctioneer) return true;
    return false;
}

std::string_view command_name(const CommandBody& body) {
    static constexpr std::array<std::string_view, 10> names = {
        "CreateAuction", "PlaceBid", "Tick",  "Invite",  "RecordContract",
        "RecordPasswordDelivered", "Admit", "Ban", "Prolong", "Cancel"};
    return names[body.index()];
}

std::string_view to_string(RejectReason r) {
    switch (r) {
    case RejectReason::IllegalPhase: return "IllegalPhase";
    case RejectReason::AuctionClosed: return "AuctionClosed";
    case RejectReason::UnknownSlot: return "UnknownSlot";
    case RejectReason::NotABidder: return "NotABidder";
    case RejectReason::Banned: return "Banned";
    case RejectReason::NotAdmitted: return "NotAdmitted";
    case RejectReason::NonPositiveAmount: return "NonPositiveAmount";
    case RejectReason::ClosingCursorTooNew: return "ClosingCursorTooNew";
    case RejectReason::AboveStartPrice: return "AboveStartPrice";
    case RejectReason::BelowStartPrice: return "BelowStartPrice";
    case RejectReason::WrongDirection: return "WrongDirection";
    case RejectReason::InsufficientImprovement: return "InsufficientImprovement";
    }
    return "Unknown";
}

std::optional<RejectReason> parse_reject_reason(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(RejectReason::InsufficientImprovement); ++i) {
        if (to_string(static_cast<RejectReason>(i)) == s) return static_cast<RejectReason>(i);
    }
    return std::nullopt;
}

std::string_view to_string(EngineError e) {
    switch (e) {
    case EngineError::IllegalPhase: return "IllegalPhase";
    case EngineError::UnknownReference: return "UnknownReference";
    case EngineError::AlreadyClosed: return "AlreadyClosed";
    case EngineError::AlreadyExists: return "AlreadyExists";
    case EngineError::NotFound: return "NotFound";
    case EngineError::NotSigned: return "NotSigned";
    case EngineError::NotABidder: return "NotABidder";
    case EngineError::Banned: return "Banned";
    case EngineError::AlreadyBanned: return "AlreadyBanned";
    case EngineError::CannotBanAuctioneer: return "CannotBanAuctioneer";
    case EngineError::RoleConflict: return "RoleConflict";
    case EngineError::SecondBidderSameCompany: return "SecondBidderSameCompany";
    case EngineError::NotAdmitted: return "NotAdmitted";
    case EngineError::AuctioneerAlreadyAssigned: return "AuctioneerAlreadyAssigned";
    case EngineError::NotClosed: return "NotClosed";
    case EngineError::UnknownSlot: return "UnknownSlot";
    case EngineError::TimeRegression: return "TimeRegression";
    case EngineError::InvalidConfig: return "InvalidConfig";
    case EngineError::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

std::string_view to_string(Binding b) { return b == Binding::Binding ? "Binding" : "FreeChoice"; }

// ---------------------------------------------------------------------------

Result<Applied, EngineError> create_auction(const cmd::CreateAuction& c, TimeMs now) {
    if (!validate_config(c.config).empty()) return EngineError::InvalidConfig;
    if (c.auctioneer && c.auctioneer->person_id == c.originator.person_id)
        return EngineError::RoleConflict;

    Applied out;
    auto& s = out.state;
    s.config = c.config;
    s.phase = Phase::Scheduled;
    s.current_end = c.config.start_time + c.config.main_duration_ms;
    s.hard_end = c.config.start_time + c.config.hard_cap_ms;
    s.last_time = now;

    auto& emitted = out.effects.emitted;
    if (auto r = invite(s, cmd::Invite{c.originator, Role::Originator, {}, {}, {}}, now, emitted); !r)
        return r.error();
    if (c.auctioneer) {
        if (auto r = invite(s, cmd::Invite{*c.auctioneer, Role::Auctioneer, {}, {}, {}}, now, emitted); !r)
            return r.error();
    }
    return out;
}

bool tick_would_change(const AuctionState& s, TimeMs now) {
    switch (s.phase) {
    case Phase::Scheduled:
        return now >= s.hard_end || (now >= s.config.start_time && s.has_auctioneer());
    case Phase::Open:
    case Phase::Extension:
        return now >= s.hard_end || now >= s.current_end;
    case Phase::Closing:
        return now >= s.grace_deadline();
    case Phase::Closed:
    case Phase::Cancelled:
        return false;
    }
    return false;
}

void tick(AuctionState& s, TimeMs now, std::vector<Message>& out) {
    auto close = [&](bool hard_cap) {
        s.phase = Phase::Closed;
        s.close_time = now;
        s.closing_seq = 0;
        emit(s, now, msg::Closed{now, hard_cap}, out);
    };

    for (;;) {
        switch (s.phase) {
        case Phase::Closed:
        case Phase::Cancelled:
            return;
        case Phase::Scheduled:
            if (now >= s.hard_end) return close(true);
            if (now >= s.config.start_time && s.has_auctioneer()) {
                s.phase = Phase::Open;
                emit(s, now, msg::StateChanged{Phase::Scheduled, Phase::Open}, out);
                continue;
            }
            return;
        case Phase::Open:
        case Phase::Extension:
            // No grace at the definitive end.
            if (now >= s.hard_end) return close(true);
            if (now >= s.current_end) {
                s.phase = Phase::Closing;
                s.announced_end = s.current_end;
                emit(s, now, msg::ClosingAnnounced{s.announced_end, s.grace_deadline()}, out);
                s.closing_seq = s.latest_seq();
                continue;
            }
            return;
        case Phase::Closing:
            if (now >= s.hard_end) return close(true);
            if (now >= s.grace_deadline()) return close(false);
            return;
        }
    }
}

std::optional<TimeMs> maybe_extend(AuctionState& s, TimeMs now, std::int64_t trigger_bid_id,
                                   std::vector<Message>& out) {
    const DurationMs window = s.config.extension_window(s.extension_count);
    if (s.current_end - now >= window) return std::nullopt;

    s.current_end = std::max(s.current_end, std::min(now + window, s.hard_end));
    s.extension_count += 1;
    s.phase = Phase::Extension;
    s.closing_seq = 0;
    emit(s, now, msg::ExtensionGranted{s.current_end, s.extension_count, trigger_bid_id}, out);
    return s.current_end;
}

BidOutcome place_bid(AuctionState& s, const PersonId& person, const SlotId& slot,
                     std::int64_t amount, std::int64_t cursor_at_submit, TimeMs now,
                     std::vector<Message>& out) {
    if (s.phase == Phase::Scheduled) return Rejected{RejectReason::IllegalPhase};
    if (is_terminal(s.phase)) return Rejected{RejectReason::AuctionClosed};

    const Slot* slot_def = s.config.find_slot(slot);
    if (!slot_def) return Rejected{RejectReason::UnknownSlot};

    const Participant* p = s.participant(person);
    if (!p || p->role != Role::Bidder) return Rejected{RejectReason::NotABidder};
    if (p->status.banned) return Rejected{RejectReason::Banned};
    if (!p->status.admitted) return Rejected{RejectReason::NotAdmitted};
    bool has_right = std::any_of(s.rights.begin(), s.rights.end(), [&](const AccessRight& r) {
        return r.person_id == person && r.role == Role::Bidder && r.covers_slot(slot) &&
               r.valid_at(now);
    });
    if (!has_right) return Rejected{RejectReason::NotABidder};

    if (amount <= 0) return Rejected{RejectReason::NonPositiveAmount};

    // Phase 1 of the close: only bids sent before the client could have seen
    // the announcement are still honoured.
    if (s.phase == Phase::Closing) {
        if (cursor_at_submit >= s.closing_seq || now >= s.grace_deadline())
            return Rejected{RejectReason::ClosingCursorTooNew};
    }

    const bool reverse = s.config.format == Format::Reverse;
    if (const Bid* prev = latest_own_bid(s, person, slot)) {
        const std::int64_t improvement =
            reverse ? prev->amount.amount - amount : amount - prev->amount.amount;
        if (improvement <= 0) return Rejected{RejectReason::WrongDirection};
        if (improvement < s.config.tick_size) return Rejected{RejectReason::InsufficientImprovement};
    } else if (slot_def->start_price) {
        if (reverse && amount > slot_def->start_price->amount)
            return Rejected{RejectReason::AboveStartPrice};
        if (!reverse && amount < slot_def->start_price->amount)
            return Rejected{RejectReason::BelowStartPrice};
    }

    Bid bid;
    bid.bid_id = s.next_bid_id++;
    bid.auction_id = s.config.auction_id;
    bid.slot_id = slot;
    bid.bidder = person;
    bid.amount = Money{amount, s.config.currency};
    bid.server_time = now;
    bid.seq = s.latest_seq() + 1;
    s.bids.push_back(bid);
    emit(s, now, msg::BidPlaced{bid}, out);

    // A Closing auction always extends here, since current_end <= now.
    auto new_end = maybe_extend(s, now, bid.bid_id, out);

    int rank = 0;
    if (auto ranking = current_ranking(s, slot)) {
        for (const auto& e : ranking.value())
            if (e.bidder == person) rank = e.rank;
    }
    return Accepted{bid, rank, new_end};
}

Result<Ok, EngineError> ban_participant(AuctionState& s, const PersonId& person, TimeMs now,
                                        std::vector<Message>& out) {
    if (is_terminal(s.phase)) return EngineError::AlreadyClosed;
    auto it = s.participants.find(person);
    if (it == s.participants.end()) return EngineError::NotFound;
    auto& p = it->second;
    if (p.role == Role::Auctioneer) return EngineError::CannotBanAuctioneer;
    if (p.status.banned) return EngineError::AlreadyBanned;

    p.status.banned = true;
    p.status.admitted = false;
    std::vector<std::int64_t> voided;
    for (auto& b : s.bids) {
        if (b.bidder == person && !b.voided) {
            b.voided = true;
            voided.push_back(b.bid_id);
        }
    }
    // The end time is deliberately left where it is.
    emit(s, now, msg::ParticipantBanned{person, std::move(voided)}, out);
    return Ok{};
}

Result<Ok, EngineError> prolong(AuctionState& s, DurationMs delta_ms, TimeMs now,
                                std::vector<Message>& out) {
    if (is_terminal(s.phase)) return EngineError::AlreadyClosed;
    if (delta_ms <= 0) return EngineError::InvalidArgument;

    s.current_end += delta_ms;
    s.hard_end += delta_ms;
    if (s.phase == Phase::Closing && s.current_end > now) {
        s.phase = s.extension_count > 0 ? Phase::Extension : Phase::Open;
        s.closing_seq = 0;
    }
    emit(s, now, msg::AuctionProlonged{delta_ms, s.current_end, s.hard_end, s.phase}, out);
    return Ok{};
}

Result<Ok, EngineError> cancel(AuctionState& s, TimeMs now, std::vector<Message>& out) {
    if (is_terminal(s.phase)) return EngineError::AlreadyClosed;
    s.phase = Phase::Cancelled;
    s.close_time = now;
    s.closing_seq = 0;
    emit(s, now, msg::AuctionCancelled{}, out);
    return Ok{};
}

Result<Effects, EngineError> apply_in_place(AuctionState& state, const Command& command) {
    if (command.at < state.last_time) return EngineError::TimeRegression;
    if (std::holds_alternative<cmd::CreateAuction>(command.body)) return EngineError::AlreadyExists;

    const TimeMs now = command.at;

    // Bids and ticks cannot fail once time is valid, so they run in place.
    if (const auto* bid = std::get_if<cmd::PlaceBid>(&command.body)) {
        Effects fx;
        state.last_time = now;
        tick(state, now, fx.emitted);
        fx.outcome = place_bid(state, bid->person, bid->slot, bid->amount, bid->cursor_at_submit,
                               now, fx.emitted);
        return fx;
    }
    if (std::holds_alternative<cmd::Tick>(command.body)) {
        Effects fx;
        state.last_time = now;
        tick(state, now, fx.emitted);
        return fx;
    }

    // Admin commands are rare; run them on a copy so errors leave no trace.
    AuctionState work = state;
    Effects fx;
    work.last_time = now;
    tick(work, now, fx.emitted);

    auto& out = fx.emitted;
    Result<Ok, EngineError> r = std::visit(
        [&](const auto& c) -> Result<Ok, EngineError> {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, cmd::Invite>) {
                return invite(work, c, now, out);
            } else if constexpr (std::is_same_v<T, cmd::RecordContract>) {
                return record_flag(work, c.person, now, out, &ParticipantStatus::contract_signed,
                                   msg::ContractSigned{c.person});
            } else if constexpr (std::is_same_v<T, cmd::RecordPasswordDelivered>) {
                return record_flag(work, c.person, now, out, &ParticipantStatus::password_delivered,
                                   msg::PasswordDelivered{c.person});
            } else if constexpr (std::is_same_v<T, cmd::Admit>) {
                return admit(work, c.person, now, out);
            } else if constexpr (std::is_same_v<T, cmd::Ban>) {
                return ban_participant(work, c.person, now, out);
            } else if constexpr (std::is_same_v<T, cmd::Prolong>) {
                return prolong(work, c.delta_ms, now, out);
            } else if constexpr (std::is_same_v<T, cmd::Cancel>) {
                return cancel(work, now, out);
            } else {
                return EngineError::IllegalPhase;
            }
        },
        command.body);
    if (!r) return r.error();
    state = std::move(work);
    return fx;
}

Result<Applied, EngineError> apply(const AuctionState& state, const Command& command) {
    Applied out{state, {}};
    auto fx = apply_in_place(out.state, command);
    if (!fx) return fx.error();
    out.effects = std::move(fx).value();
    return out;
}

// ---------------------------------------------------------------------------

bool better_bid(Format format, std::int64_t a_amount, std::int64_t a_seq, std::int64_t b_amount,
                std::int64_t b_seq) {
    if (a_amount != b_amount)
        return format == Format::Reverse ? a_amount < b_amount : a_amount > b_amount;
    return a_seq < b_seq;
}

Result<std::vector<RankingEntry>, EngineError> current_ranking(const AuctionState& s,
                                                               const SlotId& slot) {
    if (!s.config.find_slot(slot)) return EngineError::UnknownSlot;
    const Format format = s.config.format;

    std::vector<RankingEntry> entries;
    std::unordered_map<std::string_view, std::size_t> index;  // bidder -> entry
    for (const auto& b : s.bids) {
        if (b.slot_id != slot || b.voided) continue;
        auto [it, fresh] = index.try_emplace(b.bidder, entries.size());
        if (fresh) {
            entries.push_back({b.bidder, b.amount.amount, b.seq, 0});
            continue;
        }
        auto& e = entries[it->second];
        if (better_bid(format, b.amount.amount, b.seq, e.best_amount, e.best_seq)) {
            e.best_amount = b.amount.amount;
            e.best_seq = b.seq;
        }
    }
    std::sort(entries.begin(), entries.end(), [format](const RankingEntry& a, const RankingEntry& b) {
        return better_bid(format, a.best_amount, a.best_seq, b.best_amount, b.best_seq);
    });
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i + 1);
    return entries;
}

Result<std::vector<SlotResult>, EngineError> determine_winners(const AuctionState& s) {
    if (!is_terminal(s.phase)) return EngineError::NotClosed;
    std::vector<SlotResult> out;
    for (const auto& slot : s.config.slots) {
        SlotResult r{slot.slot_id, std::nullopt};
        if (s.phase == Phase::Closed) {
            for (const auto& b : s.bids) {
                if (b.slot_id != slot.slot_id || b.voided) continue;
                if (!r.winner || better_bid(s.config.format, b.amount.amount, b.seq,
                                            r.winner->amount.amount, r.winner->seq))
                    r.winner = b;
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

Result<Binding, EngineError> binding_result(const AuctionState& s,
                                            const std::vector<SlotResult>& winners) {
    if (s.phase != Phase::Closed) return EngineError::NotClosed;
    if (s.config.format != Format::Reverse || !s.config.target_value) return Binding::FreeChoice;
    std::int64_t total = 0;
    for (const auto& w : winners) {
        // An unawarded slot means the target was not hit.
        if (!w.winner) return Binding::FreeChoice;
        total += w.winner->amount.amount;
    }
    return total <= s.config.target_value->amount ? Binding::Binding : Binding::FreeChoice;
}

std::string state_digest(const AuctionState& state) {
    const std::string bytes = nlohmann::json(state).dump();
    std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md.data());
    std::string hex;
    hex.reserve(md.size() * 2);
    char buf[3];
    for (unsigned char c : md) {
        std::snprintf(buf, sizeof buf, "%02x", c);
        hex += buf;
    }
    return hex;
}

}  // namespace openfloor
