#include <stdexcept>

#include "openfloor/json.hpp"

namespace openfloor {

namespace {

template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->template get<T>();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->template get<T>();
}

template <class E, class Parse>
E parse_enum(const json& j, Parse parse, const char* what) {
    auto s = j.get<std::string>();
    auto v = parse(s);
    if (!v) throw std::invalid_argument(std::string("unknown ") + what + ": " + s);
    return *v;
}

}  // namespace

void to_json(json& j, const Money& v) {
    j = json::object();
    j["amount"] = v.amount;
    j["currency"] = v.currency;
}
void from_json(const json& j, Money& v) {
    j.at("amount").get_to(v.amount);
    j.at("currency").get_to(v.currency);
}

void to_json(json& j, Format v) { j = std::string(to_string(v)); }
void from_json(const json& j, Format& v) { v = parse_enum<Format>(j, parse_format, "format"); }
void to_json(json& j, Role v) { j = std::string(to_string(v)); }
void from_json(const json& j, Role& v) { v = parse_enum<Role>(j, parse_role, "role"); }
void to_json(json& j, Phase v) { j = std::string(to_string(v)); }
void from_json(const json& j, Phase& v) { v = parse_enum<Phase>(j, parse_phase, "phase"); }
void to_json(json& j, ConfigViolation v) { j = std::string(to_string(v)); }

void to_json(json& j, const Quantity& v) { j = json{{"value", v.value}, {"unit", v.unit}}; }
void from_json(const json& j, Quantity& v) {
    j.at("value").get_to(v.value);
    v.unit = get_or<std::string>(j, "unit", "");
}

void to_json(json& j, const Slot& v) {
    j = json{{"slot_id", v.slot_id}, {"description", v.description}, {"quantity", v.quantity}};
    put_opt(j, "start_price", v.start_price);
}
void from_json(const json& j, Slot& v) {
    j.at("slot_id").get_to(v.slot_id);
    v.description = get_or<std::string>(j, "description", "");
    j.at("quantity").get_to(v.quantity);
    v.start_price = get_opt<Money>(j, "start_price");
}

void to_json(json& j, const AuctionConfig& v) {
    j = json{{"auction_id", v.auction_id},
             {"title", v.title},
             {"format", v.format},
             {"currency", v.currency},
             {"start_time", v.start_time},
             {"main_duration_ms", v.main_duration_ms},
             {"hard_cap_ms", v.hard_cap_ms},
             {"extension_schedule", v.extension_schedule},
             {"closing_grace_ms", v.closing_grace_ms},
             {"tick_size", v.tick_size},
             {"slots", v.slots}};
    put_opt(j, "historic_value", v.historic_value);
    put_opt(j, "target_value", v.target_value);
}
void from_json(const json& j, AuctionConfig& v) {
    j.at("auction_id").get_to(v.auction_id);
    v.title = get_or<std::string>(j, "title", "");
    j.at("format").get_to(v.format);
    j.at("currency").get_to(v.currency);
    j.at("start_time").get_to(v.start_time);
    j.at("main_duration_ms").get_to(v.main_duration_ms);
    v.hard_cap_ms = get_or<DurationMs>(j, "hard_cap_ms", 2 * v.main_duration_ms);
    v.extension_schedule =
        get_or<std::vector<DurationMs>>(j, "extension_schedule", kDefaultExtensionSchedule);
    v.closing_grace_ms = get_or<DurationMs>(j, "closing_grace_ms", kDefaultClosingGraceMs);
    v.tick_size = get_or<std::int64_t>(j, "tick_size", 1);
    v.historic_value = get_opt<Money>(j, "historic_value");
    v.target_value = get_opt<Money>(j, "target_value");
    j.at("slots").get_to(v.slots);
}

void to_json(json& j, const Company& v) { j = json{{"company_id", v.company_id}, {"name", v.name}}; }
void from_json(const json& j, Company& v) {
    j.at("company_id").get_to(v.company_id);
    v.name = get_or<std::string>(j, "name", "");
}

void to_json(json& j, const Person& v) {
    j = json{{"person_id", v.person_id},
             {"name", v.name},
             {"company_id", v.company_id},
             {"credential_hash", v.credential_hash}};
}
void from_json(const json& j, Person& v) {
    j.at("person_id").get_to(v.person_id);
    v.name = get_or<std::string>(j, "name", "");
    j.at("company_id").get_to(v.company_id);
    v.credential_hash = get_or<std::string>(j, "credential_hash", "");
}

void to_json(json& j, const AccessRight& v) {
    j = json{{"person_id", v.person_id}, {"auction_id", v.auction_id}, {"role", v.role}};
    put_opt(j, "slot_id", v.slot_id);
    put_opt(j, "valid_from", v.valid_from);
    put_opt(j, "valid_until", v.valid_until);
}
void from_json(const json& j, AccessRight& v) {
    j.at("person_id").get_to(v.person_id);
    j.at("auction_id").get_to(v.auction_id);
    j.at("role").get_to(v.role);
    v.slot_id = get_opt<SlotId>(j, "slot_id");
    v.valid_from = get_opt<TimeMs>(j, "valid_from");
    v.valid_until = get_opt<TimeMs>(j, "valid_until");
}

void to_json(json& j, const ParticipantStatus& v) {
    j = json{{"person_id", v.person_id},
             {"auction_id", v.auction_id},
             {"invited", v.invited},
             {"contract_signed", v.contract_signed},
             {"password_delivered", v.password_delivered},
             {"admitted", v.admitted},
             {"banned", v.banned}};
}
void from_json(const json& j, ParticipantStatus& v) {
    j.at("person_id").get_to(v.person_id);
    j.at("auction_id").get_to(v.auction_id);
    j.at("invited").get_to(v.invited);
    j.at("contract_signed").get_to(v.contract_signed);
    j.at("password_delivered").get_to(v.password_delivered);
    j.at("admitted").get_to(v.admitted);
    j.at("banned").get_to(v.banned);
}

void to_json(json& j, const Bid& v) {
    // Bids and messages are encoded on every log append; key-by-key
    // assignment avoids the temporaries of a braced object.
    j = json::object();
    j["bid_id"] = v.bid_id;
    j["auction_id"] = v.auction_id;
    j["slot_id"] = v.slot_id;
    j["bidder"] = v.bidder;
    j["amount"] = v.amount;
    j["server_time"] = v.server_time;
    j["seq"] = v.seq;
    j["voided"] = v.voided;
}
void from_json(const json& j, Bid& v) {
    j.at("bid_id").get_to(v.bid_id);
    j.at("auction_id").get_to(v.auction_id);
    j.at("slot_id").get_to(v.slot_id);
    j.at("bidder").get_to(v.bidder);
    j.at("amount").get_to(v.amount);
    j.at("server_time").get_to(v.server_time);
    j.at("seq").get_to(v.seq);
    j.at("voided").get_to(v.voided);
}

json payload_to_json(const MessagePayload& payload) {
    return std::visit(
        [](const auto& p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, msg::BidPlaced>) {
                return json{{"bid", p.bid}};
            } else if constexpr (std::is_same_v<T, msg::StateChanged>) {
                return json{{"from", p.from}, {"to", p.to}};
            } else if constexpr (std::is_same_v<T, msg::ExtensionGranted>) {
                return json{{"new_end", p.new_end},
                            {"extension_count", p.extension_count},
                            {"trigger_bid_id", p.trigger_bid_id}};
            } else if constexpr (std::is_same_v<T, msg::ClosingAnnounced>) {
                return json{{"announced_end", p.announced_end}, {"grace_until", p.grace_until}};
            } else if constexpr (std::is_same_v<T, msg::Closed>) {
                return json{{"close_time", p.close_time}, {"hard_cap", p.hard_cap}};
            } else if constexpr (std::is_same_v<T, msg::ParticipantBanned>) {
                return json{{"person_id", p.person_id}, {"voided_bid_ids", p.voided_bid_ids}};
            } else if constexpr (std::is_same_v<T, msg::ParticipantInvited>) {
                json j{{"person_id", p.person_id},
                       {"company_id", p.company_id},
                       {"name", p.name},
                       {"role", p.role}};
                put_opt(j, "slot_id", p.slot_id);
                return j;
            } else if constexpr (std::is_same_v<T, msg::AuctionCancelled>) {
                return json::object();
            } else if constexpr (std::is_same_v<T, msg::AuctionProlonged>) {
                return json{{"delta_ms", p.delta_ms},
                            {"new_end", p.new_end},
                            {"new_hard_end", p.new_hard_end},
                            {"phase", p.phase}};
            } else {
                // ParticipantAdmitted, ContractSigned, PasswordDelivered
                return json{{"person_id", p.person_id}};
            }
        },
        payload);
}

MessagePayload payload_from_json(MessageKind kind, const json& j) {
    switch (kind) {
    case MessageKind::BidPlaced: return msg::BidPlaced{j.at("bid").get<Bid>()};
    case MessageKind::StateChanged:
        return msg::StateChanged{j.at("from").get<Phase>(), j.at("to").get<Phase>()};
    case MessageKind::ExtensionGranted:
        return msg::ExtensionGranted{j.at("new_end").get<TimeMs>(),
                                     j.at("extension_count").get<std::int64_t>(),
                                     j.at("trigger_bid_id").get<std::int64_t>()};
    case MessageKind::ClosingAnnounced:
        return msg::ClosingAnnounced{j.at("announced_end").get<TimeMs>(),
                                     j.at("grace_until").get<TimeMs>()};
    case MessageKind::Closed:
        return msg::Closed{j.at("close_time").get<TimeMs>(), j.at("hard_cap").get<bool>()};
    case MessageKind::ParticipantBanned:
        return msg::ParticipantBanned{j.at("person_id").get<PersonId>(),
                                      j.at("voided_bid_ids").get<std::vector<std::int64_t>>()};
    case MessageKind::ParticipantAdmitted:
        return msg::ParticipantAdmitted{j.at("person_id").get<PersonId>()};
    case MessageKind::AuctionCancelled: return msg::AuctionCancelled{};
    case MessageKind::AuctionProlonged:
        return msg::AuctionProlonged{j.at("delta_ms").get<DurationMs>(),
                                     j.at("new_end").get<TimeMs>(),
                                     j.at("new_hard_end").get<TimeMs>(), j.at("phase").get<Phase>()};
    case MessageKind::ParticipantInvited:
        return msg::ParticipantInvited{j.at("person_id").get<PersonId>(),
                                       j.at("company_id").get<CompanyId>(),
                                       j.at("name").get<std::string>(), j.at("role").get<Role>(),
                                       get_opt<SlotId>(j, "slot_id")};
    case MessageKind::ContractSigned:
        return msg::ContractSigned{j.at("person_id").get<PersonId>()};
    case MessageKind::PasswordDelivered:
        return msg::PasswordDelivered{j.at("person_id").get<PersonId>()};
    }
    throw std::invalid_argument("unknown message kind");
}

void to_json(json& j, const Message& v) {
    j = json::object();
    j["seq"] = v.seq;
    j["server_time"] = v.server_time;
    j["kind"] = to_string(v.kind());
    j["payload"] = payload_to_json(v.payload);
}
void from_json(const json& j, Message& v) {
    j.at("seq").get_to(v.seq);
    j.at("server_time").get_to(v.server_time);
    auto kind = parse_enum<MessageKind>(j.at("kind"), parse_message_kind, "message kind");
    v.payload = payload_from_json(kind, j.at("payload"));
}

void to_json(json& j, const PersonRef& v) {
    j = json{{"person_id", v.person_id}, {"company_id", v.company_id}, {"name", v.name}};
}
void from_json(const json& j, PersonRef& v) {
    j.at("person_id").get_to(v.person_id);
    j.at("company_id").get_to(v.company_id);
    v.name = get_or<std::string>(j, "name", "");
}

void to_json(json& j, const Participant& v) {
    j = json{{"person", v.person}, {"role", v.role}, {"status", v.status}};
    put_opt(j, "slot_id", v.slot_id);
}
void from_json(const json& j, Participant& v) {
    j.at("person").get_to(v.person);
    j.at("role").get_to(v.role);
    j.at("status").get_to(v.status);
    v.slot_id = get_opt<SlotId>(j, "slot_id");
}

void to_json(json& j, const AuctionState& v) {
    json participants = json::object();
    for (const auto& [id, p] : v.participants) participants[id] = p;
    j = json{{"config", v.config},
             {"phase", v.phase},
             {"current_end", v.current_end},
             {"hard_end", v.hard_end},
             {"extension_count", v.extension_count},
             {"closing_seq", v.closing_seq},
             {"announced_end", v.announced_end},
             {"close_time", v.close_time},
             {"last_time", v.last_time},
             {"next_bid_id", v.next_bid_id},
             {"messages", v.messages},
             {"bids", v.bids},
             {"participants", std::move(participants)},
             {"rights", v.rights}};
}
void from_json(const json& j, AuctionState& v) {
    j.at("config").get_to(v.config);
    j.at("phase").get_to(v.phase);
    j.at("current_end").get_to(v.current_end);
    j.at("hard_end").get_to(v.hard_end);
    j.at("extension_count").get_to(v.extension_count);
    j.at("closing_seq").get_to(v.closing_seq);
    j.at("announced_end").get_to(v.announced_end);
    j.at("close_time").get_to(v.close_time);
    j.at("last_time").get_to(v.last_time);
    j.at("next_bid_id").get_to(v.next_bid_id);
    j.at("messages").get_to(v.messages);
    j.at("bids").get_to(v.bids);
    v.participants.clear();
    for (const auto& [id, p] : j.at("participants").items()) v.participants[id] = p.get<Participant>();
    j.at("rights").get_to(v.rights);
}

void to_json(json& j, const Command& v) {
    json body = std::visit(
        [](const auto& c) -> json {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, cmd::CreateAuction>) {
                json b{{"config", c.config}, {"originator", c.originator}};
                put_opt(b, "auctioneer", c.auctioneer);
                return b;
            } else if constexpr (std::is_same_v<T, cmd::PlaceBid>) {
                return json{{"person", c.person},
                            {"slot", c.slot},
                            {"amount", c.amount},
                            {"cursor_at_submit", c.cursor_at_submit}};
            } else if constexpr (std::is_same_v<T, cmd::Invite>) {
                json b{{"person", c.person}, {"role", c.role}};
                put_opt(b, "slot_id", c.slot_id);
                put_opt(b, "valid_from", c.valid_from);
                put_opt(b, "valid_until", c.valid_until);
                return b;
            } else if constexpr (std::is_same_v<T, cmd::RecordContract> ||
                                 std::is_same_v<T, cmd::RecordPasswordDelivered> ||
                                 std::is_same_v<T, cmd::Admit> || std::is_same_v<T, cmd::Ban>) {
                return json{{"person", c.person}};
            } else if constexpr (std::is_same_v<T, cmd::Prolong>) {
                return json{{"delta_ms", c.delta_ms}};
            } else {
                return json::object();
            }
        },
        v.body);
    j = json{{"auction_id", v.auction_id},
             {"at", v.at},
             {"type", std::string(command_name(v.body))},
             {"body", std::move(body)}};
}

void from_json(const json& j, Command& v) {
    j.at("auction_id").get_to(v.auction_id);
    j.at("at").get_to(v.at);
    const auto type = j.at("type").get<std::string>();
    const json& b = j.at("body");
    if (type == "CreateAuction") {
        v.body = cmd::CreateAuction{b.at("config").get<AuctionConfig>(),
                                    b.at("originator").get<PersonRef>(),
                                    get_opt<PersonRef>(b, "auctioneer")};
    } else if (type == "PlaceBid") {
        v.body = cmd::PlaceBid{b.at("person").get<PersonId>(), b.at("slot").get<SlotId>(),
                               b.at("amount").get<std::int64_t>(),
                               b.at("cursor_at_submit").get<std::int64_t>()};
    } else if (type == "Tick") {
        v.body = cmd::Tick{};
    } else if (type == "Invite") {
        v.body = cmd::Invite{b.at("person").get<PersonRef>(), b.at("role").get<Role>(),
                             get_opt<SlotId>(b, "slot_id"), get_opt<TimeMs>(b, "valid_from"),
                             get_opt<TimeMs>(b, "valid_until")};
    } else if (type == "RecordContract") {
        v.body = cmd::RecordContract{b.at("person").get<PersonId>()};
    } else if (type == "RecordPasswordDelivered") {
        v.body = cmd::RecordPasswordDelivered{b.at("person").get<PersonId>()};
    } else if (type == "Admit") {
        v.body = cmd::Admit{b.at("person").get<PersonId>()};
    } else if (type == "Ban") {
        v.body = cmd::Ban{b.at("person").get<PersonId>()};
    } else if (type == "Prolong") {
        v.body = cmd::Prolong{b.at("delta_ms").get<DurationMs>()};
    } else if (type == "Cancel") {
        v.body = cmd::Cancel{};
    } else {
        throw std::invalid_argument("unknown command type: " + type);
    }
}

void to_json(json& j, const BidOutcome& v) {
    if (const auto* a = std::get_if<Accepted>(&v)) {
        j = json{{"outcome", "Accepted"}, {"bid", a->bid}, {"rank", a->rank}};
        put_opt(j, "new_end", a->new_end);
    } else {
        j = json{{"outcome", "Rejected"},
                 {"reason", std::string(to_string(std::get<Rejected>(v).reason))}};
    }
}
void from_json(const json& j, BidOutcome& v) {
    if (j.at("outcome").get<std::string>() == "Accepted") {
        v = Accepted{j.at("bid").get<Bid>(), j.at("rank").get<int>(), get_opt<TimeMs>(j, "new_end")};
    } else {
        v = Rejected{parse_enum<RejectReason>(j.at("reason"), parse_reject_reason, "reject reason")};
    }
}

}  // namespace openfloor
