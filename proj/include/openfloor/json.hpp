#pragma once

// Canonical JSON form of every domain type: snake_case keys, enums as their
// names, absent optionals omitted. Used by the wire protocol, the event log,
// snapshots and reports.

#include <json.hpp>

#include "openfloor/domain.hpp"
#include "openfloor/engine.hpp"

namespace openfloor {

using nlohmann::json;

void to_json(json& j, const Money& v);
void from_json(const json& j, Money& v);
void to_json(json& j, Format v);
void from_json(const json& j, Format& v);
void to_json(json& j, Role v);
void from_json(const json& j, Role& v);
void to_json(json& j, Phase v);
void from_json(const json& j, Phase& v);
void to_json(json& j, const Quantity& v);
void from_json(const json& j, Quantity& v);
void to_json(json& j, const Slot& v);
void from_json(const json& j, Slot& v);
void to_json(json& j, const AuctionConfig& v);
// Missing hard_cap_ms defaults to twice the main duration; missing schedule
// and grace fall back to the defaults in domain.hpp.
void from_json(const json& j, AuctionConfig& v);
void to_json(json& j, const Company& v);
void from_json(const json& j, Company& v);
void to_json(json& j, const Person& v);
void from_json(const json& j, Person& v);
void to_json(json& j, const AccessRight& v);
void from_json(const json& j, AccessRight& v);
void to_json(json& j, const ParticipantStatus& v);
void from_json(const json& j, ParticipantStatus& v);
void to_json(json& j, const Bid& v);
void from_json(const json& j, Bid& v);
void to_json(json& j, const Message& v);
void from_json(const json& j, Message& v);
void to_json(json& j, const PersonRef& v);
void from_json(const json& j, PersonRef& v);
void to_json(json& j, const Participant& v);
void from_json(const json& j, Participant& v);
void to_json(json& j, const AuctionState& v);
void from_json(const json& j, AuctionState& v);
void to_json(json& j, const Command& v);
void from_json(const json& j, Command& v);
void to_json(json& j, const BidOutcome& v);
void from_json(const json& j, BidOutcome& v);
void to_json(json& j, ConfigViolation v);

json payload_to_json(const MessagePayload& payload);
MessagePayload payload_from_json(MessageKind kind, const json& j);

}  // namespace openfloor
