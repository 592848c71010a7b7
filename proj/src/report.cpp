#include "openfloor/report.hpp"

#include <fstream>
#include <set>

namespace openfloor {

namespace {

std::string_view stem_role(Role r) {
    switch (r) {
    case Role::Auctioneer: return "auctioneer";
    case Role::Bidder: return "bidder";
    case Role::Originator: return "originator";
    case Role::Observer: return "observer";
    }
    return "unknown";
}

// Redaction rules for one audience, mirroring the live views.
class Redaction {
public:
    Redaction(const AuctionState& state, const ReportAudience& audience)
        : state_(state), audience_(audience), labels_(pseudonyms(state)) {}

    bool full() const { return audience_.role == Role::Auctioneer; }
    bool monetary() const { return audience_.role != Role::Observer; }
    bool sees_reference_values() const {
        return audience_.role == Role::Auctioneer || audience_.role == Role::Originator;
    }

    json person(const PersonId& id) const {
        json j = json::object();
        auto label = labels_.find(id);
        if (label != labels_.end()) j["label"] = label->second;
        const bool own = audience_.person && *audience_.person == id;
        if (full() || own) {
            j["person_id"] = id;
            if (const auto* p = state_.participant(id)) {
                j["name"] = p->person.name;
                j["company_id"] = p->person.company_id;
            }
        }
        if (!full()) j["own"] = own;
        return j;
    }

    json value(const SlotId& slot, std::int64_t amount) const {
        if (monetary()) return Money{amount, state_.config.currency};
        auto pct = percent_of_reference(state_, slot, amount);
        if (!pct) return nullptr;
        return pct->str() + "%";
    }

private:
    const AuctionState& state_;
    const ReportAudience& audience_;
    std::map<PersonId, std::string> labels_;
};

json bid_entry(const Redaction& red, const Bid& b) {
    json j = red.person(b.bidder);
    j["bid_id"] = b.bid_id;
    j["slot_id"] = b.slot_id;
    j["server_time"] = b.server_time;
    j["value"] = red.value(b.slot_id, b.amount.amount);
    return j;
}

std::string csv_cell(const json& v) {
    if (v.is_null()) return {};
    if (v.is_string()) {
        std::string out = "\"";
        for (char c : v.get<std::string>()) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + "\"";
    }
    if (v.is_object() && v.contains("amount")) return csv_cell(v["amount"]);
    return v.dump();
}

struct CsvWriter {
    std::string out = "section,slot_id,label,server_time,value\n";

    void row(std::string_view section, const json& slot, const json& label, const json& time,
             const json& value) {
        out += csv_cell(std::string(section)) + "," + csv_cell(slot) + "," + csv_cell(label) +
               "," + csv_cell(time) + "," + csv_cell(value) + "\n";
    }
};

json label_of(const json& person) {
    if (person.contains("person_id")) return person["person_id"];
    if (person.contains("label")) return person["label"];
    return nullptr;
}

Result<Ok, StoreFailure> write_file(const std::filesystem::path& path, const std::string& bytes) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) return StoreFailure{StoreError::IoFailure, 0, "cannot open " + tmp};
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) return StoreFailure{StoreError::IoFailure, 0, "cannot write " + tmp};
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) return StoreFailure{StoreError::IoFailure, 0, ec.message()};
    return Ok{};
}

}  // namespace

Result<AuctionReport, EngineError> generate_report(const AuctionState& state) {
    if (!is_terminal(state.phase)) return EngineError::NotClosed;

    AuctionReport r;
    r.config = state.config;
    r.final_phase = state.phase;

    std::vector<Bid> bids;
    std::map<std::int64_t, std::size_t> by_id;
    for (const auto& m : state.messages) {
        if (const auto* p = m.as<msg::BidPlaced>()) {
            by_id[p->bid.bid_id] = bids.size();
            bids.push_back(p->bid);
            bids.back().voided = false;
        } else if (const auto* p = m.as<msg::ParticipantBanned>()) {
            for (auto id : p->voided_bid_ids) {
                if (auto it = by_id.find(id); it != by_id.end()) bids[it->second].voided = true;
            }
        } else if (m.as<msg::ExtensionGranted>()) {
            ++r.statistics.extensions;
        } else if (const auto* p = m.as<msg::Closed>()) {
            r.close_time = p->close_time;
            r.hard_cap = p->hard_cap;
        } else if (m.as<msg::AuctionCancelled>()) {
            r.close_time = m.server_time;
        }
    }

    for (const auto& [id, p] : state.participants) r.participants.push_back(p);

    std::set<PersonId> bidders;
    const Format format = state.config.format;
    for (const auto& slot : state.config.slots) {
        SlotReport sr;
        sr.slot_id = slot.slot_id;
        sr.description = slot.description;
        const Bid* best = nullptr;
        for (const auto& b : bids) {
            if (b.slot_id != slot.slot_id || b.voided) continue;
            ++sr.bid_count;
            if (!best || better_bid(format, b.amount.amount, b.seq, best->amount.amount, best->seq))
                best = &b;
            // Bids sharing a timestamp collapse into one point.
            if (!sr.curve.empty() && sr.curve.back().server_time == b.server_time)
                sr.curve.back().best = best->amount.amount;
            else
                sr.curve.push_back({b.server_time, best->amount.amount});
        }
        if (best && state.phase == Phase::Closed) sr.winner = *best;
        r.slots.push_back(std::move(sr));
    }

    for (const auto& b : bids) {
        ++r.statistics.total_bids;
        bidders.insert(b.bidder);
        if (b.voided) {
            ++r.statistics.voided_bids;
            r.voided.push_back(b);
        }
    }
    r.statistics.bidders_with_bids = static_cast<std::int64_t>(bidders.size());

    const bool all_awarded = std::all_of(r.slots.begin(), r.slots.end(),
                                         [](const SlotReport& s) { return s.winner.has_value(); });
    if (all_awarded && !r.slots.empty()) {
        std::int64_t total = 0;
        for (const auto& s : r.slots) total += s.winner->amount.amount;
        r.statistics.total_winning = total;
        if (const auto& h = state.config.historic_value; h && h->amount > 0)
            r.statistics.savings = percent_of(h->amount - total, h->amount);
    }

    if (state.phase == Phase::Closed) {
        std::vector<SlotResult> winners;
        for (const auto& s : r.slots) winners.push_back({s.slot_id, s.winner});
        auto b = binding_result(state, winners);
        if (b) r.binding = b.value();
    }
    return r;
}

std::string ReportAudience::file_stem() const {
    std::string stem = "report." + std::string(stem_role(role));
    if (person) stem += "." + *person;
    return stem;
}

json report_json(const AuctionReport& report, const AuctionState& state,
                 const ReportAudience& audience) {
    const Redaction red(state, audience);
    const auto& cfg = report.config;

    json auction{{"auction_id", cfg.auction_id},
                 {"title", cfg.title},
                 {"format", to_string(cfg.format)},
                 {"start_time", cfg.start_time},
                 {"close_time", report.close_time},
                 {"final_phase", to_string(report.final_phase)},
                 {"hard_cap", report.hard_cap},
                 {"extension_count", report.statistics.extensions}};
    if (red.monetary()) auction["currency"] = cfg.currency;
    if (red.sees_reference_values()) {
        if (cfg.historic_value) auction["historic_value"] = *cfg.historic_value;
        if (cfg.target_value) auction["target_value"] = *cfg.target_value;
    }

    json participants;
    if (red.full()) {
        participants = json::array();
        for (const auto& p : report.participants) {
            json j = red.person(p.person.person_id);
            j["role"] = to_string(p.role);
            j["status"] = json{{"invited", p.status.invited},
                               {"contract_signed", p.status.contract_signed},
                               {"password_delivered", p.status.password_delivered},
                               {"admitted", p.status.admitted},
                               {"banned", p.status.banned}};
            if (p.slot_id) j["slot_id"] = *p.slot_id;
            participants.push_back(std::move(j));
        }
    } else {
        participants = json::object();
        json counts = json::object();
        for (const auto& p : report.participants) {
            auto key = std::string(to_string(p.role));
            counts[key] = counts.value(key, 0) + 1;
            if (audience.person && p.person.person_id == *audience.person) {
                json own = red.person(p.person.person_id);
                own["role"] = key;
                own["admitted"] = p.status.admitted;
                own["banned"] = p.status.banned;
                participants["own"] = std::move(own);
            }
        }
        participants["counts"] = std::move(counts);
    }

    json slots = json::array();
    for (const auto& s : report.slots) {
        json curve = json::array();
        for (const auto& c : s.curve)
            curve.push_back(json{{"server_time", c.server_time}, {"value", red.value(s.slot_id, c.best)}});
        slots.push_back(json{{"slot_id", s.slot_id},
                             {"description", s.description},
                             {"bid_count", s.bid_count},
                             {"winner", s.winner ? bid_entry(red, *s.winner) : json(nullptr)},
                             {"curve", std::move(curve)}});
    }

    const auto& st = report.statistics;
    json stats{{"total_bids", st.total_bids},
               {"voided_bids", st.voided_bids},
               {"extensions", st.extensions},
               {"bidders_with_bids", st.bidders_with_bids}};
    if (st.total_winning && red.monetary()) stats["total_winning"] = Money{*st.total_winning, cfg.currency};
    if (st.savings && red.sees_reference_values()) stats["savings"] = st.savings->str() + "%";

    json voided = json::array();
    for (const auto& b : report.voided) voided.push_back(bid_entry(red, b));

    return json{{"audience", audience.file_stem()},
                {"auction", std::move(auction)},
                {"participants", std::move(participants)},
                {"slots", std::move(slots)},
                {"statistics", std::move(stats)},
                {"binding_result", report.binding ? json(to_string(*report.binding)) : json(nullptr)},
                {"voided_bids", std::move(voided)}};
}

std::string report_csv(const AuctionReport& report, const AuctionState& state,
                       const ReportAudience& audience) {
    const json j = report_json(report, state, audience);
    CsvWriter csv;
    for (const auto& [key, value] : j["auction"].items()) csv.row("auction", nullptr, key, nullptr, value);
    const auto& participants = j["participants"];
    if (participants.is_array()) {
        for (const auto& p : participants) csv.row("participant", p.value("slot_id", json()), label_of(p), nullptr, p["role"]);
    } else {
        for (const auto& [role, n] : participants["counts"].items())
            csv.row("participant_count", nullptr, role, nullptr, n);
        if (participants.contains("own"))
            csv.row("participant", nullptr, label_of(participants["own"]), nullptr, participants["own"]["role"]);
    }
    for (const auto& s : j["slots"]) {
        csv.row("bid_count", s["slot_id"], nullptr, nullptr, s["bid_count"]);
        if (!s["winner"].is_null())
            csv.row("winner", s["slot_id"], label_of(s["winner"]), s["winner"]["server_time"], s["winner"]["value"]);
        for (const auto& c : s["curve"]) csv.row("curve", s["slot_id"], nullptr, c["server_time"], c["value"]);
    }
    for (const auto& [key, value] : j["statistics"].items()) csv.row("statistic", nullptr, key, nullptr, value);
    csv.row("binding_result", nullptr, nullptr, nullptr, j["binding_result"]);
    for (const auto& b : j["voided_bids"])
        csv.row("voided", b["slot_id"], label_of(b), b["server_time"], b["value"]);
    return csv.out;
}

std::vector<ReportAudience> report_audiences(const AuctionState& state) {
    std::vector<ReportAudience> out{{Role::Auctioneer, std::nullopt},
                                    {Role::Originator, std::nullopt},
                                    {Role::Observer, std::nullopt},
                                    {Role::Bidder, std::nullopt}};
    for (const auto& [id, p] : state.participants) {
        if (p.role == Role::Bidder) out.push_back({Role::Bidder, id});
    }
    return out;
}

Result<std::vector<std::filesystem::path>, StoreFailure> write_reports(
    const std::filesystem::path& data_dir, const AuctionState& state) {
    auto report = generate_report(state);
    if (!report) return StoreFailure{StoreError::IoFailure, 0, std::string(to_string(report.error()))};

    const auto dir = data_dir / "reports" / state.config.auction_id;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return StoreFailure{StoreError::IoFailure, 0, ec.message()};

    std::vector<std::filesystem::path> written;
    for (const auto& audience : report_audiences(state)) {
        const auto base = dir / audience.file_stem();
        auto json_path = std::filesystem::path(base.string() + ".json");
        auto csv_path = std::filesystem::path(base.string() + ".csv");
        if (auto r = write_file(json_path, report_json(*report, state, audience).dump(2) + "\n"); !r)
            return r.error();
        if (auto r = write_file(csv_path, report_csv(*report, state, audience)); !r) return r.error();
        written.push_back(json_path);
        written.push_back(csv_path);
    }
    return written;
}

}  // namespace openfloor
