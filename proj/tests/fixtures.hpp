#pragma once

#include <doctest.h>

#include <optional>
#include <string>

#include "openfloor/engine.hpp"

namespace fx {

using namespace openfloor;

inline PersonRef person(const std::string& id, const std::string& company = "") {
    return PersonRef{id, company.empty() ? id + "-co" : company, "Name of " + id};
}

inline AuctionConfig config(Format format = Format::Reverse, TimeMs start = 0,
                            DurationMs main = 3600000, std::int64_t tick = 100) {
    AuctionConfig c;
    c.auction_id = "a-1";
    c.title = "Test auction";
    c.format = format;
    c.currency = "EUR";
    c.start_time = start;
    c.main_duration_ms = main;
    c.hard_cap_ms = 2 * main;
    c.tick_size = tick;
    c.slots.push_back(Slot{"s1", "Slot one", Quantity{10, "t"}, std::nullopt});
    return c;
}

inline Slot slot(const std::string& id, std::optional<std::int64_t> start_price = std::nullopt) {
    Slot s{id, "Slot " + id, Quantity{1, "pcs"}, std::nullopt};
    if (start_price) s.start_price = Money{*start_price, "EUR"};
    return s;
}

// Drives an auction through engine commands, failing the test on errors.
struct Auction {
    AuctionState state;
    TimeMs now = 0;

    explicit Auction(const AuctionConfig& c, bool with_auctioneer = true) {
        cmd::CreateAuction create{c, person("orig", "buyer"), std::nullopt};
        if (with_auctioneer) create.auctioneer = person("auct", "host");
        auto r = create_auction(create, c.start_time - 1000);
        REQUIRE(r.ok());
        state = std::move(r).value().state;
        now = c.start_time - 1000;
    }

    Result<Effects, EngineError> run(CommandBody body, std::optional<TimeMs> at = std::nullopt) {
        if (at) now = *at;
        return apply_in_place(state, Command{state.config.auction_id, now, std::move(body)});
    }

    Effects must(CommandBody body, std::optional<TimeMs> at = std::nullopt) {
        auto r = run(std::move(body), at);
        REQUIRE_MESSAGE(r.ok(), "engine error " << (r.ok() ? "" : to_string(r.error())));
        return std::move(r).value();
    }

    void bidder(const std::string& id, const std::string& company = "",
                std::optional<SlotId> slot = std::nullopt) {
        must(cmd::Invite{person(id, company), Role::Bidder, slot});
        must(cmd::RecordContract{id});
        must(cmd::Admit{id});
    }

    void observer(const std::string& id) { must(cmd::Invite{person(id), Role::Observer}); }

    BidOutcome bid(const std::string& who, std::int64_t amount, TimeMs at,
                   std::int64_t cursor = 0, const std::string& slot = "s1") {
        auto fx = must(cmd::PlaceBid{who, slot, amount, cursor}, at);
        REQUIRE(fx.outcome.has_value());
        return *fx.outcome;
    }

    Effects tick(TimeMs at) { return must(cmd::Tick{}, at); }

    // Opens the auction at its start time.
    void open() { tick(state.config.start_time); }
};

inline const Accepted& accepted(const BidOutcome& o) {
    REQUIRE(std::holds_alternative<Accepted>(o));
    return std::get<Accepted>(o);
}

inline RejectReason rejected(const BidOutcome& o) {
    REQUIRE(std::holds_alternative<Rejected>(o));
    return std::get<Rejected>(o).reason;
}

}  // namespace fx
