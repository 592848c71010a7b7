#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "openfloor/views.hpp"

using namespace openfloor;

namespace {

json view_json(const AuctionState& s, const PersonId& who, Role role, TimeMs now = 5000) {
    auto v = render_view(s, who, role, now);
    REQUIRE_MESSAGE(v.ok(), "render_view failed: " << to_string(v.error()));
    return json(v.value());
}

bool mentions(const json& j, const std::string& needle) {
    std::vector<std::string> strings;
    oracle::collect_strings(j, strings);
    return std::find(strings.begin(), strings.end(), needle) != strings.end();
}

// Reverse auction with historic 2_000_000 where "alpha" leads at 1_500_000.
fx::Auction observed_auction() {
    auto c = fx::config();
    c.historic_value = Money{2000000, "EUR"};
    c.target_value = Money{1800000, "EUR"};
    fx::Auction a(c);
    a.bidder("alpha");
    a.bidder("beta");
    a.observer("watch");
    a.open();
    a.bid("alpha", 1500000, 1000);
    a.bid("beta", 1600000, 2000);
    return a;
}

}  // namespace

TEST_CASE("percent_of rounding") {
    CHECK(percent_of(1500000, 2000000).str() == "75.00");
    CHECK(percent_of(2000000, 2000000).str() == "100.00");
    CHECK(percent_of(1234567, 2000000).str() == "61.73");
    CHECK(percent_of(1, 3).str() == "33.33");
    CHECK(percent_of(2, 3).str() == "66.67");
    CHECK(percent_of(-3, 200).str() == "-1.50");
}

TEST_CASE("percent_of agrees with decimal long division") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 20000; ++i) {
        const std::int64_t ref = 1 + static_cast<std::int64_t>(rng() % 10000000);
        const std::int64_t amount = static_cast<std::int64_t>(rng() % 20000000);
        REQUIRE(percent_of(amount, ref).str() == oracle::percent_string(amount, ref));
    }
}

TEST_CASE("observer sees percentages of the historic value") {
    auto a = observed_auction();
    auto j = view_json(a.state, "watch", Role::Observer);
    const auto& entries = j["slots"][0]["entries"];
    REQUIRE(entries.size() == 2);
    CHECK(entries[0]["value"] == "75.00%");
    CHECK(entries[1]["value"] == "80.00%");
    CHECK_FALSE(oracle::contains_key(j, "amount"));
    CHECK_FALSE(oracle::contains_key(j, "currency"));
    CHECK_FALSE(oracle::contains_key(j, "historic_value"));
    CHECK_FALSE(oracle::contains_key(j, "tick_size"));
    CHECK_FALSE(mentions(j, "alpha"));
}

TEST_CASE("reference falls back to start price, then first bid") {
    auto c = fx::config();
    c.slots[0].start_price = Money{4000, "EUR"};
    fx::Auction a(c);
    a.bidder("b");
    a.observer("o");
    a.open();
    a.bid("b", 3000, 10);
    CHECK(view_json(a.state, "o", Role::Observer)["slots"][0]["entries"][0]["value"] == "75.00%");

    fx::Auction plain(fx::config());
    plain.bidder("b");
    plain.bidder("c");
    plain.observer("o");
    plain.open();
    plain.bid("b", 8000, 10);
    plain.bid("c", 6000, 20);
    auto entries = view_json(plain.state, "o", Role::Observer)["slots"][0]["entries"];
    CHECK(entries[0]["value"] == "75.00%");
    CHECK(entries[1]["value"] == "100.00%");
}

TEST_CASE("bidder sees own rank and pseudonyms") {
    fx::Auction a(fx::config());
    a.bidder("A");
    a.bidder("B");
    a.open();
    a.bid("A", 9500, 100);
    a.bid("B", 9900, 200);
    auto v = render_view(a.state, "B", Role::Bidder, 300);
    REQUIRE(v.ok());
    const auto& slot = v->slots.at(0);
    CHECK(slot.own_rank == 2);
    CHECK(slot.competitor_count == 2);
    CHECK(slot.entries[0].label == "Bidder-1");
    CHECK_FALSE(slot.entries[0].own);
    CHECK(slot.entries[1].own);
    CHECK(slot.entries[0].amount == Money{9500, "EUR"});

    auto j = json(v.value());
    CHECK_FALSE(mentions(j, "A"));
    CHECK_FALSE(mentions(j, "Name of A"));
    CHECK_FALSE(oracle::contains_key(j, "identity_map"));
    CHECK_FALSE(oracle::contains_key(j, "person_id"));
}

TEST_CASE("auctioneer sees identities") {
    fx::Auction a(fx::config());
    a.bidder("A");
    a.bidder("B");
    a.open();
    a.bid("A", 9500, 100);
    a.bid("B", 9900, 200);
    auto j = view_json(a.state, "auct", Role::Auctioneer, 300);
    CHECK(j["slots"][0]["entries"][0]["person_id"] == "A");
    CHECK(j["identity_map"]["Bidder-1"]["name"] == "Name of A");
    CHECK(j["identity_map"]["Bidder-2"]["name"] == "Name of B");
}

TEST_CASE("originator sees amounts and reference prices but no identities") {
    auto a = observed_auction();
    auto j = view_json(a.state, "orig", Role::Originator);
    CHECK(j["slots"][0]["entries"][0]["value"]["amount"] == 1500000);
    CHECK(j["historic_value"]["amount"] == 2000000);
    CHECK_FALSE(mentions(j, "alpha"));
    CHECK_FALSE(mentions(j, "beta"));
}

TEST_CASE("bidders do not see reference prices") {
    auto a = observed_auction();
    auto j = view_json(a.state, "beta", Role::Bidder);
    CHECK_FALSE(oracle::contains_key(j, "historic_value"));
    CHECK_FALSE(oracle::contains_key(j, "target_value"));
}

TEST_CASE("render_view requires a current right") {
    auto a = observed_auction();
    CHECK(render_view(a.state, "watch", Role::Bidder, 0).error() == ViewError::NoAccessRight);
    CHECK(render_view(a.state, "nobody", Role::Observer, 0).error() == ViewError::NoAccessRight);
    a.must(cmd::Ban{"beta"});
    CHECK(render_view(a.state, "beta", Role::Bidder, a.now).error() == ViewError::NoAccessRight);
}

TEST_CASE("slot-restricted bidder sees only its slot") {
    auto c = fx::config();
    c.slots.push_back(fx::slot("s2"));
    fx::Auction a(c);
    a.bidder("one", "", SlotId{"s1"});
    a.bidder("two", "", SlotId{"s2"});
    a.open();
    a.bid("two", 500, 100, 0, "s2");
    auto v = render_view(a.state, "one", Role::Bidder, 200);
    REQUIRE(v.ok());
    REQUIRE(v->slots.size() == 1);
    CHECK(v->slots[0].slot_id == "s1");

    MessageRedactor redact(a.state, "one", Role::Bidder, 200);
    for (const auto& m : a.state.messages) {
        auto j = redact(m);
        if (m.kind() == MessageKind::BidPlaced) CHECK(j["payload"] == json{{"hidden", true}});
    }
}

TEST_CASE("render_view is pure") {
    auto a = observed_auction();
    for (Role r : {Role::Auctioneer, Role::Originator, Role::Observer}) {
        const PersonId who = r == Role::Auctioneer ? "auct" : r == Role::Originator ? "orig" : "watch";
        CHECK(view_json(a.state, who, r).dump() == view_json(a.state, who, r).dump());
    }
}

TEST_CASE("labels stay stable after a ban") {
    auto a = observed_auction();
    auto before = pseudonyms(a.state);
    a.must(cmd::Ban{"alpha"});
    CHECK(pseudonyms(a.state) == before);
}

TEST_CASE("message redaction per role") {
    auto a = observed_auction();
    const auto& bid_msg = *std::find_if(a.state.messages.begin(), a.state.messages.end(),
                                        [](const Message& m) { return m.kind() == MessageKind::BidPlaced; });

    auto auctioneer = MessageRedactor(a.state, "auct", Role::Auctioneer, 5000)(bid_msg);
    CHECK(auctioneer == json(bid_msg));

    auto observer = MessageRedactor(a.state, "watch", Role::Observer, 5000)(bid_msg);
    CHECK(observer["payload"]["bid"]["value"] == "75.00%");
    CHECK_FALSE(oracle::contains_key(observer, "amount"));
    CHECK_FALSE(mentions(observer, "alpha"));

    auto rival = MessageRedactor(a.state, "beta", Role::Bidder, 5000)(bid_msg);
    CHECK(rival["payload"]["bid"]["label"] == "Bidder-1");
    CHECK(rival["payload"]["bid"]["own"] == false);
    CHECK(rival["payload"]["bid"]["value"]["amount"] == 1500000);
    CHECK_FALSE(mentions(rival, "alpha"));
}
