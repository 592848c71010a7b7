#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "openfloor/engine.hpp"
#include "openfloor/event_store.hpp"
#include "openfloor/json.hpp"
#include "openfloor/views.hpp"

namespace openfloor {

struct CurvePoint {
    TimeMs server_time = 0;
    std::int64_t best = 0;  // best amount so far, minor units
    bool operator==(const CurvePoint&) const = default;
};

struct SlotReport {
    SlotId slot_id;
    std::string description;
    std::optional<Bid> winner;
    std::int64_t bid_count = 0;  // valid bids only
    std::vector<CurvePoint> curve;
};

struct ReportStatistics {
    std::int64_t total_bids = 0;
    std::int64_t voided_bids = 0;
    std::int64_t extensions = 0;
    std::int64_t bidders_with_bids = 0;
    std::optional<std::int64_t> total_winning;  // set when every slot was awarded
    std::optional<Percent> savings;             // needs historic value and total_winning
};

struct AuctionReport {
    AuctionConfig config;
    Phase final_phase = Phase::Closed;
    TimeMs close_time = 0;
    bool hard_cap = false;
    std::vector<Participant> participants;
    std::vector<SlotReport> slots;
    ReportStatistics statistics;
    std::optional<Binding> binding;  // absent for cancelled auctions
    std::vector<Bid> voided;         // annex
};

// Built from the message log of a finished auction.
Result<AuctionReport, EngineError> generate_report(const AuctionState& state);

// Audience of a rendered report. A bidder audience without a person id is
// the generic pseudonymous bidder variant.
struct ReportAudience {
    Role role = Role::Auctioneer;
    std::optional<PersonId> person;

    std::string file_stem() const;  // "report.auctioneer", "report.bidder.<id>", ...
};

json report_json(const AuctionReport& report, const AuctionState& state,
                 const ReportAudience& audience);
std::string report_csv(const AuctionReport& report, const AuctionState& state,
                       const ReportAudience& audience);

// Every audience variant of one auction: auctioneer, originator, observer,
// generic bidder and one per bidder who took part.
std::vector<ReportAudience> report_audiences(const AuctionState& state);

// Writes <data_dir>/reports/<auction_id>/<stem>.json and .csv for each
// audience. Returns the written paths.
Result<std::vector<std::filesystem::path>, StoreFailure> write_reports(
    const std::filesystem::path& data_dir, const AuctionState& state);

}  // namespace openfloor
