#include "openfloor/event_store.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cerrno>
#include <cstring>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "openfloor/json.hpp"

namespace openfloor {

namespace fs = std::filesystem;

namespace {

json record_json_without_crc(const LogRecord& r) {
    json j{{"global_seq", r.global_seq},
           {"auction_id", r.auction_id},
           {"server_time", r.server_time}};
    if (const auto* c = r.command()) {
        j["type"] = "command";
        j["emits"] = r.emits;
        j["payload"] = *c;
    } else {
        j["type"] = "message";
        j["payload"] = *r.message();
    }
    return j;
}

StoreFailure corrupt(std::int64_t seq, std::string detail) {
    return StoreFailure{StoreError::CorruptLog, seq, std::move(detail)};
}

StoreError errno_to_error(int err) {
    return err == ENOSPC || err == EDQUOT ? StoreError::StorageFull : StoreError::IoFailure;
}

}  // namespace

std::string_view to_string(StoreError e) {
    switch (e) {
    case StoreError::IoFailure: return "IoFailure";
    case StoreError::StorageFull: return "StorageFull";
    case StoreError::CorruptLog: return "CorruptLog";
    }
    return "Unknown";
}

std::string_view to_string(ViolationKind k) {
    switch (k) {
    case ViolationKind::SeqGap: return "SeqGap";
    case ViolationKind::TimeRegression: return "TimeRegression";
    case ViolationKind::DanglingReference: return "DanglingReference";
    case ViolationKind::NonPositiveAmount: return "NonPositiveAmount";
    case ViolationKind::ImprovementViolation: return "ImprovementViolation";
    case ViolationKind::IllegalTransition: return "IllegalTransition";
    case ViolationKind::MessageAfterClosed: return "MessageAfterClosed";
    case ViolationKind::MessageSeqGap: return "MessageSeqGap";
    case ViolationKind::BidOutsideAuction: return "BidOutsideAuction";
    }
    return "Unknown";
}

std::uint32_t record_checksum(const LogRecord& r) {
    const std::string bytes = record_json_without_crc(r).dump();
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string encode_record(LogRecord r) {
    json j = record_json_without_crc(r);
    const std::string bytes = j.dump();
    j["crc32"] = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
    return j.dump();
}

Result<LogRecord, StoreFailure> decode_record(std::string_view line, std::int64_t expected_seq) {
    LogRecord r;
    try {
        json j = json::parse(line);
        r.global_seq = j.at("global_seq").get<std::int64_t>();
        r.auction_id = j.at("auction_id").get<AuctionId>();
        r.server_time = j.at("server_time").get<TimeMs>();
        const auto type = j.at("type").get<std::string>();
        if (type == "command") {
            r.body = j.at("payload").get<Command>();
            r.emits = j.at("emits").get<std::int64_t>();
        } else if (type == "message") {
            r.body = j.at("payload").get<Message>();
        } else {
            return corrupt(expected_seq, "unknown record type");
        }
        r.checksum = j.at("crc32").get<std::uint32_t>();
    } catch (const std::exception& e) {
        return corrupt(expected_seq, e.what());
    }
    if (record_checksum(r) != r.checksum) return corrupt(expected_seq, "checksum mismatch");
    return r;
}

// ---------------------------------------------------------------------------

Result<std::unique_ptr<FileSink>, StoreFailure> FileSink::open(const fs::path& file,
                                                              bool fsync_on_flush) {
    int fd = ::open(file.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) return StoreFailure{errno_to_error(errno), 0, std::strerror(errno)};
    return std::unique_ptr<FileSink>(new FileSink(fd, fsync_on_flush));
}

FileSink::~FileSink() {
    if (fd_ >= 0) ::close(fd_);
}

Result<Ok, StoreError> FileSink::write(std::string_view bytes) {
    while (!bytes.empty()) {
        ssize_t n = ::write(fd_, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            return errno_to_error(errno);
        }
        bytes.remove_prefix(static_cast<std::size_t>(n));
    }
    return Ok{};
}

Result<Ok, StoreError> FileSink::flush() {
    // write(2) already hands the bytes to the kernel, which is enough to
    // survive a process kill; fsync covers power loss.
    if (fsync_ && ::fsync(fd_) != 0) return errno_to_error(errno);
    return Ok{};
}

// ---------------------------------------------------------------------------

Result<LoadedLog, StoreFailure> read_log(const fs::path& file) {
    LoadedLog out;
    std::error_code ec;
    if (!fs::exists(file, ec)) return out;

    std::ifstream in(file, std::ios::binary);
    if (!in) return StoreFailure{StoreError::IoFailure, 0, "cannot open " + file.string()};
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();

    std::vector<std::uint64_t> line_starts;
    std::size_t pos = 0;
    while (pos < data.size()) {
        const std::size_t nl = data.find('\n', pos);
        if (nl == std::string::npos) {
            out.torn_tail_dropped = true;  // never misparse a partial line
            break;
        }
        std::string_view line(data.data() + pos, nl - pos);
        const std::int64_t expected = out.records.empty() ? 1 : out.records.back().global_seq + 1;
        auto rec = decode_record(line, expected);
        if (!rec) return rec.error();
        out.records.push_back(std::move(rec).value());
        line_starts.push_back(pos);
        pos = nl + 1;
    }
    out.valid_bytes = pos;

    // A trailing command must be followed by all of its messages.
    for (std::size_t i = out.records.size(); i-- > 0;) {
        if (!out.records[i].is_command()) continue;
        const auto have = static_cast<std::int64_t>(out.records.size() - i - 1);
        if (have < out.records[i].emits) {
            out.valid_bytes = line_starts[i];
            out.records.resize(i);
            out.torn_tail_dropped = true;
        }
        break;
    }
    return out;
}

Result<std::unique_ptr<EventStore>, StoreFailure> EventStore::open(const fs::path& dir,
                                                                  StoreOptions options) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return StoreFailure{StoreError::IoFailure, 0, ec.message()};

    const auto file = events_file(dir);
    auto loaded = read_log(file);
    if (!loaded) return loaded.error();
    if (fs::exists(file) && fs::file_size(file) != loaded->valid_bytes) {
        fs::resize_file(file, loaded->valid_bytes, ec);
        if (ec) return StoreFailure{StoreError::IoFailure, 0, ec.message()};
    }
    auto sink = FileSink::open(file, options.fsync);
    if (!sink) return sink.error();

    const std::int64_t last = loaded->records.empty() ? 0 : loaded->records.back().global_seq;
    auto store = std::make_unique<EventStore>(std::move(sink).value(), last, loaded->valid_bytes,
                                              dir, options);
    if (auto snap = load_snapshot(dir, last)) store->last_snapshot_seq_ = snap->global_seq;
    return store;
}

EventStore::EventStore(std::unique_ptr<LogSink> sink, std::int64_t last_seq, std::uint64_t bytes,
                       fs::path dir, StoreOptions options)
    : sink_(std::move(sink)),
      last_seq_(last_seq),
      last_snapshot_seq_(0),
      bytes_(bytes),
      dir_(std::move(dir)),
      options_(options) {}

Result<std::int64_t, StoreFailure> EventStore::append(const Command& command,
                                                      const std::vector<Message>& emitted) {
    if (failed_) return *failed_;

    std::vector<std::string> lines;
    lines.reserve(emitted.size() + 1);
    std::int64_t seq = last_seq_;
    LogRecord head{++seq, command.auction_id, command.at, command,
                   static_cast<std::int64_t>(emitted.size()), 0};
    lines.push_back(encode_record(std::move(head)) + "\n");
    for (const auto& m : emitted) {
        lines.push_back(encode_record(LogRecord{++seq, command.auction_id, m.server_time, m, 0, 0}) +
                        "\n");
    }

    std::uint64_t total = 0;
    for (const auto& l : lines) total += l.size();
    if (options_.max_bytes && bytes_ + total > *options_.max_bytes) {
        failed_ = StoreFailure{StoreError::StorageFull, last_seq_ + 1, "log size limit reached"};
        return *failed_;
    }

    auto fail = [&](StoreError e) {
        failed_ = StoreFailure{e, last_seq_ + 1, "append failed"};
        return *failed_;
    };
    if (options_.flush == FlushPolicy::PerRecord) {
        for (const auto& l : lines) {
            if (auto r = sink_->write(l); !r) return fail(r.error());
            if (auto r = sink_->flush(); !r) return fail(r.error());
        }
    } else {
        std::string batch;
        batch.reserve(total);
        for (const auto& l : lines) batch += l;
        if (auto r = sink_->write(batch); !r) return fail(r.error());
        if (auto r = sink_->flush(); !r) return fail(r.error());
    }
    bytes_ += total;
    last_seq_ = seq;
    return seq;
}

Result<bool, StoreFailure> EventStore::maybe_snapshot(const StateMap& states) {
    if (options_.snapshot_every <= 0 || last_seq_ - last_snapshot_seq_ < options_.snapshot_every)
        return false;
    auto r = write_snapshot(dir_, states, last_seq_);
    if (!r) return r.error();
    last_snapshot_seq_ = last_seq_;
    return true;
}

// ---------------------------------------------------------------------------

Result<StateMap, StoreFailure> replay(std::span<const LogRecord> records, StateMap states,
                                      std::int64_t after_seq) {
    std::deque<Message> expected;
    for (const auto& r : records) {
        if (r.global_seq <= after_seq) continue;

        if (const auto* m = r.message()) {
            if (expected.empty() || !(expected.front() == *m))
                return corrupt(r.global_seq, "logged message differs from replayed engine output");
            expected.pop_front();
            continue;
        }
        if (!expected.empty()) return corrupt(r.global_seq, "command before previous batch ended");

        const Command& c = *r.command();
        std::vector<Message> emitted;
        if (const auto* create = std::get_if<cmd::CreateAuction>(&c.body)) {
            if (states.count(c.auction_id)) return corrupt(r.global_seq, "auction created twice");
            auto created = create_auction(*create, c.at);
            if (!created) return corrupt(r.global_seq, std::string(to_string(created.error())));
            emitted = created->effects.emitted;
            states.emplace(c.auction_id, std::move(created->state));
        } else {
            auto it = states.find(c.auction_id);
            if (it == states.end()) return corrupt(r.global_seq, "command for unknown auction");
            auto fx = apply_in_place(it->second, c);
            if (!fx) return corrupt(r.global_seq, std::string(to_string(fx.error())));
            emitted = std::move(fx->emitted);
        }
        if (static_cast<std::int64_t>(emitted.size()) != r.emits)
            return corrupt(r.global_seq, "message count differs from replayed engine output");
        expected.assign(emitted.begin(), emitted.end());
    }
    if (!expected.empty()) return corrupt(records.empty() ? 0 : records.back().global_seq, "log ends mid-batch");
    return states;
}

std::vector<Violation> plausibility_check(std::span<const LogRecord> records) {
    struct Track {
        AuctionConfig config;
        Phase phase = Phase::Scheduled;
        TimeMs hard_end = 0;
        std::int64_t last_msg_seq = 0;
        std::map<PersonId, Role> roles;
        std::map<std::pair<SlotId, PersonId>, std::int64_t> last_bid;
    };
    std::map<AuctionId, Track> auctions;
    std::vector<Violation> out;
    auto flag = [&](ViolationKind k, std::int64_t seq, std::string detail) {
        out.push_back({k, seq, std::move(detail)});
    };

    std::int64_t prev_seq = 0;
    std::optional<TimeMs> prev_time;
    for (const auto& r : records) {
        if (r.global_seq != prev_seq + 1)
            flag(ViolationKind::SeqGap, r.global_seq, "expected " + std::to_string(prev_seq + 1));
        prev_seq = r.global_seq;
        if (prev_time && r.server_time < *prev_time)
            flag(ViolationKind::TimeRegression, r.global_seq, "server_time went backwards");
        prev_time = std::max(prev_time.value_or(r.server_time), r.server_time);

        if (const auto* c = r.command()) {
            if (const auto* create = std::get_if<cmd::CreateAuction>(&c->body)) {
                Track t;
                t.config = create->config;
                t.hard_end = create->config.start_time + create->config.hard_cap_ms;
                auctions[c->auction_id] = std::move(t);
            } else if (!auctions.count(c->auction_id)) {
                flag(ViolationKind::DanglingReference, r.global_seq, "unknown auction " + c->auction_id);
            }
            continue;
        }

        const Message& m = *r.message();
        auto it = auctions.find(r.auction_id);
        if (it == auctions.end()) {
            flag(ViolationKind::DanglingReference, r.global_seq, "unknown auction " + r.auction_id);
            continue;
        }
        Track& t = it->second;
        if (m.seq != t.last_msg_seq + 1)
            flag(ViolationKind::MessageSeqGap, r.global_seq, "message seq " + std::to_string(m.seq));
        t.last_msg_seq = m.seq;

        if (is_terminal(t.phase)) {
            flag(ViolationKind::MessageAfterClosed, r.global_seq, std::string(to_string(m.kind())));
            continue;
        }
        auto illegal = [&](std::string what) {
            flag(ViolationKind::IllegalTransition, r.global_seq,
                 what + " in phase " + std::string(to_string(t.phase)));
        };
        const bool running = t.phase == Phase::Open || t.phase == Phase::Extension;

        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, msg::StateChanged>) {
                    if (p.from != t.phase || p.from != Phase::Scheduled || p.to != Phase::Open)
                        illegal("StateChanged");
                    t.phase = p.to;
                } else if constexpr (std::is_same_v<T, msg::ExtensionGranted>) {
                    if (!is_biddable(t.phase)) illegal("ExtensionGranted");
                    t.phase = Phase::Extension;
                } else if constexpr (std::is_same_v<T, msg::ClosingAnnounced>) {
                    if (!running) illegal("ClosingAnnounced");
                    t.phase = Phase::Closing;
                } else if constexpr (std::is_same_v<T, msg::Closed>) {
                    if (!p.hard_cap && t.phase != Phase::Closing) illegal("Closed");
                    t.phase = Phase::Closed;
                } else if constexpr (std::is_same_v<T, msg::AuctionCancelled>) {
                    t.phase = Phase::Cancelled;
                } else if constexpr (std::is_same_v<T, msg::AuctionProlonged>) {
                    const bool reopened = t.phase == Phase::Closing &&
                                          (p.phase == Phase::Open || p.phase == Phase::Extension);
                    if (p.phase != t.phase && !reopened) illegal("AuctionProlonged");
                    t.phase = p.phase;
                    t.hard_end = p.new_hard_end;
                } else if constexpr (std::is_same_v<T, msg::ParticipantInvited>) {
                    t.roles[p.person_id] = p.role;
                } else if constexpr (std::is_same_v<T, msg::BidPlaced>) {
                    const Bid& b = p.bid;
                    if (!is_biddable(t.phase)) illegal("BidPlaced");
                    if (!t.config.find_slot(b.slot_id))
                        flag(ViolationKind::DanglingReference, r.global_seq, "unknown slot " + b.slot_id);
                    auto role = t.roles.find(b.bidder);
                    if (role == t.roles.end() || role->second != Role::Bidder)
                        flag(ViolationKind::DanglingReference, r.global_seq, "unknown bidder " + b.bidder);
                    if (b.amount.amount <= 0)
                        flag(ViolationKind::NonPositiveAmount, r.global_seq, "bid amount");
                    if (b.server_time < t.config.start_time || b.server_time >= t.hard_end)
                        flag(ViolationKind::BidOutsideAuction, r.global_seq, "bid time");
                    auto key = std::make_pair(b.slot_id, b.bidder);
                    if (auto prev = t.last_bid.find(key); prev != t.last_bid.end()) {
                        const std::int64_t gain = t.config.format == Format::Reverse
                                                      ? prev->second - b.amount.amount
                                                      : b.amount.amount - prev->second;
                        if (gain < t.config.tick_size)
                            flag(ViolationKind::ImprovementViolation, r.global_seq, "bid improvement");
                    }
                    t.last_bid[key] = b.amount.amount;
                }
            },
            m.payload);
    }
    return out;
}

// ---------------------------------------------------------------------------

Result<fs::path, StoreFailure> write_snapshot(const fs::path& dir, const StateMap& states,
                                              std::int64_t global_seq) {
    json auctions = json::object();
    for (const auto& [id, s] : states) auctions[id] = s;
    const json doc{{"global_seq", global_seq}, {"auctions", std::move(auctions)}};

    const auto final_path = dir / ("snapshot-" + std::to_string(global_seq) + ".json");
    const auto tmp = dir / ("snapshot-" + std::to_string(global_seq) + ".json.tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) return StoreFailure{StoreError::IoFailure, global_seq, "cannot write " + tmp.string()};
        out << doc.dump();
        out.flush();
        if (!out) return StoreFailure{StoreError::IoFailure, global_seq, "short write " + tmp.string()};
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) return StoreFailure{StoreError::IoFailure, global_seq, ec.message()};
    return final_path;
}

std::optional<Snapshot> load_snapshot(const fs::path& dir, std::int64_t max_seq) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return std::nullopt;

    std::set<std::int64_t, std::greater<>> seqs;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const auto name = entry.path().filename().string();
        constexpr std::string_view prefix = "snapshot-", suffix = ".json";
        if (name.size() <= prefix.size() + suffix.size() || name.rfind(prefix, 0) != 0 ||
            name.substr(name.size() - suffix.size()) != suffix)
            continue;
        try {
            seqs.insert(std::stoll(name.substr(prefix.size(), name.size() - prefix.size() - suffix.size())));
        } catch (const std::exception&) {
        }
    }
    for (auto seq : seqs) {
        if (seq > max_seq) continue;
        try {
            std::ifstream in(dir / ("snapshot-" + std::to_string(seq) + ".json"));
            json doc = json::parse(in);
            Snapshot snap;
            snap.global_seq = doc.at("global_seq").get<std::int64_t>();
            for (const auto& [id, s] : doc.at("auctions").items()) snap.states[id] = s.get<AuctionState>();
            return snap;
        } catch (const std::exception&) {
            // fall through to an older snapshot
        }
    }
    return std::nullopt;
}

Result<Recovered, StoreFailure> recover(const fs::path& dir, bool use_snapshot) {
    auto loaded = read_log(events_file(dir));
    if (!loaded) return loaded.error();

    Recovered out;
    out.torn_tail_dropped = loaded->torn_tail_dropped;
    out.last_seq = loaded->records.empty() ? 0 : loaded->records.back().global_seq;

    StateMap initial;
    std::int64_t after = 0;
    if (use_snapshot) {
        if (auto snap = load_snapshot(dir, out.last_seq)) {
            initial = std::move(snap->states);
            after = snap->global_seq;
            out.snapshot_seq = after;
        }
    }
    auto states = replay(loaded->records, std::move(initial), after);
    if (!states) return states.error();
    out.states = std::move(states).value();
    return out;
}

}  // namespace openfloor
