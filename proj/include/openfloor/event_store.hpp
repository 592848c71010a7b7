#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "openfloor/engine.hpp"
#include "openfloor/result.hpp"

namespace openfloor {

enum class StoreError { IoFailure, StorageFull, CorruptLog };
std::string_view to_string(StoreError e);

struct StoreFailure {
    StoreError code = StoreError::IoFailure;
    std::int64_t seq = 0;  // first bad global_seq for CorruptLog
    std::string detail;
};

using RecordBody = std::variant<Command, Message>;

// One line of events.jsonl. A command record is followed by the messages it
// emitted; `emits` lets the reader tell a complete batch from a torn one.
struct LogRecord {
    std::int64_t global_seq = 0;
    AuctionId auction_id;
    TimeMs server_time = 0;
    RecordBody body;
    std::int64_t emits = 0;  // commands only
    std::uint32_t checksum = 0;

    bool is_command() const { return body.index() == 0; }
    const Command* command() const { return std::get_if<Command>(&body); }
    const Message* message() const { return std::get_if<Message>(&body); }
};

// CRC-32 over the canonical bytes of every field except the checksum.
std::uint32_t record_checksum(const LogRecord& r);
std::string encode_record(LogRecord r);  // no trailing newline
Result<LogRecord, StoreFailure> decode_record(std::string_view line, std::int64_t expected_seq);

// Byte sink under the log, replaceable for fault injection.
class LogSink {
public:
    virtual ~LogSink() = default;
    virtual Result<Ok, StoreError> write(std::string_view bytes) = 0;
    virtual Result<Ok, StoreError> flush() = 0;
};

class FileSink final : public LogSink {
public:
    static Result<std::unique_ptr<FileSink>, StoreFailure> open(const std::filesystem::path& file,
                                                               bool fsync_on_flush);
    ~FileSink() override;

    Result<Ok, StoreError> write(std::string_view bytes) override;
    Result<Ok, StoreError> flush() override;

private:
    FileSink(int fd, bool fsync_on_flush) : fd_(fd), fsync_(fsync_on_flush) {}
    int fd_;
    bool fsync_;
};

enum class FlushPolicy { PerBatch, PerRecord };

struct StoreOptions {
    FlushPolicy flush = FlushPolicy::PerBatch;
    bool fsync = false;
    std::int64_t snapshot_every = 10000;
    std::optional<std::uint64_t> max_bytes;  // StorageFull beyond this
};

using StateMap = std::map<AuctionId, AuctionState>;

inline std::filesystem::path events_file(const std::filesystem::path& dir) {
    return dir / "events.jsonl";
}

struct LoadedLog {
    std::vector<LogRecord> records;
    std::uint64_t valid_bytes = 0;
    bool torn_tail_dropped = false;
};

// Parses the log. A torn final line, or a final command whose messages did
// not all make it to disk, is dropped. Any other damage is CorruptLog.
Result<LoadedLog, StoreFailure> read_log(const std::filesystem::path& file);

// Single appender. append_batch writes one command and its messages.
class EventStore {
public:
    // Opens (creating if needed) <dir>/events.jsonl, truncating a torn tail.
    static Result<std::unique_ptr<EventStore>, StoreFailure> open(const std::filesystem::path& dir,
                                                                 StoreOptions options = {});
    EventStore(std::unique_ptr<LogSink> sink, std::int64_t last_seq, std::uint64_t bytes,
               std::filesystem::path dir, StoreOptions options);

    Result<std::int64_t, StoreFailure> append(const Command& command,
                                              const std::vector<Message>& emitted);

    bool failed() const { return failed_.has_value(); }
    std::int64_t last_seq() const { return last_seq_; }
    std::int64_t last_snapshot_seq() const { return last_snapshot_seq_; }
    const std::filesystem::path& dir() const { return dir_; }
    const StoreOptions& options() const { return options_; }

    // Writes snapshot-<last_seq>.json when the configured interval has passed.
    Result<bool, StoreFailure> maybe_snapshot(const StateMap& states);

private:
    std::unique_ptr<LogSink> sink_;
    std::int64_t last_seq_ = 0;
    std::int64_t last_snapshot_seq_ = 0;
    std::uint64_t bytes_ = 0;
    std::filesystem::path dir_;
    StoreOptions options_;
    std::optional<StoreFailure> failed_;
};

// ---------------------------------------------------------------------------

// Folds the command records through the engine, checking that the logged
// messages are exactly the ones the engine emits.
Result<StateMap, StoreFailure> replay(std::span<const LogRecord> records, StateMap initial = {},
                                      std::int64_t after_seq = 0);

enum class ViolationKind {
    SeqGap,
    TimeRegression,
    DanglingReference,
    NonPositiveAmount,
    ImprovementViolation,
    IllegalTransition,
    MessageAfterClosed,
    MessageSeqGap,
    BidOutsideAuction,
};
std::string_view to_string(ViolationKind k);

struct Violation {
    ViolationKind kind;
    std::int64_t seq = 0;  // global_seq of the offending record
    std::string detail;
};

std::vector<Violation> plausibility_check(std::span<const LogRecord> records);

Result<std::filesystem::path, StoreFailure> write_snapshot(const std::filesystem::path& dir,
                                                           const StateMap& states,
                                                           std::int64_t global_seq);

struct Snapshot {
    std::int64_t global_seq = 0;
    StateMap states;
};
// Latest readable snapshot, if any.
std::optional<Snapshot> load_snapshot(const std::filesystem::path& dir,
                                      std::int64_t max_seq = INT64_MAX);

struct Recovered {
    StateMap states;
    std::int64_t last_seq = 0;
    std::optional<std::int64_t> snapshot_seq;
    bool torn_tail_dropped = false;
};

// Snapshot (when present and `use_snapshot`) plus suffix replay.
Result<Recovered, StoreFailure> recover(const std::filesystem::path& dir, bool use_snapshot = true);

}  // namespace openfloor
