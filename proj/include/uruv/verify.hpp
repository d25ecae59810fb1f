#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uruv/core.hpp"
#include "uruv/tree.hpp"
#include "uruv/waitfree.hpp"

namespace uruv::verify {

using Range = std::vector<std::pair<Key, Value>>;

enum class OpType : std::uint8_t { Insert, Delete, Search, RangeQuery };

struct Operation {
    OpType type = OpType::Search;
    Key key = 1;
    Key high = 1;  // range queries only
    Value value = 0;  // inserts only

    static Operation insert(Key k, Value v) { return {OpType::Insert, k, k, v}; }
    static Operation remove(Key k) { return {OpType::Delete, k, k, 0}; }
    static Operation search(Key k) { return {OpType::Search, k, k, 0}; }
    static Operation range(Key lo, Key hi) { return {OpType::RangeQuery, lo, hi, 0}; }
    friend bool operator==(const Operation&, const Operation&) = default;
};

// What an operation reports, without the install timestamp.
struct Response {
    OpKind kind = OpKind::Failed;
    std::optional<Value> value;
    Range range;

    static Response from(const OpResult& r) { return Response{r.kind, r.value, {}}; }
    static Response of_range(Range r) { return Response{OpKind::OperationFinished, std::nullopt, std::move(r)}; }
    friend bool operator==(const Response&, const Response&) = default;
};

std::string to_string(const Operation& op);
std::string to_string(const Response& r);

// Applies op to a plain map with the store's result conventions.
Response apply_to(std::map<Key, Value>& state, const Operation& op);

class SequentialOracle {
public:
    struct Effect {
        Timestamp ts;
        Key key;
        Value value;  // TOMBSTONE for a delete
    };

    Response apply(const Operation& op) { return apply_to(state_, op); }
    // Applies op as taking effect at ts; timestamps must not decrease.
    Response apply_at(const Operation& op, Timestamp ts);
    std::map<Key, Value> snapshot_at(Timestamp t) const;
    Range range(Key low, Key high) const;
    const std::map<Key, Value>& state() const noexcept { return state_; }
    const std::vector<Effect>& log() const noexcept { return log_; }

private:
    std::map<Key, Value> state_;
    std::vector<Effect> log_;
};

struct HistoryEvent {
    std::size_t thread = 0;
    bool invoke = true;
    Operation op;
    Response result;  // respond events only
    std::uint64_t seq = 0;
};

// Concurrent-writer-safe history recorder: each thread appends to its own
// log, the global sequence counter orders events across threads.
class Recorder {
public:
    explicit Recorder(std::size_t threads);
    void invoke(std::size_t tid, const Operation& op);
    void respond(std::size_t tid, const Response& r);
    std::vector<HistoryEvent> history() const;

private:
    struct alignas(64) Log {
        std::vector<HistoryEvent> events;
        Operation pending;
    };
    std::atomic<std::uint64_t> seq_{0};
    std::vector<Log> logs_;
};

struct LinBounds {
    std::size_t threads = 4;
    std::size_t ops = 24;
    std::size_t keys = 8;
};

struct Verdict {
    enum class Kind { Yes, No, BoundsExceeded, Malformed };
    Kind kind = Kind::Yes;
    // Yes: indices of invoke events in linearization order.
    std::vector<std::size_t> witness;
    // No: the shortest prefix of the history that is already not linearizable.
    std::vector<HistoryEvent> violating_prefix;
    std::string detail;

    bool yes() const noexcept { return kind == Kind::Yes; }
};

// Events may leave trailing invocations without a response; those operations
// may or may not have taken effect.
Verdict check_linearizable(const std::vector<HistoryEvent>& history, const LinBounds& bounds = {});

// Snapshot reconstruction. Each state change the store reports becomes an
// effect; with unique values, the chain of a key is recovered from
// produced/consumed pairs even when several updates share a timestamp.
struct UpdateEffect {
    Key key;
    Timestamp ts;
    Value produced;                 // TOMBSTONE for a delete
    std::optional<Value> consumed;  // the value it replaced, if any
};
std::optional<UpdateEffect> effect_of(const Operation& op, const OpResult& r);

struct RangeRecord {
    Key low;
    Key high;
    Timestamp snapshot;
    Range result;
};

struct SnapshotReport {
    bool ok = true;
    std::size_t checked = 0;
    std::size_t violations = 0;
    std::vector<std::string> messages;
    std::map<Key, Value> final_state;  // the reconstruction after every effect

    void fail(std::string m);
};

SnapshotReport snapshot_check(const std::vector<UpdateEffect>& run_log, const std::vector<RangeRecord>& rq_results,
                              const std::map<Key, Value>& base = {});

struct StressConfig {
    StoreConfig store;
    std::size_t threads = 4;
    std::size_t ops_per_thread = 1000;  // ignored when duration_s > 0
    double duration_s = 0;
    Key keyspace = 1000;
    int insert_pct = 40;
    int delete_pct = 40;
    int search_pct = 10;
    int rq_pct = 10;
    Key rq_size = 16;
    std::size_t prefill = 0;
    std::uint64_t seed = 1;
    // Threads with index < this count always take the slow path (test builds).
    std::size_t slow_path_threads = 0;
    bool check_snapshots = true;
    // Threads join after this many ops each so logs stay bounded.
    std::size_t window_ops = 20000;

    void validate() const;
};

struct StressReport {
    bool ok = true;
    std::vector<std::string> failures;
    std::uint64_t ops = 0;
    std::vector<std::uint64_t> per_thread_ops;
    std::size_t windows = 0;
    double elapsed_s = 0;
    ValidationReport structure;
    SnapshotReport snapshots;
    bool final_state_matches = true;
    StoreStats stats;
    std::int64_t version_nodes_live = 0;  // allocation counter after quiesce
    std::size_t live_keys = 0;

    void fail(std::string m);
};

StressReport stress(const StressConfig& cfg);

// Records many small histories from fresh stores and checks each one.
struct LincheckConfig {
    std::size_t histories = 1000;
    std::size_t threads = 3;
    std::size_t ops_per_thread = 6;
    Key keyspace = 8;
    Key rq_width = 4;
    std::uint64_t seed = 1;
    int slow_path_pct = 30;  // share of histories run with the slow path forced
    // Corrupts one recorded response per history before checking; every
    // history must then be rejected.
    bool inject_fault = false;
    StoreConfig store;
};

struct LincheckReport {
    bool ok = true;
    std::size_t histories = 0;
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t bounds_exceeded = 0;
    std::vector<std::string> first_failure;
};

LincheckReport lincheck_campaign(const LincheckConfig& cfg);

}  // namespace uruv::verify
