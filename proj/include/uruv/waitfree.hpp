#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "uruv/core.hpp"
#include "uruv/op_state.hpp"
#include "uruv/reclamation.hpp"
#include "uruv/tree.hpp"
#include "uruv/version_tracker.hpp"

namespace uruv {

struct WaitFreeConfig {
    int fast_path_retries = 8;  // f
    int helping_period = 3;     // s

    void validate() const;
};

struct StoreConfig {
    TreeConfig tree;
    WaitFreeConfig wait_free;
    std::size_t max_threads = 64;
};

struct ThreadHandle {
    std::size_t tid;
};

struct StoreStats {
    std::size_t leaves = 0;
    std::size_t internals = 0;
    std::size_t live_keys = 0;
    std::size_t depth = 0;
    std::int64_t search_descents = 0;
    std::int64_t search_restarts = 0;
    std::int64_t slow_path_entries = 0;
    std::int64_t helps = 0;
    std::int64_t rebalances = 0;
    std::int64_t restarts = 0;
    std::int64_t max_attempts = 0;
    std::int64_t double_retires = 0;
    std::int64_t retired = 0;
    std::int64_t freed = 0;
};

// The public store: the tree plus announcement and helping. Every operation
// takes the handle returned by register_thread, and a handle must be used by
// one thread at a time.
class Store {
public:
    explicit Store(const StoreConfig& cfg = {});
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    ThreadHandle register_thread();
    std::size_t registered() const noexcept { return nthreads_.load(std::memory_order_acquire); }

    OpResult insert(ThreadHandle h, Key key, Value value);
    OpResult remove(ThreadHandle h, Key key);
    // Hit: {OperationFinished, value}. Miss: {KeyNotPresent}.
    OpResult search(ThreadHandle h, Key key);
    std::optional<Value> get(ThreadHandle h, Key key);
    std::vector<std::pair<Key, Value>> range_query(ThreadHandle h, Key low, Key high,
                                                   Timestamp* snapshot = nullptr);

    ValidationReport validate_structure() const;
    StoreStats stats() const;
    // Frees all retired memory. No operation may be running.
    void quiesce();

    const StoreConfig& config() const noexcept { return cfg_; }

    // Test hooks into the helping machinery.
    bool help_slot(ThreadHandle h, std::size_t target);
    bool slot_finished(std::size_t target) const;
    const OperationState* slot_state(std::size_t target) const;
    std::vector<const VersionNode*> chain_of(ThreadHandle h, Key key);
    Tree& tree() noexcept { return *tree_; }
    Reclaimer& reclaimer() noexcept { return rec_; }
    VersionTracker& tracker() noexcept { return tracker_; }

private:
    struct alignas(64) PerThread {
        std::uint64_t phase = 0;
        std::size_t curr_tid = 0;
        std::uint64_t last_phase = 0;
        bool recorded_pending = false;
        int next_check = 0;
    };

    OpResult execute(ThreadHandle h, bool is_delete, Key key, Value value);
    OpResult slow_path(std::size_t tid, bool is_delete, Key key, Value value);
    void check_help(std::size_t tid);
    void record(PerThread& pt);

    StoreConfig cfg_;
    Reclaimer rec_;
    VersionTracker tracker_;
    std::unique_ptr<Tree> tree_;
    std::unique_ptr<std::atomic<OperationState*>[]> states_;
    std::vector<PerThread> per_thread_;
    std::atomic<std::size_t> nthreads_{0};
    std::atomic<std::int64_t> slow_path_entries_{0};
    std::atomic<std::int64_t> helps_{0};
};

}  // namespace uruv
