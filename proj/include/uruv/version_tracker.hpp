#pragma once

#include <atomic>
#include <cstddef>
#include <utility>

#include "uruv/core.hpp"
#include "uruv/reclamation.hpp"

namespace uruv {

struct TrackerNode : Retirable {
    Timestamp ts = 0;
    std::atomic<TrackerNode*> next;
    std::atomic<bool> finished{false};

    TrackerNode();
    ~TrackerNode();

private:
    friend class VersionTracker;
    struct Uncounted {};
    explicit TrackerNode(Uncounted) : next(nullptr), counted_(false) {}
    bool counted_ = true;
};

// Global clock plus the list of range queries still running. Callers must be
// pinned in the reclaimer passed at construction while using any method.
class VersionTracker {
public:
    explicit VersionTracker(Reclaimer& rec);
    ~VersionTracker();
    VersionTracker(const VersionTracker&) = delete;
    VersionTracker& operator=(const VersionTracker&) = delete;

    // Tail timestamp; swings a lagging tail first.
    Timestamp current_ts() noexcept;
    std::pair<Timestamp, TrackerNode*> add_timestamp();
    static void mark_finished(TrackerNode* n) noexcept {
        n->finished.store(true, std::memory_order_release);
    }
    // Oldest unfinished entry's ts, or one past the newest entry if all are done.
    Timestamp min_active_ts(std::size_t tid);

    // Snapshots of the unfinished range queries. Any query that starts later
    // reads at or above the current tail, so chain heads cover it. Past
    // max_walk entries the rest is covered by keep_newer_than.
    PruneHorizon horizon(std::size_t tid, std::size_t max_walk = 1024);

    static bool prunable(Timestamp version_ts, bool tombstone, Timestamp min_active) noexcept {
        return tombstone && version_ts != TS_UNSET && version_ts < min_active;
    }

    static TrackerNode* sentinel_last() noexcept;

private:
    Reclaimer& rec_;
    alignas(64) std::atomic<TrackerNode*> head_;
    alignas(64) std::atomic<TrackerNode*> tail_;
};

}  // namespace uruv
