#include "uruv/version_tracker.hpp"

#include <algorithm>

namespace uruv {

TrackerNode* VersionTracker::sentinel_last() noexcept {
    static TrackerNode last{TrackerNode::Uncounted{}};
    return &last;
}

TrackerNode::TrackerNode() : next(nullptr) {
    alloc_counters().tracker_nodes.fetch_add(1, std::memory_order_relaxed);
}
TrackerNode::~TrackerNode() {
    if (counted_) alloc_counters().tracker_nodes.fetch_sub(1, std::memory_order_relaxed);
}

VersionTracker::VersionTracker(Reclaimer& rec) : rec_(rec) {
    auto* g = new TrackerNode();
    g->ts = 1;
    g->finished.store(true, std::memory_order_relaxed);
    g->next.store(sentinel_last(), std::memory_order_relaxed);
    head_.store(g, std::memory_order_release);
    tail_.store(g, std::memory_order_release);
}

VersionTracker::~VersionTracker() {
    TrackerNode* n = head_.load(std::memory_order_acquire);
    while (n != sentinel_last()) {
        TrackerNode* nx = n->next.load(std::memory_order_acquire);
        delete n;
        n = nx;
    }
}

Timestamp VersionTracker::current_ts() noexcept {
    for (;;) {
        TrackerNode* t = tail_.load(std::memory_order_acquire);
        TrackerNode* n = t->next.load(std::memory_order_acquire);
        if (n == sentinel_last()) return t->ts;
        tail_.compare_exchange_strong(t, n, std::memory_order_acq_rel);
    }
}

std::pair<Timestamp, TrackerNode*> VersionTracker::add_timestamp() {
    auto* node = new TrackerNode();
    node->next.store(sentinel_last(), std::memory_order_relaxed);
    for (;;) {
        TrackerNode* t = tail_.load(std::memory_order_acquire);
        TrackerNode* n = t->next.load(std::memory_order_acquire);
        if (n != sentinel_last()) {
            tail_.compare_exchange_strong(t, n, std::memory_order_acq_rel);
            continue;
        }
        node->ts = t->ts + 1;
        TrackerNode* expected = sentinel_last();
        if (t->next.compare_exchange_strong(expected, node, std::memory_order_acq_rel)) {
            tail_.compare_exchange_strong(t, node, std::memory_order_acq_rel);
            return {node->ts, node};
        }
    }
}

Timestamp VersionTracker::min_active_ts(std::size_t tid) {
    for (;;) {
        TrackerNode* h = head_.load(std::memory_order_acquire);
        if (!h->finished.load(std::memory_order_acquire)) return h->ts;
        TrackerNode* n = h->next.load(std::memory_order_acquire);
        if (n == sentinel_last()) return h->ts + 1;
        // Never let head pass tail.
        TrackerNode* t = h;
        tail_.compare_exchange_strong(t, n, std::memory_order_acq_rel);
        if (head_.compare_exchange_strong(h, n, std::memory_order_acq_rel)) rec_.retire(tid, h);
    }
}

PruneHorizon VersionTracker::horizon(std::size_t tid, std::size_t max_walk) {
    min_active_ts(tid);
    PruneHorizon h;
    std::size_t walked = 0;
    for (TrackerNode* n = head_.load(std::memory_order_acquire); n != sentinel_last();
         n = n->next.load(std::memory_order_acquire)) {
        if (++walked > max_walk) {
            h.keep_newer_than = n->ts - 1;
            h.reads.push_back(n->ts - 1);
            break;
        }
        if (!n->finished.load(std::memory_order_acquire)) h.reads.push_back(n->ts - 1);
    }
    // The list is in ts order, so reads are ascending here.
    h.reads.erase(std::unique(h.reads.begin(), h.reads.end()), h.reads.end());
    std::reverse(h.reads.begin(), h.reads.end());
    return h;
}

}  // namespace uruv
