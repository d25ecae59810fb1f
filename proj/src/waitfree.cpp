#include "uruv/waitfree.hpp"

#include <stdexcept>

#include "uruv/hooks.hpp"

namespace uruv {

void WaitFreeConfig::validate() const {
    if (fast_path_retries < 1) throw std::invalid_argument("fast_path_retries must be >= 1");
    if (helping_period < 1) throw std::invalid_argument("helping_period must be >= 1");
}

Store::Store(const StoreConfig& cfg)
    : cfg_(cfg), rec_(cfg.max_threads == 0 ? 1 : cfg.max_threads), tracker_(rec_),
      states_(std::make_unique<std::atomic<OperationState*>[]>(cfg.max_threads == 0 ? 1 : cfg.max_threads)),
      per_thread_(cfg.max_threads == 0 ? 1 : cfg.max_threads) {
    if (cfg.max_threads == 0) throw std::invalid_argument("max_threads must be >= 1");
    cfg_.wait_free.validate();
    tree_ = std::make_unique<Tree>(cfg_.tree, rec_, tracker_);
    for (std::size_t i = 0; i < cfg_.max_threads; ++i) states_[i].store(nullptr, std::memory_order_relaxed);
}

Store::~Store() {
    rec_.drain_all();
    tree_.reset();
    for (std::size_t i = 0; i < cfg_.max_threads; ++i) delete states_[i].load();
    rec_.drain_all();
}

ThreadHandle Store::register_thread() {
    std::size_t tid = nthreads_.load(std::memory_order_acquire);
    do {
        if (tid >= cfg_.max_threads) throw std::runtime_error("store: thread capacity exhausted");
    } while (!nthreads_.compare_exchange_weak(tid, tid + 1, std::memory_order_acq_rel));
    PerThread& pt = per_thread_[tid];
    pt.curr_tid = tid;
    pt.next_check = cfg_.wait_free.helping_period;
    return ThreadHandle{tid};
}

OpResult Store::insert(ThreadHandle h, Key key, Value value) {
    check_key(key);
    check_value(value);
    return execute(h, false, key, value);
}

OpResult Store::remove(ThreadHandle h, Key key) {
    check_key(key);
    return execute(h, true, key, TOMBSTONE);
}

OpResult Store::search(ThreadHandle h, Key key) {
    check_key(key);
    auto g = rec_.pin(h.tid);
    return tree_->search(key);
}

std::optional<Value> Store::get(ThreadHandle h, Key key) {
    OpResult r = search(h, key);
    return r.kind == OpKind::KeyNotPresent ? std::nullopt : r.value;
}

std::vector<std::pair<Key, Value>> Store::range_query(ThreadHandle h, Key low, Key high, Timestamp* snapshot) {
    check_key(low);
    check_key(high);
    auto g = rec_.pin(h.tid);
    return tree_->range_query(low, high, snapshot);
}

OpResult Store::execute(ThreadHandle h, bool is_delete, Key key, Value value) {
    const std::size_t tid = h.tid;
    auto g = rec_.pin(tid);
    OpResult r = OpResult::of(OpKind::Failed);
    if (!URUV_HOOK_VETO("waitfree:fast-path")) {
        const int f = cfg_.wait_free.fast_path_retries;
        r = is_delete ? tree_->remove(tid, key, f) : tree_->insert(tid, key, value, f);
    }
    if (r.failed()) r = slow_path(tid, is_delete, key, value);
    check_help(tid);
    return r;
}

OpResult Store::slow_path(std::size_t tid, bool is_delete, Key key, Value value) {
    slow_path_entries_.fetch_add(1, std::memory_order_relaxed);
    PerThread& pt = per_thread_[tid];
    auto* st = new OperationState(++pt.phase, is_delete, key, value);
    OperationState* old = states_[tid].exchange(st, std::memory_order_acq_rel);
    if (old != nullptr) rec_.retire(tid, old);
    URUV_HOOK("waitfree:after-announce");
    tree_->wf_apply(tid, *st);

    // The outcome is read off the shared version: what it was installed over.
    VersionNode* v = st->vnode;
    Timestamp ts = v->ts.load(std::memory_order_acquire);
    if (ts == TS_UNSET) return OpResult::of(OpKind::KeyNotPresent);
    VersionNode* pred = v->nextv.load(std::memory_order_acquire);
    if (pred == nullptr || is_tombstone(pred->value)) {
        return OpResult{is_delete ? OpKind::KeyNotPresent : OpKind::NewKeyInserted, std::nullopt,
                        is_delete ? TS_UNSET : ts};
    }
    return OpResult{OpKind::KeyUpdated, pred->value, ts};
}

void Store::record(PerThread& pt) {
    OperationState* st = states_[pt.curr_tid].load(std::memory_order_acquire);
    pt.last_phase = st != nullptr ? st->phase : 0;
    pt.recorded_pending = st != nullptr && !st->finished.load(std::memory_order_acquire);
}

void Store::check_help(std::size_t tid) {
    PerThread& pt = per_thread_[tid];
    if (--pt.next_check > 0) return;
    pt.next_check = cfg_.wait_free.helping_period;
    const std::size_t n = nthreads_.load(std::memory_order_acquire);
    if (n < 2) return;
    if (pt.curr_tid != tid && pt.curr_tid < n) {
        OperationState* st = states_[pt.curr_tid].load(std::memory_order_acquire);
        // A slot that was idle when recorded has announced since: help it too.
        if (st != nullptr && !st->finished.load(std::memory_order_acquire) &&
            (st->phase == pt.last_phase || !pt.recorded_pending)) {
            helps_.fetch_add(1, std::memory_order_relaxed);
            tree_->wf_apply(tid, *st);
        }
    }
    pt.curr_tid = (pt.curr_tid + 1) % n;
    if (pt.curr_tid == tid) pt.curr_tid = (pt.curr_tid + 1) % n;
    record(pt);
}

bool Store::help_slot(ThreadHandle h, std::size_t target) {
    auto g = rec_.pin(h.tid);
    OperationState* st = states_[target].load(std::memory_order_acquire);
    if (st == nullptr || st->finished.load(std::memory_order_acquire)) return false;
    helps_.fetch_add(1, std::memory_order_relaxed);
    tree_->wf_apply(h.tid, *st);
    return true;
}

bool Store::slot_finished(std::size_t target) const {
    OperationState* st = states_[target].load(std::memory_order_acquire);
    return st == nullptr || st->finished.load(std::memory_order_acquire);
}

const OperationState* Store::slot_state(std::size_t target) const {
    return states_[target].load(std::memory_order_acquire);
}

std::vector<const VersionNode*> Store::chain_of(ThreadHandle h, Key key) {
    auto g = rec_.pin(h.tid);
    return tree_->chain_of(key);
}

ValidationReport Store::validate_structure() const { return tree_->validate_structure(); }

StoreStats Store::stats() const {
    ValidationReport r = tree_->validate_structure();
    auto& c = const_cast<Tree&>(*tree_).counters();
    StoreStats s;
    s.leaves = r.leaves;
    s.internals = r.internals;
    s.live_keys = r.live_keys;
    s.depth = r.depth;
    s.search_descents = c.search_descents.load();
    s.search_restarts = c.search_restarts.load();
    s.slow_path_entries = slow_path_entries_.load();
    s.helps = helps_.load();
    s.rebalances = c.rebalances.load();
    s.restarts = c.restarts.load();
    s.max_attempts = c.max_attempts.load();
    s.double_retires = c.double_retires.load();
    s.retired = rec_.retired_total();
    s.freed = rec_.freed_total();
    return s;
}

void Store::quiesce() { rec_.drain_all(); }

}  // namespace uruv
