#include "uruv/versioned_list.hpp"

#include <cstdlib>

#include "uruv/hooks.hpp"

namespace uruv {

namespace {

// A value handed to a reader must come from a version whose ts is already set.
inline void require_ts(const VersionNode* v) {
    if (v->ts.load(std::memory_order_acquire) == TS_UNSET) std::abort();
}

}  // namespace

VersionNode::VersionNode(Value v, VersionNode* next, Timestamp t, bool is_shared)
    : value(v), ts(t), nextv(next), shared(is_shared), refs(is_shared ? 1 : 0) {
    alloc_counters().version_nodes.fetch_add(1, std::memory_order_relaxed);
}

VersionNode::~VersionNode() { alloc_counters().version_nodes.fetch_sub(1, std::memory_order_relaxed); }

VersionNode* VersionNode::make_shared(Value v) { return new VersionNode(v, nullptr, TS_UNSET, true); }

void VersionNode::release(VersionNode* v) noexcept {
    if (v == nullptr) return;
    if (!v->shared || v->refs.fetch_sub(1, std::memory_order_acq_rel) == 1) delete v;
}

KeyNode::KeyNode(Key k, VersionNode* head, KeyNode* succ) : key(k), vhead(head), next(succ) {
    alloc_counters().key_nodes.fetch_add(1, std::memory_order_relaxed);
}

KeyNode::~KeyNode() { alloc_counters().key_nodes.fetch_sub(1, std::memory_order_relaxed); }

OperationState::OperationState(std::uint64_t ph, bool del, Key k, Value v)
    : phase(ph), is_delete(del), key(k), value(del ? TOMBSTONE : v),
      vnode(VersionNode::make_shared(del ? TOMBSTONE : v)) {
    alloc_counters().op_states.fetch_add(1, std::memory_order_relaxed);
}

OperationState::~OperationState() {
    VersionNode::release(vnode);
    alloc_counters().op_states.fetch_sub(1, std::memory_order_relaxed);
}

bool OperationState::pending() const noexcept {
    return !finished.load(std::memory_order_acquire) &&
           vnode->ts.load(std::memory_order_acquire) == TS_UNSET;
}

VersionedList::VersionedList() {
    tail_ = new KeyNode(KEY_POS_INF, nullptr, nullptr);
    head_ = new KeyNode(KEY_NEG_INF, nullptr, tail_);
    build_last_ = head_;
}

VersionedList::~VersionedList() {
    KeyNode* n = head_;
    while (n != nullptr) {
        KeyNode* nx = n->next.load(std::memory_order_relaxed).get();
        VersionNode* v = n->vhead.load(std::memory_order_relaxed).get();
        while (v != nullptr) {
            VersionNode* older = v->nextv.load(std::memory_order_relaxed);
            VersionNode::release(v);
            v = older;
        }
        delete n;
        n = nx;
    }
}

std::optional<VersionedList::Position> VersionedList::find(Key key) const noexcept {
    KeyNode* pred = head_;
    for (;;) {
        Link<KeyNode> l = pred->next.load();
        if (l.marked()) return std::nullopt;
        KeyNode* succ = l.get();
        if (succ->key >= key) return Position{pred, succ};
        pred = succ;
    }
}

VersionedList::Position VersionedList::find_for_read(Key key) const noexcept {
    KeyNode* pred = head_;
    for (;;) {
        KeyNode* succ = pred->next.load().get();
        if (succ->key >= key) return Position{pred, succ};
        pred = succ;
    }
}

KeyNode* VersionedList::lookup(Key key) const noexcept {
    Position p = find_for_read(key);
    return p.succ->key == key ? p.succ : nullptr;
}

void VersionedList::init_timestamp(VersionNode* v, Timestamp current) noexcept {
    Timestamp expected = TS_UNSET;
    if (v->ts.load(std::memory_order_acquire) == TS_UNSET)
        v->ts.compare_exchange_strong(expected, current, std::memory_order_acq_rel);
}

void VersionedList::init_timestamp(VersionNode* v, ClockRef clock) {
    if (v->ts.load(std::memory_order_acquire) != TS_UNSET) return;
    init_timestamp(v, clock());
}

Value VersionedList::read_current(KeyNode* n, ClockRef clock) {
    VersionNode* h = n->vhead.load().get();
    init_timestamp(h, clock);
    require_ts(h);
    return h->value;
}

std::optional<Value> VersionedList::read_at(KeyNode* n, Timestamp t, ClockRef clock) {
    for (VersionNode* v = n->vhead.load().get(); v != nullptr; v = v->nextv.load(std::memory_order_acquire)) {
        init_timestamp(v, clock);
        require_ts(v);
        if (v->ts.load(std::memory_order_acquire) <= t) return v->value;
    }
    return std::nullopt;
}

CasOutcome VersionedList::version_cas(KeyNode* n, Value old_value, Value new_value, ClockRef clock,
                                      Timestamp* ts_out) {
    Link<VersionNode> h = n->vhead.load();
    VersionNode* hv = h.get();
    init_timestamp(hv, clock);
    if (h.marked()) return CasOutcome::Frozen;
    if (hv->value != old_value) return CasOutcome::Stale;
    if (hv->value == new_value) {
        if (ts_out) *ts_out = hv->ts.load();
        return CasOutcome::Unchanged;
    }
    auto* nv = new VersionNode(new_value, hv);
    if (n->vhead.cas(h, Link<VersionNode>(nv))) {
        installs_.fetch_add(1, std::memory_order_relaxed);
        init_timestamp(nv, clock);
        if (ts_out) *ts_out = nv->ts.load();
        return CasOutcome::Installed;
    }
    delete nv;
    Link<VersionNode> cur = n->vhead.load();
    init_timestamp(cur.get(), clock);
    return cur.marked() ? CasOutcome::Frozen : CasOutcome::Lost;
}

CasOutcome VersionedList::wf_version_cas(KeyNode* n, VersionNode* shared, VersionNode* expected_nextv,
                                         Link<VersionNode> observed_vhead, ClockRef clock) {
    VersionNode* hv = observed_vhead.get();
    init_timestamp(hv, clock);
    if (shared->ts.load(std::memory_order_acquire) != TS_UNSET) return CasOutcome::Finished;
    if (observed_vhead.marked()) return CasOutcome::Frozen;
    URUV_HOOK("wfVCAS:before-nextv-cas");
    VersionNode* e = expected_nextv;
    if (!shared->nextv.compare_exchange_strong(e, hv, std::memory_order_acq_rel)) return CasOutcome::Lost;
    URUV_HOOK("wfVCAS:before-vhead-cas");
    if (n->vhead.cas(observed_vhead, Link<VersionNode>(shared))) {
        shared->refs.fetch_add(1, std::memory_order_acq_rel);
        installs_.fetch_add(1, std::memory_order_relaxed);
        init_timestamp(shared, clock);
        return CasOutcome::Installed;
    }
    return CasOutcome::Lost;
}

OpResult VersionedList::insert(Key key, Value value, ClockRef clock) {
    for (;;) {
        auto pos = find(key);
        if (!pos) return OpResult::of(OpKind::Failed);
        KeyNode* succ = pos->succ;
        if (succ->key == key) {
            for (;;) {
                Link<VersionNode> h = succ->vhead.load();
                if (h.marked()) return OpResult::of(OpKind::Failed);
                VersionNode* hv = h.get();
                init_timestamp(hv, clock);
                Value prev = hv->value;
                if (prev == value) {
                    if (is_tombstone(value)) return OpResult::of(OpKind::KeyNotPresent);
                    return OpResult{OpKind::KeyUpdated, prev, hv->ts.load()};
                }
                Timestamp ts = TS_UNSET;
                CasOutcome r = version_cas(succ, prev, value, clock, &ts);
                if (r == CasOutcome::Frozen) return OpResult::of(OpKind::Failed);
                if (r != CasOutcome::Installed) continue;
                if (is_tombstone(prev)) {
                    return OpResult{OpKind::NewKeyInserted, std::nullopt, ts};
                }
                return OpResult{OpKind::KeyUpdated, prev, ts};
            }
        }
        if (is_tombstone(value)) return OpResult::of(OpKind::KeyNotPresent);
        auto* v = new VersionNode(value);
        auto* kn = new KeyNode(key, v, succ);
        if (pos->pred->next.cas(succ, kn)) {
            size_.fetch_add(1, std::memory_order_relaxed);
            installs_.fetch_add(1, std::memory_order_relaxed);
            init_timestamp(v, clock);
            return OpResult{OpKind::NewKeyInserted, std::nullopt, v->ts.load()};
        }
        delete v;
        delete kn;
    }
}

OpResult VersionedList::remove(Key key, ClockRef clock) { return insert(key, TOMBSTONE, clock); }

OpResult VersionedList::wf_insert(OperationState& st, ClockRef clock) {
    VersionNode* v = st.vnode;
    for (;;) {
        if (st.finished.load(std::memory_order_acquire)) return OpResult::of(OpKind::OperationFinished);
        if (v->ts.load(std::memory_order_acquire) != TS_UNSET) {
            st.finished.store(true, std::memory_order_release);
            return OpResult::of(OpKind::OperationFinished);
        }
        auto pos = find(st.key);
        if (!pos) return OpResult::of(OpKind::Failed);
        KeyNode* succ = pos->succ;
        if (succ->key != st.key) {
            // Link the key with a timestamped tombstone base; the shared node
            // then goes on top through the ordinary wait-free version CAS.
            auto* base = new VersionNode(TOMBSTONE, nullptr, clock());
            auto* kn = new KeyNode(st.key, base, succ);
            URUV_HOOK("wfLLInsert:before-link-cas");
            if (pos->pred->next.cas(succ, kn)) {
                size_.fetch_add(1, std::memory_order_relaxed);
            } else {
                delete base;
                delete kn;
            }
            continue;
        }
        VersionNode* e = v->nextv.load(std::memory_order_acquire);
        Link<VersionNode> h = succ->vhead.load();
        URUV_HOOK("wfLLInsert:after-read-vhead");
        switch (wf_version_cas(succ, v, e, h, clock)) {
            case CasOutcome::Installed:
            case CasOutcome::Finished:
                st.finished.store(true, std::memory_order_release);
                return OpResult::of(OpKind::OperationFinished);
            case CasOutcome::Frozen:
                return OpResult::of(OpKind::Failed);
            default:
                break;
        }
    }
}

void VersionedList::freeze() noexcept {
    KeyNode* n = head_;
    while (n != nullptr) {
        Link<KeyNode> nx = n->next.freeze();
        if (n->key != KEY_NEG_INF && n->key != KEY_POS_INF) n->vhead.freeze();
        n = nx.get();
    }
}

void VersionedList::append_unpublished(Key key, VersionNode* chain) {
    auto* kn = new KeyNode(key, chain, tail_);
    build_last_->next.store(Link<KeyNode>(kn), std::memory_order_relaxed);
    build_last_ = kn;
    size_.fetch_add(1, std::memory_order_relaxed);
}

VersionNode* VersionedList::copy_chain(const VersionNode* head, Timestamp min_active) {
    VersionNode* out_head = nullptr;
    VersionNode* out_tail = nullptr;
    for (const VersionNode* v = head; v != nullptr; v = v->nextv.load(std::memory_order_acquire)) {
        Timestamp ts = v->ts.load(std::memory_order_acquire);
        if (ts == TS_UNSET) std::abort();
        if (ts < min_active && out_head != nullptr && is_tombstone(v->value)) break;
        auto* c = new VersionNode(v->value, nullptr, ts);
        if (out_tail) {
            out_tail->nextv.store(c, std::memory_order_relaxed);
        } else {
            out_head = c;
        }
        out_tail = c;
        if (ts < min_active) break;
    }
    return out_head;
}

VersionNode* VersionedList::copy_chain(const VersionNode* head, const PruneHorizon& h) {
    VersionNode* out_head = nullptr;
    VersionNode* out_tail = nullptr;
    VersionNode* last_value = nullptr;
    std::size_t r = 0;
    Timestamp newer = TS_MAX;
    for (const VersionNode* v = head; v != nullptr; v = v->nextv.load(std::memory_order_acquire)) {
        Timestamp ts = v->ts.load(std::memory_order_acquire);
        if (ts == TS_UNSET) std::abort();
        // Snapshots at or above the newer neighbour read that neighbour.
        while (r < h.reads.size() && h.reads[r] >= newer) ++r;
        bool keep = v == head || ts > h.keep_newer_than || (r < h.reads.size() && h.reads[r] >= ts);
        if (keep) {
            auto* c = new VersionNode(v->value, nullptr, ts);
            if (out_tail) {
                out_tail->nextv.store(c, std::memory_order_relaxed);
            } else {
                out_head = c;
            }
            out_tail = c;
            if (!is_tombstone(v->value)) last_value = c;
        }
        newer = ts;
        while (r < h.reads.size() && h.reads[r] >= ts) ++r;
        if (r == h.reads.size() && ts <= h.keep_newer_than) break;
    }
    // Readers treat a missing version like a tombstone.
    VersionNode* cut = last_value ? last_value->nextv.load(std::memory_order_relaxed) : out_head;
    if (last_value) last_value->nextv.store(nullptr, std::memory_order_relaxed);
    while (cut) {
        VersionNode* n = cut->nextv.load(std::memory_order_relaxed);
        delete cut;
        cut = n;
    }
    return last_value ? out_head : nullptr;
}

}  // namespace uruv
