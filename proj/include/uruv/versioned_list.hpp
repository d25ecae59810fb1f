#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <type_traits>

#include "uruv/core.hpp"
#include "uruv/op_state.hpp"

namespace uruv {

// Non-owning reference to something callable as Timestamp().
class ClockRef {
public:
    template <class F>
        requires(!std::is_same_v<std::remove_cvref_t<F>, ClockRef>)
    ClockRef(F& f) noexcept  // NOLINT(google-explicit-constructor)
        : obj_(&f), fn_([](void* o) -> Timestamp { return (*static_cast<F*>(o))(); }) {}
    Timestamp operator()() const { return fn_(obj_); }

private:
    void* obj_;
    Timestamp (*fn_)(void*);
};

struct VersionNode {
    const Value value;
    std::atomic<Timestamp> ts;
    std::atomic<VersionNode*> nextv;
    // Shared nodes belong to an announcement and to at most one chain.
    const bool shared;
    std::atomic<int> refs;

    explicit VersionNode(Value v, VersionNode* next = nullptr, Timestamp t = TS_UNSET,
                         bool is_shared = false);
    ~VersionNode();
    VersionNode(const VersionNode&) = delete;
    VersionNode& operator=(const VersionNode&) = delete;

    static VersionNode* make_shared(Value v);
    // Drops one reference (shared) or deletes (private).
    static void release(VersionNode* v) noexcept;
};

struct KeyNode {
    const Key key;
    AtomicLink<VersionNode> vhead;
    AtomicLink<KeyNode> next;

    KeyNode(Key k, VersionNode* head, KeyNode* succ = nullptr);
    ~KeyNode();
    KeyNode(const KeyNode&) = delete;
    KeyNode& operator=(const KeyNode&) = delete;
};

enum class CasOutcome : std::uint8_t {
    Installed,
    Unchanged,  // head already held the new value
    Finished,   // the shared node already carries a timestamp
    Stale,      // head value differs from the expected one
    Lost,       // a concurrent update won
    Frozen,
};

class VersionedList {
public:
    struct Position {
        KeyNode* pred;
        KeyNode* succ;
    };

    VersionedList();
    ~VersionedList();
    VersionedList(const VersionedList&) = delete;
    VersionedList& operator=(const VersionedList&) = delete;

    KeyNode* head() const noexcept { return head_; }

    // nullopt means a marked link was met (the list is being frozen).
    std::optional<Position> find(Key key) const noexcept;
    // Same walk but ignores marks; for readers.
    Position find_for_read(Key key) const noexcept;
    KeyNode* lookup(Key key) const noexcept;

    static void init_timestamp(VersionNode* v, Timestamp current) noexcept;
    static void init_timestamp(VersionNode* v, ClockRef clock);
    static Value read_current(KeyNode* n, ClockRef clock);
    static std::optional<Value> read_at(KeyNode* n, Timestamp t, ClockRef clock);

    CasOutcome version_cas(KeyNode* n, Value old_value, Value new_value, ClockRef clock,
                           Timestamp* ts_out = nullptr);
    CasOutcome wf_version_cas(KeyNode* n, VersionNode* shared, VersionNode* expected_nextv,
                              Link<VersionNode> observed_vhead, ClockRef clock);

    // Put semantics; `value` may be TOMBSTONE only on the delete path.
    OpResult insert(Key key, Value value, ClockRef clock);
    OpResult remove(Key key, ClockRef clock);
    // Returns OperationFinished once the announced operation has taken effect.
    OpResult wf_insert(OperationState& st, ClockRef clock);

    void freeze() noexcept;
    bool frozen() const noexcept { return head_->next.load().marked(); }

    template <class Sink>
    void collect_range(Key low, Key high, Timestamp t, Sink&& sink, ClockRef clock) const {
        for (KeyNode* n = head_->next.load().get(); n->key != KEY_POS_INF; n = n->next.load().get()) {
            if (n->key < low) continue;
            if (n->key > high) break;
            auto v = read_at(n, t, clock);
            if (v && !is_tombstone(*v)) sink(n->key, *v);
        }
    }

    template <class F>
    void for_each(F&& f) const {
        for (KeyNode* n = head_->next.load().get(); n->key != KEY_POS_INF; n = n->next.load().get()) f(n);
    }

    // Builders for lists that are not yet published.
    void append_unpublished(Key key, VersionNode* chain);
    // Deep copy of a fully timestamped chain keeping the newest version older
    // than min_active and everything newer. A trailing tombstone is dropped.
    static VersionNode* copy_chain(const VersionNode* head, Timestamp min_active);
    // Keeps only what the horizon needs; trailing tombstones are dropped, so
    // the result is null when no reader can see a value under this key.
    static VersionNode* copy_chain(const VersionNode* head, const PruneHorizon& h);

    std::size_t size() const noexcept { return size_.load(std::memory_order_relaxed); }
    std::size_t installs() const noexcept { return installs_.load(std::memory_order_relaxed); }

private:
    KeyNode* head_;
    KeyNode* tail_;
    KeyNode* build_last_;  // only used while building
    std::atomic<std::size_t> size_{0};
    std::atomic<std::size_t> installs_{0};
};

}  // namespace uruv
