#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uruv {

using Key = std::uint64_t;
using Value = std::uint64_t;
using Timestamp = std::int64_t;

inline constexpr Key KEY_NEG_INF = 0;
inline constexpr Key KEY_POS_INF = std::numeric_limits<Key>::max();
inline constexpr Value TOMBSTONE = std::numeric_limits<Value>::max();
inline constexpr Timestamp TS_UNSET = -1;
inline constexpr Timestamp TS_MAX = std::numeric_limits<Timestamp>::max();

// What a leaf copy has to preserve: the head of every chain, the newest
// version at or below each running range query's snapshot, and everything
// newer than keep_newer_than.
struct PruneHorizon {
    std::vector<Timestamp> reads;  // descending, no duplicates
    Timestamp keep_newer_than = TS_MAX;
};

inline constexpr bool is_tombstone(Value v) noexcept { return v == TOMBSTONE; }
inline constexpr bool is_user_key(Key k) noexcept { return k != KEY_NEG_INF && k != KEY_POS_INF; }
inline constexpr bool is_user_value(Value v) noexcept { return v != TOMBSTONE; }

inline void check_key(Key k) {
    if (!is_user_key(k)) throw std::invalid_argument("reserved key " + std::to_string(k));
}
inline void check_value(Value v) {
    if (!is_user_value(v)) throw std::invalid_argument("reserved value (tombstone)");
}

// A pointer word with the low bit used as the freezing mark.
template <class T>
struct Link {
    std::uintptr_t word = 0;

    constexpr Link() = default;
    explicit constexpr Link(std::uintptr_t w) : word(w) {}
    explicit Link(T* p) : word(reinterpret_cast<std::uintptr_t>(p)) {}

    T* get() const noexcept { return reinterpret_cast<T*>(word & ~std::uintptr_t{1}); }
    T* operator->() const noexcept { return get(); }
    bool marked() const noexcept { return (word & 1U) != 0; }
    explicit operator bool() const noexcept { return get() != nullptr; }
    friend bool operator==(Link a, Link b) noexcept { return a.word == b.word; }
};

template <class T>
Link<T> mark(Link<T> l) noexcept { return Link<T>(l.word | 1U); }
template <class T>
Link<T> unmark(Link<T> l) noexcept { return Link<T>(l.word & ~std::uintptr_t{1}); }
template <class T>
bool is_marked(Link<T> l) noexcept { return l.marked(); }

template <class T>
class AtomicLink {
public:
    AtomicLink() = default;
    explicit AtomicLink(T* p) : word_(reinterpret_cast<std::uintptr_t>(p)) {}

    Link<T> load(std::memory_order mo = std::memory_order_acquire) const noexcept {
        return Link<T>(word_.load(mo));
    }
    // Only for initialisation before publication.
    void store(Link<T> l, std::memory_order mo = std::memory_order_release) noexcept {
        word_.store(l.word, mo);
    }
    void store(T* p) noexcept { store(Link<T>(p)); }

    // A marked word is frozen: no update may start from it.
    bool cas(Link<T> expected, Link<T> desired) noexcept {
        if (expected.marked()) return false;
        std::uintptr_t e = expected.word;
        return word_.compare_exchange_strong(e, desired.word, std::memory_order_acq_rel,
                                             std::memory_order_acquire);
    }
    bool cas(T* expected, T* desired) noexcept { return cas(Link<T>(expected), Link<T>(desired)); }

    // Sets the mark; returns the (now marked) word. Idempotent.
    Link<T> freeze() noexcept {
        std::uintptr_t w = word_.load(std::memory_order_acquire);
        while ((w & 1U) == 0) {
            if (word_.compare_exchange_weak(w, w | 1U, std::memory_order_acq_rel,
                                            std::memory_order_acquire))
                return Link<T>(w | 1U);
        }
        return Link<T>(w);
    }

private:
    std::atomic<std::uintptr_t> word_{0};
};

enum class OpKind : std::uint8_t {
    NewKeyInserted,
    KeyUpdated,
    KeyNotPresent,
    OperationFinished,
    Failed,
};

const char* to_string(OpKind k) noexcept;

// For updates `value` is the value the operation replaced (absent for a fresh key)
// and `ts` the timestamp of the installed version. For search `value` is the hit.
struct OpResult {
    OpKind kind = OpKind::Failed;
    std::optional<Value> value;
    Timestamp ts = TS_UNSET;

    static OpResult of(OpKind k) { return OpResult{k, std::nullopt, TS_UNSET}; }
    bool failed() const noexcept { return kind == OpKind::Failed; }
    friend bool operator==(const OpResult&, const OpResult&) = default;
};

// Process-wide allocation counters, used by memory-bound tests.
struct AllocCounters {
    std::atomic<std::int64_t> version_nodes{0};
    std::atomic<std::int64_t> key_nodes{0};
    std::atomic<std::int64_t> leaves{0};
    std::atomic<std::int64_t> internals{0};
    std::atomic<std::int64_t> tracker_nodes{0};
    std::atomic<std::int64_t> op_states{0};
};
AllocCounters& alloc_counters() noexcept;

}  // namespace uruv
