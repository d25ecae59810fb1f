#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace uruv {

// Base for objects handed to Reclaimer::retire; catches double retirement.
struct Retirable {
    std::atomic<bool> retired_{false};
};

// Epoch-based reclamation. Each registered thread owns a slot index; slots
// are chosen by the caller (the store hands them out at registration).
class Reclaimer {
public:
    using Deleter = void (*)(void*);

    explicit Reclaimer(std::size_t max_threads, std::size_t collect_every = 64);
    ~Reclaimer();
    Reclaimer(const Reclaimer&) = delete;
    Reclaimer& operator=(const Reclaimer&) = delete;

    class Guard {
    public:
        Guard(Reclaimer& r, std::size_t tid) : r_(&r), tid_(tid) { r_->enter(tid_); }
        Guard(Guard&& o) noexcept : r_(o.r_), tid_(o.tid_) { o.r_ = nullptr; }
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;
        Guard& operator=(Guard&&) = delete;
        ~Guard() {
            if (r_) r_->exit(tid_);
        }

    private:
        Reclaimer* r_;
        std::size_t tid_;
    };

    Guard pin(std::size_t tid) { return Guard(*this, tid); }
    void enter(std::size_t tid);
    void exit(std::size_t tid);
    bool pinned(std::size_t tid) const;

    // Returns false if p was already retired.
    template <class T>
    bool retire(std::size_t tid, T* p) {
        if (p == nullptr) return true;
        if (p->retired_.exchange(true, std::memory_order_acq_rel)) return false;
        retire_raw(tid, p, [](void* q) { delete static_cast<T*>(q); });
        return true;
    }
    void retire_raw(std::size_t tid, void* p, Deleter d);

    // Frees whatever the current epoch allows for this thread's list.
    void collect(std::size_t tid);
    // Caller guarantees no thread is inside an operation. Frees everything.
    void drain_all();

    std::uint64_t epoch() const { return global_.load(std::memory_order_acquire); }
    std::size_t capacity() const { return slots_.size(); }
    std::int64_t retired_total() const { return retired_.load(std::memory_order_relaxed); }
    std::int64_t freed_total() const { return freed_.load(std::memory_order_relaxed); }
    std::int64_t pending() const { return retired_total() - freed_total(); }

private:
    struct Item {
        void* p;
        Deleter d;
        std::uint64_t epoch;
    };
    struct alignas(64) Slot {
        std::atomic<std::uint64_t> state{0};  // epoch << 1 | active
        int nesting = 0;
        std::size_t since_collect = 0;
        std::vector<Item> bag;
    };

    bool try_advance();
    void free_upto(Slot& s, std::uint64_t limit_epoch);

    std::atomic<std::uint64_t> global_{2};
    std::vector<std::unique_ptr<Slot>> slots_;
    std::size_t collect_every_;
    std::atomic<std::int64_t> retired_{0};
    std::atomic<std::int64_t> freed_{0};
};

}  // namespace uruv
