#include "uruv/reclamation.hpp"

#include <cassert>
#include <stdexcept>

namespace uruv {

Reclaimer::Reclaimer(std::size_t max_threads, std::size_t collect_every)
    : collect_every_(collect_every == 0 ? 1 : collect_every) {
    if (max_threads == 0) throw std::invalid_argument("reclaimer needs at least one slot");
    slots_.reserve(max_threads);
    for (std::size_t i = 0; i < max_threads; ++i) slots_.push_back(std::make_unique<Slot>());
}

Reclaimer::~Reclaimer() { drain_all(); }

void Reclaimer::enter(std::size_t tid) {
    Slot& s = *slots_.at(tid);
    if (s.nesting++ > 0) return;
    std::uint64_t e = global_.load(std::memory_order_acquire);
    s.state.store((e << 1) | 1U, std::memory_order_seq_cst);
    std::atomic_thread_fence(std::memory_order_seq_cst);
}

void Reclaimer::exit(std::size_t tid) {
    Slot& s = *slots_[tid];
    assert(s.nesting > 0);
    if (--s.nesting > 0) return;
    s.state.store(0, std::memory_order_release);
}

bool Reclaimer::pinned(std::size_t tid) const { return slots_.at(tid)->nesting > 0; }

void Reclaimer::retire_raw(std::size_t tid, void* p, Deleter d) {
    Slot& s = *slots_.at(tid);
    s.bag.push_back(Item{p, d, global_.load(std::memory_order_acquire)});
    retired_.fetch_add(1, std::memory_order_relaxed);
    if (++s.since_collect >= collect_every_) {
        s.since_collect = 0;
        collect(tid);
    }
}

bool Reclaimer::try_advance() {
    std::uint64_t e = global_.load(std::memory_order_acquire);
    std::atomic_thread_fence(std::memory_order_seq_cst);
    for (const auto& sp : slots_) {
        std::uint64_t st = sp->state.load(std::memory_order_acquire);
        if ((st & 1U) != 0 && (st >> 1) != e) return false;
    }
    return global_.compare_exchange_strong(e, e + 1, std::memory_order_acq_rel);
}

void Reclaimer::free_upto(Slot& s, std::uint64_t limit_epoch) {
    std::size_t keep = 0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < s.bag.size(); ++i) {
        Item it = s.bag[i];
        if (it.epoch + 2 <= limit_epoch) {
            it.d(it.p);
            ++n;
        } else {
            s.bag[keep++] = it;
        }
    }
    s.bag.resize(keep);
    freed_.fetch_add(n, std::memory_order_relaxed);
}

void Reclaimer::collect(std::size_t tid) {
    try_advance();
    free_upto(*slots_[tid], global_.load(std::memory_order_acquire));
}

void Reclaimer::drain_all() {
    // Freeing can retire nothing new, but deleters may be slow; loop until empty.
    for (auto& sp : slots_) {
        free_upto(*sp, ~std::uint64_t{0});
    }
}

}  // namespace uruv
