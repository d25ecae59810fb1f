#include "uruv/hooks.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>

namespace uruv::hooks {

namespace {

std::atomic<int> g_count{0};
std::mutex g_mu;

// Copy-on-write so that firing never holds the lock while running a hook.
std::shared_ptr<const std::map<std::string, Hook>>& table() {
    static auto t = std::make_shared<const std::map<std::string, Hook>>();
    return t;
}

}  // namespace

bool compiled_in() noexcept {
#ifdef URUV_ENABLE_HOOKS
    return true;
#else
    return false;
#endif
}

void set(const std::string& name, Hook fn) {
    std::lock_guard lk(g_mu);
    auto next = std::make_shared<std::map<std::string, Hook>>(*table());
    (*next)[name] = std::move(fn);
    table() = std::move(next);
    g_count.store(static_cast<int>(table()->size()), std::memory_order_release);
}

void clear(const std::string& name) {
    std::lock_guard lk(g_mu);
    auto next = std::make_shared<std::map<std::string, Hook>>(*table());
    next->erase(name);
    table() = std::move(next);
    g_count.store(static_cast<int>(table()->size()), std::memory_order_release);
}

void clear_all() {
    std::lock_guard lk(g_mu);
    table() = std::make_shared<const std::map<std::string, Hook>>();
    g_count.store(0, std::memory_order_release);
}

namespace detail {

bool any_set() noexcept { return g_count.load(std::memory_order_acquire) != 0; }

bool fire(const char* name) {
    std::shared_ptr<const std::map<std::string, Hook>> snap;
    {
        std::lock_guard lk(g_mu);
        snap = table();
    }
    auto it = snap->find(name);
    if (it == snap->end() || !it->second) return false;
    return it->second();
}

}  // namespace detail

}  // namespace uruv::hooks
