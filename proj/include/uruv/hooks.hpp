#pragma once

// Named pause points for forcing interleavings in tests. They compile to
// nothing unless URUV_ENABLE_HOOKS is defined (the uruv_testing target).

#include <functional>
#include <string>

namespace uruv::hooks {

// A hook returns true to request that the surrounding step fail (only honoured
// at veto points); plain pause points ignore the return value.
using Hook = std::function<bool()>;

bool compiled_in() noexcept;
void set(const std::string& name, Hook fn);
void clear(const std::string& name);
void clear_all();

namespace detail {
bool any_set() noexcept;
bool fire(const char* name);
}  // namespace detail

}  // namespace uruv::hooks

#ifdef URUV_ENABLE_HOOKS
#define URUV_HOOK(name)                                                   \
    do {                                                                  \
        if (::uruv::hooks::detail::any_set()) ::uruv::hooks::detail::fire(name); \
    } while (0)
#define URUV_HOOK_VETO(name) \
    (::uruv::hooks::detail::any_set() && ::uruv::hooks::detail::fire(name))
#else
#define URUV_HOOK(name) \
    do {                \
    } while (0)
#define URUV_HOOK_VETO(name) false
#endif
