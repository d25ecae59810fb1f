#pragma once

#include <atomic>
#include <cstdint>

#include "uruv/core.hpp"
#include "uruv/reclamation.hpp"

namespace uruv {

struct VersionNode;
struct KeyNode;

// search_node encoding for announced deletes.
inline constexpr std::uintptr_t SEARCH_DUMMY = 1;
inline constexpr std::uintptr_t SEARCH_ABSENT = 0;

// One announcement. Immutable apart from `finished` and `search_node`; a new
// object is published for every phase and the old one retired.
struct OperationState : Retirable {
    std::uint64_t phase;
    bool is_delete;
    Key key;
    Value value;
    VersionNode* vnode;  // shared, refcounted
    std::atomic<bool> finished{false};
    std::atomic<std::uintptr_t> search_node{SEARCH_DUMMY};

    OperationState(std::uint64_t phase, bool is_delete, Key key, Value value);
    ~OperationState();
    OperationState(const OperationState&) = delete;
    OperationState& operator=(const OperationState&) = delete;

    bool pending() const noexcept;
};

}  // namespace uruv
