#include "uruv/core.hpp"

namespace uruv {

const char* to_string(OpKind k) noexcept {
    switch (k) {
        case OpKind::NewKeyInserted: return "NewKeyInserted";
        case OpKind::KeyUpdated: return "KeyUpdated";
        case OpKind::KeyNotPresent: return "KeyNotPresent";
        case OpKind::OperationFinished: return "OperationFinished";
        case OpKind::Failed: return "Failed";
    }
    return "?";
}

AllocCounters& alloc_counters() noexcept {
    static AllocCounters c;
    return c;
}

}  // namespace uruv
