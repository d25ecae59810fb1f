#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "uruv/core.hpp"
#include "uruv/op_state.hpp"
#include "uruv/reclamation.hpp"
#include "uruv/version_tracker.hpp"
#include "uruv/versioned_list.hpp"

namespace uruv {

struct TreeConfig {
    int max_keys = 32;
    int min_keys = 8;
    int leaf_max = 32;
    int leaf_min = 8;
    // Version installs a leaf accepts before it freezes for a pruning copy.
    // Zero means leaf_max.
    int version_budget = 0;

    void validate() const;
    int budget() const noexcept { return version_budget > 0 ? version_budget : leaf_max; }
};

struct Node : Retirable {
    const bool is_leaf;
    explicit Node(bool leaf) : is_leaf(leaf) {}
    virtual ~Node() = default;
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;
};

enum class GroupKind : std::uint8_t { Copy, Split, Merge, Borrow };

struct LeafNode : Node {
    VersionedList list;
    std::atomic<bool> frozen{false};
    // Leader of the replacement group; set once.
    std::atomic<LeafNode*> new_next{nullptr};
    Timestamp ts;

    // Group descriptor, meaningful on a leader and immutable once published.
    GroupKind kind = GroupKind::Copy;
    LeafNode* partner = nullptr;
    Key sep = 0;
    int sibling_side = 0;  // -1 left, +1 right, for Merge/Borrow

    explicit LeafNode(Timestamp created);
    ~LeafNode() override;
};

inline constexpr int HELP_NONE = -1;
inline constexpr int HELP_WHOLE = -2;

struct InternalNode : Node {
    const std::vector<Key> keys;
    const std::size_t nchildren;
    std::unique_ptr<AtomicLink<Node>[]> children;
    std::atomic<int> help_idx{HELP_NONE};

    InternalNode(std::vector<Key> k, const std::vector<Node*>& ch);
    ~InternalNode() override;

    std::size_t nkeys() const noexcept { return keys.size(); }
    Node* child(std::size_t i) const noexcept { return children[i].load().get(); }
    std::size_t route(Key key) const noexcept;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
    std::size_t leaves = 0;
    std::size_t internals = 0;
    std::size_t key_nodes = 0;
    std::size_t live_keys = 0;
    std::size_t version_nodes = 0;
    std::size_t depth = 0;
    std::size_t pending_plans = 0;
    std::size_t frozen_leaves = 0;

    void fail(std::string msg) {
        ok = false;
        if (violations.size() < 32) violations.push_back(std::move(msg));
    }
};

struct TreeCounters {
    std::atomic<std::int64_t> rebalances{0};
    std::atomic<std::int64_t> plan_helps{0};
    std::atomic<std::int64_t> restarts{0};
    std::atomic<std::int64_t> search_descents{0};
    std::atomic<std::int64_t> search_restarts{0};
    std::atomic<std::int64_t> double_retires{0};
    std::atomic<std::int64_t> max_attempts{0};
};

// The B+tree index. Every method expects the caller to be pinned in the
// reclaimer under slot `tid`.
class Tree {
public:
    static constexpr int UNBOUNDED = 1 << 30;

    Tree(const TreeConfig& cfg, Reclaimer& rec, VersionTracker& tracker);
    ~Tree();
    Tree(const Tree&) = delete;
    Tree& operator=(const Tree&) = delete;

    // Lock-free operations. Failed only when max_attempts restarts are used up.
    OpResult insert(std::size_t tid, Key key, Value value, int max_attempts = UNBOUNDED);
    OpResult remove(std::size_t tid, Key key, int max_attempts = UNBOUNDED);
    // Hit: {OperationFinished, value}. Miss: {KeyNotPresent}.
    OpResult search(Key key);
    std::vector<std::pair<Key, Value>> range_query(Key low, Key high, Timestamp* snapshot = nullptr);

    // Drives an announced operation until its state is finished.
    void wf_apply(std::size_t tid, OperationState& st);

    ValidationReport validate_structure() const;
    const TreeConfig& config() const noexcept { return cfg_; }
    TreeCounters& counters() noexcept { return counters_; }
    Timestamp now() { return tracker_.current_ts(); }

    // Introspection for tests (caller pinned).
    Node* root() const noexcept { return root_.load(std::memory_order_acquire); }
    LeafNode* leaf_for(Key key) const noexcept;
    std::vector<const VersionNode*> chain_of(Key key) const;
    bool set_help_idx(InternalNode* n, int idx) noexcept;
    static void freeze_internal(InternalNode* n) noexcept;
    static void freeze_leaf(LeafNode* l) noexcept;

    // Leaf-level operations, exposed for unit tests.
    OpResult insert_leaf(LeafNode* leaf, Key key, Value value);
    OpResult delete_leaf(LeafNode* leaf, Key key);
    OpResult wf_insert_leaf(LeafNode* leaf, OperationState& st);
    OpResult wf_delete_leaf(LeafNode* leaf, OperationState& st);

private:
    struct Clock {
        VersionTracker* t;
        Timestamp operator()() const { return t->current_ts(); }
    };
    enum class Mode { Insert, Delete };
    struct PlanCtx;

    template <class LeafFn>
    OpResult descend(std::size_t tid, Key key, Mode mode, int max_attempts, LeafFn&& fn);
    bool balance_root(std::size_t tid, Node* root);
    bool underflow_improves(const InternalNode* parent, std::size_t ci, const InternalNode* c) const;
    void help(std::size_t tid, InternalNode* prev, std::size_t pidx, InternalNode* curr);
    void help_root_leaf(std::size_t tid, LeafNode* root);

    InternalNode* plan(InternalNode* p, PlanCtx& ctx);
    InternalNode* doom_and_plan(InternalNode* c, PlanCtx& ctx);
    LeafNode* claim_group(std::size_t tid, LeafNode* target, LeafNode* sibling, int side, bool root);
    std::vector<std::pair<Key, VersionNode*>> pruned_entries(LeafNode* leaf, const PruneHorizon& horizon);
    LeafNode* build_leaf(std::vector<std::pair<Key, VersionNode*>>::iterator b,
                         std::vector<std::pair<Key, VersionNode*>>::iterator e, Timestamp ts);
    void finish_plan(PlanCtx& ctx, bool won);
    void retire_node(std::size_t tid, Node* n);

    static void free_subtree(Node* n, std::vector<LeafNode*>& groups);

    TreeConfig cfg_;
    Reclaimer& rec_;
    VersionTracker& tracker_;
    Clock clock_fn_;
    alignas(64) std::atomic<Node*> root_;
    TreeCounters counters_;
};

}  // namespace uruv
