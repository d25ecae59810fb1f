#include "uruv/tree.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "uruv/hooks.hpp"

namespace uruv {

void TreeConfig::validate() const {
    if (min_keys < 2 || max_keys < 2 * min_keys)
        throw std::invalid_argument("tree config: need max_keys >= 2*min_keys >= 4");
    if (leaf_min < 2 || leaf_max < 2 * leaf_min)
        throw std::invalid_argument("tree config: need leaf_max >= 2*leaf_min >= 4");
    if (version_budget < 0) throw std::invalid_argument("tree config: version_budget must be >= 0");
}

LeafNode::LeafNode(Timestamp created) : Node(true), ts(created) {
    alloc_counters().leaves.fetch_add(1, std::memory_order_relaxed);
}

LeafNode::~LeafNode() { alloc_counters().leaves.fetch_sub(1, std::memory_order_relaxed); }

InternalNode::InternalNode(std::vector<Key> k, const std::vector<Node*>& ch)
    : Node(false), keys(std::move(k)), nchildren(ch.size()),
      children(std::make_unique<AtomicLink<Node>[]>(ch.size())) {
    for (std::size_t i = 0; i < ch.size(); ++i) children[i].store(Link<Node>(ch[i]), std::memory_order_relaxed);
    alloc_counters().internals.fetch_add(1, std::memory_order_relaxed);
}

InternalNode::~InternalNode() { alloc_counters().internals.fetch_sub(1, std::memory_order_relaxed); }

std::size_t InternalNode::route(Key key) const noexcept {
    // A key equal to a separator belongs to the right subtree.
    return static_cast<std::size_t>(std::upper_bound(keys.begin(), keys.end(), key) - keys.begin());
}

namespace {

InternalNode* as_internal(Node* n) { return static_cast<InternalNode*>(n); }
LeafNode* as_leaf(Node* n) { return static_cast<LeafNode*>(n); }

struct Halves {
    std::vector<Key> lkeys, rkeys;
    std::vector<Node*> lch, rch;
    Key sep;
};

Halves split_arrays(const std::vector<Key>& keys, const std::vector<Node*>& ch) {
    std::size_t m = keys.size() / 2;
    Halves h;
    h.lkeys.assign(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(m));
    h.sep = keys[m];
    h.rkeys.assign(keys.begin() + static_cast<std::ptrdiff_t>(m) + 1, keys.end());
    h.lch.assign(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(m) + 1);
    h.rch.assign(ch.begin() + static_cast<std::ptrdiff_t>(m) + 1, ch.end());
    return h;
}

std::vector<Node*> children_of(const InternalNode* n) {
    std::vector<Node*> ch(n->nchildren);
    for (std::size_t i = 0; i < n->nchildren; ++i) ch[i] = n->child(i);
    return ch;
}

}  // namespace

struct Tree::PlanCtx {
    std::size_t tid;
    std::vector<InternalNode*> created;  // freed if the install loses
    std::vector<InternalNode*> scratch;  // never published even if it wins
    std::vector<Node*> replaced;         // retired if the install wins
};

Tree::Tree(const TreeConfig& cfg, Reclaimer& rec, VersionTracker& tracker)
    : cfg_(cfg), rec_(rec), tracker_(tracker), clock_fn_{&tracker} {
    cfg_.validate();
    root_.store(new LeafNode(tracker_.current_ts()), std::memory_order_release);
}

Tree::~Tree() {
    std::vector<LeafNode*> groups;
    free_subtree(root_.load(), groups);
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
    for (LeafNode* g : groups) {
        delete g->partner;
        delete g;
    }
}

void Tree::free_subtree(Node* n, std::vector<LeafNode*>& groups) {
    if (n->is_leaf) {
        if (LeafNode* g = as_leaf(n)->new_next.load()) groups.push_back(g);
        delete as_leaf(n);
        return;
    }
    auto* in = as_internal(n);
    for (std::size_t i = 0; i < in->nchildren; ++i) free_subtree(in->child(i), groups);
    delete in;
}

bool Tree::set_help_idx(InternalNode* n, int idx) noexcept {
    int expected = HELP_NONE;
    return n->help_idx.compare_exchange_strong(expected, idx, std::memory_order_acq_rel);
}

void Tree::freeze_internal(InternalNode* n) noexcept {
    for (std::size_t i = 0; i < n->nchildren; ++i) n->children[i].freeze();
}

void Tree::freeze_leaf(LeafNode* l) noexcept {
    l->frozen.store(true, std::memory_order_release);
    l->list.freeze();
}

// ---- leaf operations -------------------------------------------------------

OpResult Tree::insert_leaf(LeafNode* leaf, Key key, Value value) {
    if (leaf->frozen.load(std::memory_order_acquire)) return OpResult::of(OpKind::Failed);
    if (leaf->list.size() >= static_cast<std::size_t>(cfg_.leaf_max) ||
        leaf->list.installs() >= static_cast<std::size_t>(cfg_.budget())) {
        freeze_leaf(leaf);
        return OpResult::of(OpKind::Failed);
    }
    return leaf->list.insert(key, value, clock_fn_);
}

OpResult Tree::delete_leaf(LeafNode* leaf, Key key) {
    if (leaf->frozen.load(std::memory_order_acquire)) return OpResult::of(OpKind::Failed);
    if (leaf->list.installs() >= static_cast<std::size_t>(cfg_.budget())) {
        freeze_leaf(leaf);
        return OpResult::of(OpKind::Failed);
    }
    return leaf->list.remove(key, clock_fn_);
}

OpResult Tree::wf_insert_leaf(LeafNode* leaf, OperationState& st) {
    if (st.finished.load(std::memory_order_acquire)) return OpResult::of(OpKind::OperationFinished);
    if (leaf->frozen.load(std::memory_order_acquire)) return OpResult::of(OpKind::Failed);
    if (leaf->list.size() >= static_cast<std::size_t>(cfg_.leaf_max) ||
        leaf->list.installs() >= static_cast<std::size_t>(cfg_.budget())) {
        freeze_leaf(leaf);
        return OpResult::of(OpKind::Failed);
    }
    return leaf->list.wf_insert(st, clock_fn_);
}

OpResult Tree::wf_delete_leaf(LeafNode* leaf, OperationState& st) {
    if (st.finished.load(std::memory_order_acquire)) return OpResult::of(OpKind::OperationFinished);
    if (leaf->frozen.load(std::memory_order_acquire)) return OpResult::of(OpKind::Failed);
    if (leaf->list.installs() >= static_cast<std::size_t>(cfg_.budget())) {
        freeze_leaf(leaf);
        return OpResult::of(OpKind::Failed);
    }
    std::uintptr_t sn = st.search_node.load(std::memory_order_acquire);
    if (sn == SEARCH_DUMMY) {
        auto pos = leaf->list.find(st.key);
        if (!pos) return OpResult::of(OpKind::Failed);
        std::uintptr_t found = SEARCH_ABSENT;
        if (pos->succ->key == st.key && !is_tombstone(VersionedList::read_current(pos->succ, clock_fn_)))
            found = reinterpret_cast<std::uintptr_t>(pos->succ);
        st.search_node.compare_exchange_strong(sn, found, std::memory_order_acq_rel);
        sn = st.search_node.load(std::memory_order_acquire);
    }
    if (sn == SEARCH_ABSENT) {
        st.finished.store(true, std::memory_order_release);
        return OpResult::of(OpKind::OperationFinished);
    }
    return leaf->list.wf_insert(st, clock_fn_);
}

// ---- traversal -------------------------------------------------------------

bool Tree::underflow_improves(const InternalNode* parent, std::size_t ci, const InternalNode* c) const {
    if (c->nkeys() > static_cast<std::size_t>(cfg_.min_keys) || parent->nchildren < 2) return false;
    std::size_t si = ci > 0 ? ci - 1 : ci + 1;
    const Node* sn = parent->child(si);
    if (sn->is_leaf) return false;
    std::size_t s = static_cast<const InternalNode*>(sn)->nkeys();
    return c->nkeys() + s + 1 < static_cast<std::size_t>(cfg_.max_keys) || s >= c->nkeys() + 2;
}

template <class LeafFn>
OpResult Tree::descend(std::size_t tid, Key key, Mode mode, int max_attempts, LeafFn&& fn) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        if (attempt > 0) {
            counters_.restarts.fetch_add(1, std::memory_order_relaxed);
            std::int64_t seen = counters_.max_attempts.load(std::memory_order_relaxed);
            while (attempt > seen &&
                   !counters_.max_attempts.compare_exchange_weak(seen, attempt, std::memory_order_relaxed)) {
            }
        }
        Node* root = root_.load(std::memory_order_acquire);
        if (balance_root(tid, root)) continue;
        InternalNode* prev = nullptr;
        std::size_t pidx = 0;
        Node* curr = root;
        bool restart = false;
        while (!curr->is_leaf) {
            InternalNode* in = as_internal(curr);
            if (in->help_idx.load(std::memory_order_acquire) != HELP_NONE) {
                help(tid, prev, pidx, in);
                restart = true;
                break;
            }
            std::size_t ci = in->route(key);
            Node* child = in->child(ci);
            bool rebalance;
            if (child->is_leaf) {
                rebalance = as_leaf(child)->frozen.load(std::memory_order_acquire);
            } else if (mode == Mode::Insert) {
                rebalance = as_internal(child)->nkeys() >= static_cast<std::size_t>(cfg_.max_keys);
            } else {
                rebalance = underflow_improves(in, ci, as_internal(child));
            }
            if (rebalance) {
                set_help_idx(in, static_cast<int>(ci));
                help(tid, prev, pidx, in);
                restart = true;
                break;
            }
            prev = in;
            pidx = ci;
            curr = child;
        }
        if (restart) continue;
        OpResult r = fn(as_leaf(curr));
        if (!r.failed()) return r;
    }
    return OpResult::of(OpKind::Failed);
}

bool Tree::balance_root(std::size_t tid, Node* root) {
    if (root->is_leaf) {
        if (!as_leaf(root)->frozen.load(std::memory_order_acquire)) return false;
        help_root_leaf(tid, as_leaf(root));
        return true;
    }
    InternalNode* in = as_internal(root);
    if (in->help_idx.load(std::memory_order_acquire) == HELP_NONE) {
        std::size_t nk = in->nkeys();
        if (nk != 0 && nk < static_cast<std::size_t>(cfg_.max_keys)) return false;
        set_help_idx(in, HELP_WHOLE);
    }
    help(tid, nullptr, 0, in);
    return true;
}

OpResult Tree::insert(std::size_t tid, Key key, Value value, int max_attempts) {
    check_key(key);
    check_value(value);
    return descend(tid, key, Mode::Insert, max_attempts,
                   [&](LeafNode* leaf) { return insert_leaf(leaf, key, value); });
}

OpResult Tree::remove(std::size_t tid, Key key, int max_attempts) {
    check_key(key);
    return descend(tid, key, Mode::Delete, max_attempts, [&](LeafNode* leaf) { return delete_leaf(leaf, key); });
}

void Tree::wf_apply(std::size_t tid, OperationState& st) {
    Mode mode = st.is_delete ? Mode::Delete : Mode::Insert;
    while (!st.finished.load(std::memory_order_acquire)) {
        descend(tid, st.key, mode, 1, [&](LeafNode* leaf) {
            return st.is_delete ? wf_delete_leaf(leaf, st) : wf_insert_leaf(leaf, st);
        });
    }
}

OpResult Tree::search(Key key) {
    check_key(key);
    counters_.search_descents.fetch_add(1, std::memory_order_relaxed);
    LeafNode* leaf = leaf_for(key);
    KeyNode* kn = leaf->list.lookup(key);
    if (kn == nullptr) return OpResult::of(OpKind::KeyNotPresent);
    Value v = VersionedList::read_current(kn, clock_fn_);
    if (is_tombstone(v)) return OpResult::of(OpKind::KeyNotPresent);
    return OpResult{OpKind::OperationFinished, v, kn->vhead.load().get()->ts.load()};
}

LeafNode* Tree::leaf_for(Key key) const noexcept {
    Node* n = root_.load(std::memory_order_acquire);
    while (!n->is_leaf) n = as_internal(n)->child(as_internal(n)->route(key));
    return as_leaf(n);
}

std::vector<const VersionNode*> Tree::chain_of(Key key) const {
    std::vector<const VersionNode*> out;
    KeyNode* kn = leaf_for(key)->list.lookup(key);
    if (kn == nullptr) return out;
    for (const VersionNode* v = kn->vhead.load().get(); v != nullptr; v = v->nextv.load()) out.push_back(v);
    return out;
}

namespace {

struct RangeWalk {
    Key next_min;
    Key high;
    Timestamp s;
    ClockRef clock;
    std::vector<std::pair<Key, Value>>& out;
    bool done = false;

    void leaf(const LeafNode* l) {
        LeafNode* g = l->new_next.load(std::memory_order_acquire);
        if (g != nullptr && g->ts <= s) {
            leaf(g);
            if (g->partner != nullptr) leaf(g->partner);
            return;
        }
        l->list.collect_range(next_min, high, s,
                              [&](Key k, Value v) {
                                  out.emplace_back(k, v);
                                  if (k == high) done = true;
                                  next_min = k + 1;
                              },
                              clock);
    }

    void node(const Node* n) {
        if (done) return;
        if (n->is_leaf) {
            leaf(static_cast<const LeafNode*>(n));
            return;
        }
        auto* in = static_cast<const InternalNode*>(n);
        for (std::size_t i = 0; i < in->nchildren && !done; ++i) {
            if (i < in->nkeys() && in->keys[i] <= next_min) continue;  // child holds keys < keys[i]
            if (i > 0 && in->keys[i - 1] > high) break;
            node(in->child(i));
        }
    }
};

}  // namespace

std::vector<std::pair<Key, Value>> Tree::range_query(Key low, Key high, Timestamp* snapshot) {
    std::vector<std::pair<Key, Value>> out;
    auto [t, handle] = tracker_.add_timestamp();
    Timestamp s = t - 1;
    URUV_HOOK("rangeQuery:after-timestamp");
    if (low <= high) {
        RangeWalk w{low, high, s, ClockRef(clock_fn_), out};
        w.node(root_.load(std::memory_order_acquire));
    }
    VersionTracker::mark_finished(handle);
    if (snapshot) *snapshot = s;
    return out;
}

// ---- rebalancing -----------------------------------------------------------

std::vector<std::pair<Key, VersionNode*>> Tree::pruned_entries(LeafNode* leaf, const PruneHorizon& horizon) {
    std::vector<std::pair<Key, VersionNode*>> out;
    leaf->list.for_each([&](KeyNode* kn) {
        VersionNode* h = kn->vhead.load().get();
        VersionedList::init_timestamp(h, clock_fn_);
        if (VersionNode* c = VersionedList::copy_chain(h, horizon)) out.emplace_back(kn->key, c);
    });
    return out;
}

LeafNode* Tree::build_leaf(std::vector<std::pair<Key, VersionNode*>>::iterator b,
                           std::vector<std::pair<Key, VersionNode*>>::iterator e, Timestamp ts) {
    auto* l = new LeafNode(ts);
    for (auto it = b; it != e; ++it) l->list.append_unpublished(it->first, it->second);
    return l;
}

LeafNode* Tree::claim_group(std::size_t tid, LeafNode* target, LeafNode* sibling, int side, bool root) {
    freeze_leaf(target);
    LeafNode* leader = target->new_next.load(std::memory_order_acquire);
    if (leader == nullptr) {
        PruneHorizon horizon = tracker_.horizon(tid);
        auto entries = pruned_entries(target, horizon);
        const std::size_t lmax = static_cast<std::size_t>(cfg_.leaf_max);
        LeafNode* cand = nullptr;
        if (entries.size() >= lmax) {
            Timestamp ts = tracker_.current_ts();
            auto mid = entries.begin() + static_cast<std::ptrdiff_t>((entries.size() + 1) / 2);
            cand = build_leaf(entries.begin(), mid, ts);
            cand->kind = GroupKind::Split;
            cand->sep = mid->first;
            cand->partner = build_leaf(mid, entries.end(), ts);
        } else if (!root && sibling != nullptr && entries.size() < static_cast<std::size_t>(cfg_.leaf_min)) {
            freeze_leaf(sibling);
            auto sib = pruned_entries(sibling, horizon);
            if (side < 0) {
                sib.insert(sib.end(), entries.begin(), entries.end());
                entries.swap(sib);
            } else {
                entries.insert(entries.end(), sib.begin(), sib.end());
            }
            Timestamp ts = tracker_.current_ts();
            if (entries.size() < lmax) {
                cand = build_leaf(entries.begin(), entries.end(), ts);
                cand->kind = GroupKind::Merge;
            } else {
                auto mid = entries.begin() + static_cast<std::ptrdiff_t>((entries.size() + 1) / 2);
                cand = build_leaf(entries.begin(), mid, ts);
                cand->kind = GroupKind::Borrow;
                cand->sep = mid->first;
                cand->partner = build_leaf(mid, entries.end(), ts);
            }
            cand->sibling_side = side;
        } else {
            cand = build_leaf(entries.begin(), entries.end(), tracker_.current_ts());
        }
        LeafNode* expected = nullptr;
        if (target->new_next.compare_exchange_strong(expected, cand, std::memory_order_acq_rel)) {
            leader = cand;
        } else {
            delete cand->partner;
            delete cand;
            leader = expected;
        }
    }
    if (leader->kind == GroupKind::Merge || leader->kind == GroupKind::Borrow) {
        if (sibling == nullptr || leader->sibling_side != side) std::abort();
        freeze_leaf(sibling);
        LeafNode* expected = nullptr;
        if (!sibling->new_next.compare_exchange_strong(expected, leader, std::memory_order_acq_rel) &&
            expected != leader)
            std::abort();
    }
    return leader;
}

InternalNode* Tree::doom_and_plan(InternalNode* c, PlanCtx& ctx) {
    set_help_idx(c, HELP_WHOLE);  // a plan already chosen is adopted as is
    return plan(c, ctx);
}

InternalNode* Tree::plan(InternalNode* p, PlanCtx& ctx) {
    const int hi = p->help_idx.load(std::memory_order_acquire);
    freeze_internal(p);
    std::vector<Node*> ch = children_of(p);
    std::vector<Key> keys = p->keys;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(ch.size());
    std::ptrdiff_t si = -1;
    if (hi >= 0) si = hi > 0 ? hi - 1 : (hi + 1 < n ? hi + 1 : -1);

    // Children with their own pending plan can no longer install into p.
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        if (hi >= 0 && (j == hi || j == si)) continue;
        if (ch[j]->is_leaf) continue;
        if (as_internal(ch[j])->help_idx.load(std::memory_order_acquire) != HELP_NONE)
            ch[j] = plan(as_internal(ch[j]), ctx);
    }

    if (hi >= 0 && ch[hi]->is_leaf) {
        LeafNode* t = as_leaf(ch[hi]);
        LeafNode* s = si >= 0 ? as_leaf(ch[si]) : nullptr;
        LeafNode* g = claim_group(ctx.tid, t, s, static_cast<int>(si - hi), false);
        ctx.replaced.push_back(t);
        std::ptrdiff_t lo = std::min<std::ptrdiff_t>(hi, si);
        switch (g->kind) {
            case GroupKind::Copy:
                ch[hi] = g;
                break;
            case GroupKind::Split:
                ch[hi] = g;
                ch.insert(ch.begin() + hi + 1, g->partner);
                keys.insert(keys.begin() + hi, g->sep);
                break;
            case GroupKind::Merge:
                ctx.replaced.push_back(s);
                ch[lo] = g;
                ch.erase(ch.begin() + lo + 1);
                keys.erase(keys.begin() + lo);
                break;
            case GroupKind::Borrow:
                ctx.replaced.push_back(s);
                ch[lo] = g;
                ch[lo + 1] = g->partner;
                keys[lo] = g->sep;
                break;
        }
    } else if (hi >= 0) {
        InternalNode* t = doom_and_plan(as_internal(ch[hi]), ctx);
        if (t->nkeys() >= static_cast<std::size_t>(cfg_.max_keys)) {
            Halves h = split_arrays(t->keys, children_of(t));
            auto* l = new InternalNode(std::move(h.lkeys), h.lch);
            auto* r = new InternalNode(std::move(h.rkeys), h.rch);
            ctx.created.push_back(l);
            ctx.created.push_back(r);
            ctx.scratch.push_back(t);
            ch[hi] = l;
            ch.insert(ch.begin() + hi + 1, r);
            keys.insert(keys.begin() + hi, h.sep);
        } else if (si < 0) {
            ch[hi] = t;
        } else {
            InternalNode* s = doom_and_plan(as_internal(ch[si]), ctx);
            std::ptrdiff_t lo = std::min<std::ptrdiff_t>(hi, si);
            InternalNode* left = si < hi ? s : t;
            InternalNode* right = si < hi ? t : s;
            std::vector<Key> all = left->keys;
            all.push_back(keys[lo]);
            all.insert(all.end(), right->keys.begin(), right->keys.end());
            std::vector<Node*> allch = children_of(left);
            auto rch = children_of(right);
            allch.insert(allch.end(), rch.begin(), rch.end());
            ctx.scratch.push_back(left);
            ctx.scratch.push_back(right);
            if (all.size() < static_cast<std::size_t>(cfg_.max_keys)) {
                auto* m = new InternalNode(std::move(all), allch);
                ctx.created.push_back(m);
                ch[lo] = m;
                ch.erase(ch.begin() + lo + 1);
                keys.erase(keys.begin() + lo);
            } else {
                Halves h = split_arrays(all, allch);
                auto* l = new InternalNode(std::move(h.lkeys), h.lch);
                auto* r = new InternalNode(std::move(h.rkeys), h.rch);
                ctx.created.push_back(l);
                ctx.created.push_back(r);
                ch[lo] = l;
                ch[lo + 1] = r;
                keys[lo] = h.sep;
            }
        }
    }

    auto* np = new InternalNode(std::move(keys), ch);
    ctx.created.push_back(np);
    ctx.replaced.push_back(p);
    return np;
}

void Tree::retire_node(std::size_t tid, Node* n) {
    if (!rec_.retire(tid, n)) counters_.double_retires.fetch_add(1, std::memory_order_relaxed);
}

void Tree::finish_plan(PlanCtx& ctx, bool won) {
    if (won) {
        counters_.rebalances.fetch_add(1, std::memory_order_relaxed);
        for (Node* n : ctx.replaced) retire_node(ctx.tid, n);
        for (InternalNode* n : ctx.scratch) delete n;
    } else {
        for (InternalNode* n : ctx.created) delete n;
    }
}

void Tree::help(std::size_t tid, InternalNode* prev, std::size_t pidx, InternalNode* curr) {
    counters_.plan_helps.fetch_add(1, std::memory_order_relaxed);
    PlanCtx ctx{tid, {}, {}, {}};
    InternalNode* np = plan(curr, ctx);
    bool won;
    if (prev == nullptr) {
        Node* install = np;
        if (np->nkeys() == 0) {
            install = np->child(0);
            ctx.scratch.push_back(np);
        } else if (np->nkeys() >= static_cast<std::size_t>(cfg_.max_keys)) {
            Halves h = split_arrays(np->keys, children_of(np));
            auto* l = new InternalNode(std::move(h.lkeys), h.lch);
            auto* r = new InternalNode(std::move(h.rkeys), h.rch);
            auto* top = new InternalNode({h.sep}, {l, r});
            ctx.created.push_back(l);
            ctx.created.push_back(r);
            ctx.created.push_back(top);
            ctx.scratch.push_back(np);
            install = top;
        }
        Node* expected = curr;
        won = root_.compare_exchange_strong(expected, install, std::memory_order_acq_rel);
    } else {
        won = prev->children[pidx].cas(Link<Node>(curr), Link<Node>(np));
    }
    finish_plan(ctx, won);
}

void Tree::help_root_leaf(std::size_t tid, LeafNode* root) {
    LeafNode* g = claim_group(tid, root, nullptr, 0, true);
    InternalNode* top = nullptr;
    Node* install = g;
    if (g->kind == GroupKind::Split) {
        top = new InternalNode({g->sep}, {g, g->partner});
        install = top;
    }
    Node* expected = root;
    if (root_.compare_exchange_strong(expected, install, std::memory_order_acq_rel)) {
        counters_.rebalances.fetch_add(1, std::memory_order_relaxed);
        retire_node(tid, root);
    } else {
        delete top;
    }
}

// ---- validation ------------------------------------------------------------

namespace {

struct Validator {
    ValidationReport& r;
    std::size_t leaf_depth = 0;
    bool have_depth = false;
    bool have_last = false;
    Key last_key = 0;
    // A version installed twice shows up here (and would otherwise loop).
    std::unordered_set<const VersionNode*> versions;

    void leaf(const LeafNode* l, Key lo, Key hi, std::size_t depth) {
        ++r.leaves;
        if (l->frozen.load()) ++r.frozen_leaves;
        if (l->new_next.load() != nullptr) ++r.pending_plans;
        if (!have_depth) {
            have_depth = true;
            leaf_depth = depth;
            r.depth = depth;
        } else if (depth != leaf_depth) {
            r.fail("leaf depth " + std::to_string(depth) + " differs from " + std::to_string(leaf_depth));
        }
        // newNext chains must be acyclic.
        std::unordered_set<const LeafNode*> seen{l};
        for (const LeafNode* g = l->new_next.load(); g != nullptr; g = g->new_next.load()) {
            if (!seen.insert(g).second) {
                r.fail("newNext cycle");
                break;
            }
        }
        bool first = true;
        Key prev = 0;
        l->list.for_each([&](const KeyNode* kn) {
            ++r.key_nodes;
            if (!first && kn->key <= prev) r.fail("leaf keys not strictly increasing at " + std::to_string(kn->key));
            if (kn->key < lo || (hi != KEY_POS_INF && kn->key >= hi))
                r.fail("key " + std::to_string(kn->key) + " outside separator range");
            if (have_last && kn->key <= last_key)
                r.fail("key " + std::to_string(kn->key) + " not greater than previous leaf's keys");
            first = false;
            prev = kn->key;
            const VersionNode* v = kn->vhead.load().get();
            if (v == nullptr) {
                r.fail("null version head");
                return;
            }
            if (!is_tombstone(v->value)) ++r.live_keys;
            Timestamp newer = std::numeric_limits<Timestamp>::max();
            for (; v != nullptr; v = v->nextv.load()) {
                if (!versions.insert(v).second) {
                    r.fail("version node reachable twice under key " + std::to_string(kn->key));
                    break;
                }
                ++r.version_nodes;
                Timestamp ts = v->ts.load();
                if (ts == TS_UNSET) continue;  // only a head may still be unset
                if (ts > newer) r.fail("version timestamps increase along chain of key " + std::to_string(kn->key));
                newer = ts;
            }
        });
        if (!first) {
            have_last = true;
            last_key = prev;
        }
    }

    void node(const Node* n, Key lo, Key hi, std::size_t depth) {
        if (n->is_leaf) {
            leaf(static_cast<const LeafNode*>(n), lo, hi, depth);
            return;
        }
        auto* in = static_cast<const InternalNode*>(n);
        ++r.internals;
        if (in->help_idx.load() != HELP_NONE) ++r.pending_plans;
        if (in->nchildren != in->nkeys() + 1) r.fail("internal node child count mismatch");
        for (std::size_t i = 0; i < in->nkeys(); ++i) {
            if (i > 0 && in->keys[i] <= in->keys[i - 1]) r.fail("separators not increasing");
            if (in->keys[i] < lo || (hi != KEY_POS_INF && in->keys[i] > hi)) r.fail("separator outside parent range");
        }
        for (std::size_t i = 0; i < in->nchildren; ++i) {
            Key clo = i == 0 ? lo : in->keys[i - 1];
            Key chi = i < in->nkeys() ? in->keys[i] : hi;
            node(in->child(i), clo, chi, depth + 1);
        }
    }
};

}  // namespace

ValidationReport Tree::validate_structure() const {
    ValidationReport r;
    Validator v{r, 0, false, false, 0, {}};
    v.node(root_.load(), KEY_NEG_INF, KEY_POS_INF, 0);
    return r;
}

}  // namespace uruv
