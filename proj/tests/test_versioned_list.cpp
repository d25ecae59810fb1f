#include <atomic>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "doctest.h"
#include "uruv/versioned_list.hpp"

using namespace uruv;

namespace {

struct TestClock {
    std::atomic<Timestamp> now{1};
    Timestamp operator()() { return now.load(); }
};

std::vector<std::pair<Key, Value>> all_at(VersionedList& l, Timestamp t, TestClock& c) {
    std::vector<std::pair<Key, Value>> out;
    l.collect_range(1, KEY_POS_INF - 1, t, [&](Key k, Value v) { out.emplace_back(k, v); }, c);
    return out;
}

}  // namespace

TEST_CASE("find positions") {
    TestClock c;
    VersionedList l;
    l.insert(3, 30, c);
    l.insert(7, 70, c);
    auto p = l.find(7);
    REQUIRE(p);
    CHECK(p->pred->key == 3);
    CHECK(p->succ->key == 7);
    p = l.find(5);
    REQUIRE(p);
    CHECK(p->pred->key == 3);
    CHECK(p->succ->key == 7);
    l.lookup(3)->next.freeze();
    CHECK_FALSE(l.find(5).has_value());
    CHECK(l.find_for_read(5).succ->key == 7);
}

TEST_CASE("init_timestamp") {
    VersionNode v(9);
    VersionedList::init_timestamp(&v, 4);
    CHECK(v.ts.load() == 4);
    VersionNode w(9, nullptr, 2);
    VersionedList::init_timestamp(&w, 9);
    CHECK(w.ts.load() == 2);
}

TEST_CASE("init_timestamp under a two-thread race settles on one value") {
    for (int round = 0; round < 2000; ++round) {
        VersionNode v(1);
        std::atomic<int> go{0};
        auto body = [&](Timestamp t) {
            go.fetch_add(1);
            while (go.load() < 2) {
            }
            VersionedList::init_timestamp(&v, t);
        };
        std::thread a(body, 4), b(body, 5);
        a.join();
        b.join();
        Timestamp got = v.ts.load();
        CHECK((got == 4 || got == 5));
        VersionedList::init_timestamp(&v, 99);
        CHECK(v.ts.load() == got);
    }
}

TEST_CASE("read_current and read_at") {
    TestClock c;
    c.now = 5;
    {
        VersionNode* h = new VersionNode(9, nullptr, 3);
        KeyNode n(1, h);
        CHECK(VersionedList::read_current(&n, c) == 9);
        delete h;
    }
    {
        VersionNode* h = new VersionNode(TOMBSTONE, nullptr, 3);
        KeyNode n(1, h);
        CHECK(VersionedList::read_current(&n, c) == TOMBSTONE);
        delete h;
    }
    {
        VersionNode* h = new VersionNode(9);
        KeyNode n(1, h);
        CHECK(VersionedList::read_current(&n, c) == 9);
        CHECK(h->ts.load() == 5);
        delete h;
    }
    {
        auto* old = new VersionNode(3, nullptr, 4);
        auto* h = new VersionNode(9, old, 7);
        KeyNode n(1, h);
        CHECK(VersionedList::read_at(&n, 5, c) == std::optional<Value>(3));
        CHECK(VersionedList::read_at(&n, 7, c) == std::optional<Value>(9));
        CHECK_FALSE(VersionedList::read_at(&n, 3, c).has_value());
        delete h;
        delete old;
    }
}

TEST_CASE("version_cas") {
    TestClock c;
    VersionedList l;
    l.insert(1, 3, c);
    KeyNode* n = l.lookup(1);
    c.now = 2;
    CHECK(l.version_cas(n, 3, 7, c) == CasOutcome::Installed);
    CHECK(VersionedList::read_current(n, c) == 7);
    CHECK(n->vhead.load()->nextv.load()->value == 3);
    CHECK(l.version_cas(n, 5, 8, c) == CasOutcome::Stale);
    std::size_t before = l.installs();
    CHECK(l.version_cas(n, 7, 7, c) == CasOutcome::Unchanged);
    CHECK(l.installs() == before);
    n->vhead.freeze();
    CHECK(l.version_cas(n, 7, 9, c) == CasOutcome::Frozen);
}

TEST_CASE("insert, update and history") {
    TestClock c;
    VersionedList l;
    OpResult r = l.insert(5, 50, c);
    CHECK(r.kind == OpKind::NewKeyInserted);
    CHECK(r.ts == 1);
    REQUIRE(l.lookup(5) != nullptr);
    c.now = 2;
    r = l.insert(5, 99, c);
    CHECK(r.kind == OpKind::KeyUpdated);
    CHECK(r.value == std::optional<Value>(50));
    CHECK(VersionedList::read_current(l.lookup(5), c) == 99);
    CHECK(VersionedList::read_at(l.lookup(5), 1, c) == std::optional<Value>(50));
    c.now = 3;
    r = l.remove(5, c);
    CHECK(r.kind == OpKind::KeyUpdated);
    CHECK(l.remove(5, c).kind == OpKind::KeyNotPresent);
    CHECK(l.remove(6, c).kind == OpKind::KeyNotPresent);
    CHECK(l.insert(5, 1, c).kind == OpKind::NewKeyInserted);
    CHECK(l.size() == 1);
}

TEST_CASE("insert into a frozen list fails") {
    TestClock c;
    VersionedList l;
    l.insert(2, 20, c);
    l.freeze();
    CHECK(l.frozen());
    CHECK(l.insert(1, 10, c).kind == OpKind::Failed);
    CHECK(l.insert(2, 21, c).kind == OpKind::Failed);
    CHECK(l.remove(2, c).kind == OpKind::Failed);
    l.freeze();
    CHECK(all_at(l, 10, c) == std::vector<std::pair<Key, Value>>{{2, 20}});
}

TEST_CASE("collect_range") {
    TestClock c;
    VersionedList l;
    l.insert(2, 20, c);
    l.insert(4, 40, c);
    l.insert(6, 60, c);
    c.now = 5;
    std::vector<std::pair<Key, Value>> out;
    l.collect_range(3, 5, 5, [&](Key k, Value v) { out.emplace_back(k, v); }, c);
    CHECK(out == std::vector<std::pair<Key, Value>>{{4, 40}});
    c.now = 6;
    l.remove(4, c);
    out.clear();
    l.collect_range(3, 5, 6, [&](Key k, Value v) { out.emplace_back(k, v); }, c);
    CHECK(out.empty());
    out.clear();
    l.collect_range(3, 5, 5, [&](Key k, Value v) { out.emplace_back(k, v); }, c);
    CHECK(out == std::vector<std::pair<Key, Value>>{{4, 40}});
}

TEST_CASE("single-threaded oracle equivalence with timestamped history") {
    TestClock c;
    VersionedList l;
    std::map<Key, Value> cur;
    // key -> (ts, value or tombstone), appended in ts order
    std::map<Key, std::vector<std::pair<Timestamp, Value>>> hist;
    std::mt19937_64 rng(12345);
    for (int i = 0; i < 100000; ++i) {
        c.now = i + 1;
        Key k = 1 + rng() % 64;
        int op = static_cast<int>(rng() % 4);
        if (op < 2) {
            Value v = rng() % 1000;
            OpResult r = l.insert(k, v, c);
            auto it = cur.find(k);
            if (it == cur.end()) {
                REQUIRE(r.kind == OpKind::NewKeyInserted);
            } else {
                REQUIRE(r.kind == OpKind::KeyUpdated);
                REQUIRE(r.value == std::optional<Value>(it->second));
            }
            if (it == cur.end() || it->second != v) hist[k].emplace_back(c.now.load(), v);
            cur[k] = v;
        } else if (op == 2) {
            OpResult r = l.remove(k, c);
            auto it = cur.find(k);
            if (it == cur.end()) {
                REQUIRE(r.kind == OpKind::KeyNotPresent);
            } else {
                REQUIRE(r.kind == OpKind::KeyUpdated);
                REQUIRE(r.value == std::optional<Value>(it->second));
                hist[k].emplace_back(c.now.load(), TOMBSTONE);
                cur.erase(it);
            }
        } else {
            Timestamp t = 1 + static_cast<Timestamp>(rng() % static_cast<std::uint64_t>(c.now.load()));
            KeyNode* n = l.lookup(k);
            std::optional<Value> expect;
            for (auto& [ts, v] : hist[k])
                if (ts <= t) expect = v;
            std::optional<Value> got = n ? VersionedList::read_at(n, t, c) : std::nullopt;
            if (expect && is_tombstone(*expect)) expect.reset();
            if (got && is_tombstone(*got)) got.reset();
            REQUIRE(got == expect);
        }
    }
    auto snap = all_at(l, c.now.load(), c);
    REQUIRE(snap == std::vector<std::pair<Key, Value>>(cur.begin(), cur.end()));
}

TEST_CASE("version timestamps never increase along a chain") {
    TestClock c;
    VersionedList l;
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t) {
        ts.emplace_back([&, t] {
            std::mt19937_64 rng(static_cast<unsigned>(t));
            for (int i = 0; i < 20000; ++i) {
                if (i % 7 == 0) c.now.fetch_add(1);
                Key k = 1 + rng() % 16;
                if (rng() % 3 == 0)
                    l.remove(k, c);
                else
                    l.insert(k, rng() % 100, c);
            }
        });
    }
    for (auto& t : ts) t.join();
    l.for_each([](KeyNode* n) {
        Timestamp prev = std::numeric_limits<Timestamp>::max();
        for (VersionNode* v = n->vhead.load().get(); v; v = v->nextv.load()) {
            REQUIRE(v->ts.load() != TS_UNSET);
            REQUIRE(v->ts.load() <= prev);
            prev = v->ts.load();
        }
    });
}

TEST_CASE("freeze racing inserts never loses an acknowledged insert") {
    for (int round = 0; round < 300; ++round) {
        TestClock c;
        VersionedList l;
        for (Key k = 2; k <= 40; k += 2) l.insert(k, k, c);
        std::vector<std::pair<Key, OpResult>> done;
        std::atomic<int> go{0};
        std::thread ins([&] {
            go.fetch_add(1);
            while (go.load() < 2) {
            }
            for (Key k = 1; k <= 41; k += 2) done.emplace_back(k, l.insert(k, k * 10, c));
        });
        std::thread frz([&] {
            go.fetch_add(1);
            while (go.load() < 2) {
            }
            l.freeze();
        });
        ins.join();
        frz.join();
        std::set<Key> present;
        l.for_each([&](KeyNode* n) { present.insert(n->key); });
        for (auto& [k, r] : done) {
            if (r.kind == OpKind::Failed)
                CHECK(present.count(k) == 0);
            else
                CHECK(present.count(k) == 1);
        }
    }
}

TEST_CASE("frozen list stays immutable under concurrent updates") {
    TestClock c;
    VersionedList l;
    for (Key k = 1; k <= 32; ++k) l.insert(k, k, c);
    l.freeze();
    auto before = all_at(l, 100, c);
    std::atomic<int> failures{0};
    std::vector<std::thread> ts;
    for (int t = 0; t < 4; ++t) {
        ts.emplace_back([&, t] {
            std::mt19937_64 rng(static_cast<unsigned>(t));
            for (int i = 0; i < 2500; ++i) {
                Key k = 1 + rng() % 64;
                OpResult r = (i % 2) ? l.insert(k, 7, c) : l.remove(k, c);
                if (r.kind == OpKind::Failed) failures.fetch_add(1);
            }
        });
    }
    for (auto& t : ts) t.join();
    CHECK(failures.load() == 10000);
    CHECK(all_at(l, 100, c) == before);
}

TEST_CASE("wf_version_cas with a single helper") {
    TestClock c;
    VersionedList l;
    l.insert(1, 3, c);
    KeyNode* n = l.lookup(1);
    OperationState st(1, false, 1, 8);
    VersionNode* v = st.vnode;
    Link<VersionNode> h = n->vhead.load();
    CHECK(l.wf_version_cas(n, v, nullptr, h, c) == CasOutcome::Installed);
    CHECK(n->vhead.load().get() == v);
    CHECK(v->nextv.load() == h.get());
    CHECK(v->ts.load() != TS_UNSET);
    // A stale helper arriving later must not install a second time.
    CHECK(l.wf_version_cas(n, v, nullptr, h, c) == CasOutcome::Finished);
}

TEST_CASE("wf_insert matches insert when alone") {
    TestClock c;
    VersionedList a, b;
    std::mt19937_64 rng(7);
    for (std::uint64_t phase = 1; phase <= 2000; ++phase) {
        c.now = static_cast<Timestamp>(phase);
        Key k = 1 + rng() % 32;
        Value v = rng() % 50;
        a.insert(k, v, c);
        OperationState st(phase, false, k, v);
        CHECK(b.wf_insert(st, c).kind == OpKind::OperationFinished);
        CHECK(st.finished.load());
    }
    CHECK(all_at(a, c.now.load(), c) == all_at(b, c.now.load(), c));
}

TEST_CASE("copy_chain keeps what a snapshot at or after min_active-1 can see") {
    auto* v1 = new VersionNode(1, nullptr, 2);
    auto* v2 = new VersionNode(TOMBSTONE, v1, 4);
    auto* v3 = new VersionNode(3, v2, 6);
    auto* v4 = new VersionNode(4, v3, 9);
    VersionNode* c = VersionedList::copy_chain(v4, 7);
    // 9 and 6 kept (6 is the newest below 7)
    REQUIRE(c != nullptr);
    CHECK(c->value == 4);
    REQUIRE(c->nextv.load() != nullptr);
    CHECK(c->nextv.load()->value == 3);
    CHECK(c->nextv.load()->nextv.load() == nullptr);
    VersionNode* d = VersionedList::copy_chain(v4, 5);
    // newest below 5 is a tombstone; dropped
    CHECK(d->nextv.load()->value == 3);
    CHECK(d->nextv.load()->nextv.load() == nullptr);
    for (VersionNode* x : {c, d}) {
        while (x) {
            VersionNode* n = x->nextv.load();
            delete x;
            x = n;
        }
    }
    delete v4;
    delete v3;
    delete v2;
    delete v1;
}

namespace {

std::optional<Value> chain_at(const VersionNode* v, Timestamp s) {
    for (; v != nullptr; v = v->nextv.load()) {
        if (v->ts.load() <= s) {
            if (is_tombstone(v->value)) return std::nullopt;
            return v->value;
        }
    }
    return std::nullopt;
}

void free_chain(VersionNode* v) {
    while (v) {
        VersionNode* n = v->nextv.load();
        delete v;
        v = n;
    }
}

}  // namespace

TEST_CASE("copy_chain with a horizon keeps one version per running snapshot") {
    auto* v1 = new VersionNode(1, nullptr, 2);
    auto* v2 = new VersionNode(2, v1, 4);
    auto* v3 = new VersionNode(3, v2, 6);
    auto* v4 = new VersionNode(4, v3, 9);
    PruneHorizon h;
    h.reads = {5, 4};
    VersionNode* c = VersionedList::copy_chain(v4, h);
    // 9 is the head and 4 serves both snapshots; 6 and 2 go
    REQUIRE(c != nullptr);
    CHECK(c->ts.load() == 9);
    REQUIRE(c->nextv.load() != nullptr);
    CHECK(c->nextv.load()->ts.load() == 4);
    CHECK(c->nextv.load()->nextv.load() == nullptr);
    free_chain(c);

    VersionNode* only = VersionedList::copy_chain(v4, PruneHorizon{});
    CHECK(only->nextv.load() == nullptr);
    free_chain(only);

    auto* dead = new VersionNode(TOMBSTONE, v4, 11);
    CHECK(VersionedList::copy_chain(dead, PruneHorizon{}) == nullptr);
    h.reads = {10};
    VersionNode* d = VersionedList::copy_chain(dead, h);
    REQUIRE(d != nullptr);
    CHECK(d->ts.load() == 11);
    CHECK(d->nextv.load()->ts.load() == 9);
    free_chain(d);
    free_chain(dead);
}

TEST_CASE("property: a horizon copy reads like the original at every kept snapshot") {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 5000; ++round) {
        // Random descending chain, repeated timestamps and tombstones allowed.
        int len = 1 + static_cast<int>(rng() % 8);
        std::vector<std::pair<Value, Timestamp>> chain;
        Timestamp ts = 40;
        for (int i = 0; i < len; ++i) {
            ts -= static_cast<Timestamp>(rng() % 4);
            Value v = rng() % 3 == 0 ? TOMBSTONE : 1 + rng() % 100;
            chain.emplace_back(v, ts);
        }
        VersionNode* orig = nullptr;
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) orig = new VersionNode(it->first, orig, it->second);

        PruneHorizon h;
        std::set<Timestamp, std::greater<>> reads;
        int nr = static_cast<int>(rng() % 4);
        for (int i = 0; i < nr; ++i) reads.insert(static_cast<Timestamp>(rng() % 45));
        if (rng() % 4 == 0 && !reads.empty()) {
            h.keep_newer_than = *reads.begin() - static_cast<Timestamp>(rng() % 3);
            reads.insert(h.keep_newer_than);
        }
        h.reads.assign(reads.begin(), reads.end());

        VersionNode* copy = VersionedList::copy_chain(orig, h);
        std::vector<Timestamp> probes(h.reads.begin(), h.reads.end());
        probes.push_back(chain.front().second);  // later queries read the head
        probes.push_back(100);
        for (Timestamp s = h.keep_newer_than == TS_MAX ? 100 : h.keep_newer_than; s <= 45; ++s) probes.push_back(s);
        for (Timestamp s : probes) REQUIRE(chain_at(copy, s) == chain_at(orig, s));

        std::size_t kept = 0;
        for (VersionNode* v = copy; v; v = v->nextv.load()) ++kept;
        if (h.keep_newer_than == TS_MAX) CHECK(kept <= h.reads.size() + 1);
        free_chain(copy);
        free_chain(orig);
    }
}
