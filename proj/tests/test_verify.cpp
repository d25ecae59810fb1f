#include <random>
#include <thread>

#include "doctest.h"
#include "uruv/verify.hpp"

using namespace uruv;
using namespace uruv::verify;

namespace {

HistoryEvent inv(std::size_t t, Operation op, std::uint64_t seq) { return {t, true, op, {}, seq}; }
HistoryEvent ret(std::size_t t, Operation op, Response r, std::uint64_t seq) { return {t, false, op, r, seq}; }

Response updated(Value prev) { return {OpKind::KeyUpdated, prev, {}}; }
Response inserted() { return {OpKind::NewKeyInserted, std::nullopt, {}}; }
Response found(Value v) { return {OpKind::OperationFinished, v, {}}; }
Response missing() { return {OpKind::KeyNotPresent, std::nullopt, {}}; }

// Histories from a globally locked map: every operation takes effect at some
// step strictly between its call and its return.
std::vector<HistoryEvent> locked_map_history(std::mt19937_64& rng, std::size_t threads, std::size_t per_thread,
                                             Key keyspace) {
    std::map<Key, Value> m;
    struct T {
        std::size_t done = 0;
        int phase = 0;  // 0 idle, 1 called, 2 applied
        Operation op;
        Response r;
    };
    std::vector<T> ts(threads);
    std::vector<HistoryEvent> h;
    std::uint64_t seq = 0;
    for (;;) {
        std::vector<std::size_t> live;
        for (std::size_t i = 0; i < threads; ++i)
            if (ts[i].done < per_thread || ts[i].phase != 0) live.push_back(i);
        if (live.empty()) break;
        std::size_t i = live[rng() % live.size()];
        T& t = ts[i];
        if (t.phase == 0) {
            Key k = 1 + rng() % keyspace;
            switch (rng() % 4) {
                case 0: t.op = Operation::insert(k, 1 + rng() % 3); break;
                case 1: t.op = Operation::remove(k); break;
                case 2: t.op = Operation::search(k); break;
                default: t.op = Operation::range(k, std::min<Key>(k + rng() % 3, keyspace));
            }
            h.push_back(inv(i, t.op, seq++));
            t.phase = 1;
        } else if (t.phase == 1) {
            t.r = apply_to(m, t.op);
            t.phase = 2;
        } else {
            h.push_back(ret(i, t.op, t.r, seq++));
            t.phase = 0;
            ++t.done;
        }
    }
    return h;
}

}  // namespace

TEST_CASE("oracle follows the store's result conventions") {
    SequentialOracle o;
    CHECK(o.apply(Operation::search(1)) == missing());
    CHECK(o.apply(Operation::insert(1, 10)) == inserted());
    CHECK(o.apply(Operation::insert(1, 11)) == updated(10));
    CHECK(o.apply(Operation::search(1)) == found(11));
    CHECK(o.apply(Operation::remove(1)) == updated(11));
    CHECK(o.apply(Operation::remove(1)) == missing());
    o.apply(Operation::insert(3, 30));
    o.apply(Operation::insert(5, 50));
    CHECK(o.apply(Operation::range(2, 5)).range == Range{{3, 30}, {5, 50}});
    CHECK(o.apply(Operation::range(5, 2)).range.empty());
}

TEST_CASE("oracle snapshots replay the effect log") {
    SequentialOracle o;
    o.apply_at(Operation::insert(1, 10), 1);
    o.apply_at(Operation::insert(2, 20), 1);
    o.apply_at(Operation::insert(1, 11), 3);
    o.apply_at(Operation::remove(2), 4);
    o.apply_at(Operation::remove(9), 4);  // no effect
    CHECK(o.log().size() == 4);
    CHECK(o.snapshot_at(0).empty());
    CHECK(o.snapshot_at(2) == std::map<Key, Value>{{1, 10}, {2, 20}});
    CHECK(o.snapshot_at(3) == std::map<Key, Value>{{1, 11}, {2, 20}});
    CHECK(o.snapshot_at(100) == std::map<Key, Value>{{1, 11}});
    CHECK_THROWS(o.apply_at(Operation::insert(1, 1), 2));
}

TEST_CASE("single-thread history is linearizable in program order") {
    std::vector<HistoryEvent> h;
    SequentialOracle o;
    std::uint64_t seq = 0;
    for (Operation op : {Operation::insert(1, 5), Operation::search(1), Operation::remove(1), Operation::search(1)}) {
        h.push_back(inv(0, op, seq++));
        h.push_back(ret(0, op, o.apply(op), seq++));
    }
    Verdict v = check_linearizable(h);
    REQUIRE(v.yes());
    CHECK(v.witness == std::vector<std::size_t>{0, 2, 4, 6});
}

TEST_CASE("a search returning a value never inserted is not linearizable") {
    std::vector<HistoryEvent> h{
        inv(0, Operation::insert(1, 5), 0),
        ret(0, Operation::insert(1, 5), inserted(), 1),
        inv(1, Operation::search(1), 2),
        ret(1, Operation::search(1), found(7), 3),
        inv(0, Operation::search(2), 4),
        ret(0, Operation::search(2), missing(), 5),
    };
    Verdict v = check_linearizable(h);
    CHECK(v.kind == Verdict::Kind::No);
    CHECK(v.violating_prefix.size() == 4);
    CHECK(v.detail.find("search(1)") != std::string::npos);
}

TEST_CASE("overlapping operations may take either order") {
    Operation ins = Operation::insert(1, 5), s = Operation::search(1);
    for (Response r : {found(5), missing()}) {
        std::vector<HistoryEvent> h{inv(0, ins, 0), inv(1, s, 1), ret(1, s, r, 2), ret(0, ins, inserted(), 3)};
        CHECK(check_linearizable(h).yes());
    }
    // but not when the search starts after the insert returned
    std::vector<HistoryEvent> h{inv(0, ins, 0), ret(0, ins, inserted(), 1), inv(1, s, 2), ret(1, s, missing(), 3)};
    CHECK(check_linearizable(h).kind == Verdict::Kind::No);
}

TEST_CASE("stale range query is caught") {
    Operation a = Operation::insert(1, 1), b = Operation::insert(2, 2), rq = Operation::range(1, 2);
    // rq sees key 2 but not key 1 though 1 was inserted strictly before 2
    std::vector<HistoryEvent> h{inv(0, a, 0), ret(0, a, inserted(), 1),  inv(0, b, 2),
                                inv(1, rq, 3), ret(1, rq, Response::of_range({{2, 2}}), 4), ret(0, b, inserted(), 5)};
    CHECK(check_linearizable(h).kind == Verdict::Kind::No);
}

TEST_CASE("pending operations may or may not have taken effect") {
    Operation ins = Operation::insert(1, 5), s = Operation::search(1);
    for (Response r : {found(5), missing()}) {
        std::vector<HistoryEvent> h{inv(0, ins, 0), inv(1, s, 1), ret(1, s, r, 2)};
        CHECK(check_linearizable(h).yes());
    }
}

TEST_CASE("bounds and malformed histories") {
    std::vector<HistoryEvent> h;
    for (std::size_t t = 0; t < 5; ++t) h.push_back(inv(t, Operation::search(1), t));
    CHECK(check_linearizable(h).kind == Verdict::Kind::BoundsExceeded);
    h.clear();
    for (Key k = 1; k <= 9; ++k) {
        h.push_back(inv(0, Operation::search(k), 2 * k));
        h.push_back(ret(0, Operation::search(k), missing(), 2 * k + 1));
    }
    CHECK(check_linearizable(h).kind == Verdict::Kind::BoundsExceeded);
    h.clear();
    for (std::uint64_t i = 0; i < 25; ++i) {
        h.push_back(inv(0, Operation::search(1), 2 * i));
        h.push_back(ret(0, Operation::search(1), missing(), 2 * i + 1));
    }
    CHECK(check_linearizable(h).kind == Verdict::Kind::BoundsExceeded);
    CHECK(check_linearizable({ret(0, Operation::search(1), missing(), 0)}).kind == Verdict::Kind::Malformed);
    CHECK(check_linearizable({inv(0, Operation::search(1), 0), inv(0, Operation::search(1), 1)}).kind ==
          Verdict::Kind::Malformed);
}

TEST_CASE("checker self-test against a locked map") {
    std::mt19937_64 rng(2024);
    std::size_t yes = 0, tampered_no = 0, tampered = 0;
    for (int i = 0; i < 10000; ++i) {
        std::size_t threads = 1 + rng() % 4;
        auto h = locked_map_history(rng, threads, 24 / threads, 1 + rng() % 8);
        if (check_linearizable(h).yes()) ++yes;
        // Tamper with one response so it reports a value nobody wrote.
        std::vector<std::size_t> rets;
        for (std::size_t j = 0; j < h.size(); ++j)
            if (!h[j].invoke && h[j].op.type != OpType::RangeQuery) rets.push_back(j);
        if (rets.empty()) continue;
        HistoryEvent& e = h[rets[rng() % rets.size()]];
        switch (e.op.type) {
            case OpType::Insert:
            case OpType::Delete:
            case OpType::Search: e.result = updated(999); break;
            default: break;
        }
        if (e.op.type == OpType::Search) e.result = found(999);
        ++tampered;
        if (check_linearizable(h).kind == Verdict::Kind::No) ++tampered_no;
    }
    CHECK(yes == 10000);
    CHECK(tampered > 9000);
    CHECK(tampered_no == tampered);
}

TEST_CASE("recorder keeps per-thread alternation under concurrency") {
    Recorder rec(4);
    std::vector<std::thread> ts;
    for (std::size_t t = 0; t < 4; ++t)
        ts.emplace_back([&, t] {
            for (int i = 0; i < 1000; ++i) {
                rec.invoke(t, Operation::search(1));
                rec.respond(t, missing());
            }
        });
    for (auto& t : ts) t.join();
    auto h = rec.history();
    REQUIRE(h.size() == 8000);
    std::vector<bool> open(4, false);
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (i) REQUIRE(h[i].seq > h[i - 1].seq);
        REQUIRE(open[h[i].thread] != h[i].invoke);
        open[h[i].thread] = h[i].invoke;
    }
}

TEST_CASE("snapshot check") {
    SUBCASE("no concurrent updates") {
        std::map<Key, Value> base{{1, 10}, {2, 20}};
        auto r = snapshot_check({}, {{1, 5, 7, {{1, 10}, {2, 20}}}}, base);
        CHECK(r.ok);
        CHECK(r.checked == 1);
    }
    SUBCASE("updates straddling the snapshot") {
        std::vector<UpdateEffect> log{{1, 3, 11, 10}, {2, 6, 21, 20}};
        std::map<Key, Value> base{{1, 10}, {2, 20}};
        CHECK(snapshot_check(log, {{1, 2, 5, {{1, 11}, {2, 20}}}}, base).ok);
        CHECK_FALSE(snapshot_check(log, {{1, 2, 5, {{1, 11}, {2, 21}}}}, base).ok);
        CHECK_FALSE(snapshot_check(log, {{1, 2, 5, {{1, 10}, {2, 20}}}}, base).ok);
    }
    SUBCASE("deletes at or before the snapshot are excluded") {
        std::vector<UpdateEffect> log{{1, 4, 11, std::nullopt}, {1, 5, TOMBSTONE, 11}};
        CHECK(snapshot_check(log, {{1, 1, 5, {}}}).ok);
        CHECK(snapshot_check(log, {{1, 1, 4, {{1, 11}}}}).ok);
        CHECK_FALSE(snapshot_check(log, {{1, 1, 5, {{1, 11}}}}).ok);
    }
    SUBCASE("equal timestamps resolve through the replaced values") {
        std::vector<UpdateEffect> log{{1, 4, 13, 12}, {1, 4, 11, std::nullopt}, {1, 4, 12, 11}};
        auto r = snapshot_check(log, {{1, 1, 4, {{1, 13}}}, {1, 1, 3, {}}});
        CHECK(r.ok);
        CHECK(r.final_state == std::map<Key, Value>{{1, 13}});
    }
    SUBCASE("inconsistent logs are reported") {
        CHECK_FALSE(snapshot_check({{1, 4, 12, 99}}, {}).ok);
        CHECK_FALSE(snapshot_check({{1, 4, 12, std::nullopt}, {1, 4, 13, std::nullopt}}, {}).ok);
    }
}

TEST_CASE("stress smoke") {
    StressConfig c;
    c.threads = 2;
    c.ops_per_thread = 1000;
    c.store.tree = {4, 2, 4, 2, 0};
    StressReport r = stress(c);
    for (auto& f : r.failures) MESSAGE(f);
    CHECK(r.ok);
    CHECK(r.ops == 2000);
    CHECK(r.snapshots.checked > 0);
}

TEST_CASE("stress with forced slow path and prefill") {
    StressConfig c;
    c.threads = 4;
    c.ops_per_thread = 5000;
    c.window_ops = 1000;
    c.prefill = 300;
    c.keyspace = 500;
    c.slow_path_threads = 2;
    c.store.tree = {4, 2, 4, 2, 0};
    StressReport r = stress(c);
    for (auto& f : r.failures) MESSAGE(f);
    CHECK(r.ok);
    CHECK(r.windows == 5);
    CHECK(r.stats.slow_path_entries > 0);
}

TEST_CASE("stress rejects invalid configs") {
    StressConfig c;
    c.rq_pct = 50;
    CHECK_THROWS_AS(stress(c), std::invalid_argument);
    c = StressConfig{};
    c.prefill = c.keyspace + 1;
    CHECK_THROWS_AS(stress(c), std::invalid_argument);
}

TEST_CASE("small lincheck campaign on the real store") {
    LincheckConfig c;
    c.histories = 100;
    c.store.tree = {4, 2, 4, 2, 0};
    LincheckReport r = lincheck_campaign(c);
    for (auto& l : r.first_failure) MESSAGE(l);
    CHECK(r.ok);
    CHECK(r.passed == 100);
}
