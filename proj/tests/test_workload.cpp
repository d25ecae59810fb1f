#include <unordered_set>

#include "doctest.h"
#include "uruv/workload.hpp"

using namespace uruv;

namespace {
WorkloadConfig tiny() {
    WorkloadConfig c;
    c.prefill = 1000;
    c.keyspace = 5000;
    c.rq_size = 50;
    c.duration_s = 0.2;
    return c;
}
}  // namespace

TEST_CASE("workload validation") {
    WorkloadConfig c = tiny();
    CHECK_NOTHROW(c.validate());
    c.read_pct = 95;
    CHECK_THROWS_WITH_AS(c.validate(), "workload: percentages must sum to 100", std::invalid_argument);
    c = tiny();
    c.read_pct = -1;
    c.insert_pct = 98;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny();
    c.prefill = c.keyspace + 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny();
    c.threads = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny();
    c.threads = c.store.max_threads;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny();
    c.store.tree.leaf_max = 2;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("prefill draws distinct keys inside the keyspace") {
    WorkloadConfig c = tiny();
    for (std::size_t n : {0UL, 10UL, 1000UL, 4000UL, 5000UL}) {
        c.prefill = n;
        auto keys = prefill_keys(c);
        REQUIRE(keys.size() == n);
        std::unordered_set<Key> s(keys.begin(), keys.end());
        CHECK(s.size() == n);
        for (Key k : keys) REQUIRE((k >= 1 && k <= c.keyspace));
        CHECK(prefill_keys(c) == keys);
    }
}

TEST_CASE("op streams follow the mix and depend only on the seed") {
    WorkloadConfig c = tiny();
    c.read_pct = 50;
    c.insert_pct = 20;
    c.delete_pct = 20;
    c.rq_pct = 10;
    OpStream a(c, 0), b(c, 0), other(c, 1);
    int counts[4] = {0, 0, 0, 0};
    bool differs = false;
    for (int i = 0; i < 100000; ++i) {
        GeneratedOp x = a.next(), y = b.next(), z = other.next();
        REQUIRE((x.op == y.op && x.key == y.key && x.value == y.value));
        differs = differs || x.key != z.key;
        ++counts[static_cast<int>(x.op)];
        REQUIRE((x.key >= 1 && x.key <= c.keyspace));
        if (x.op == BenchOp::RangeQuery) REQUIRE((x.high >= x.key && x.high - x.key < c.rq_size));
        REQUIRE(x.value != TOMBSTONE);
    }
    CHECK(differs);
    CHECK(counts[0] == doctest::Approx(50000).epsilon(0.02));
    CHECK(counts[1] == doctest::Approx(20000).epsilon(0.03));
    CHECK(counts[2] == doctest::Approx(20000).epsilon(0.03));
    CHECK(counts[3] == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("read-only single thread makes progress without the slow path") {
    WorkloadConfig c = tiny();
    c.read_pct = 100;
    c.insert_pct = c.delete_pct = c.rq_pct = 0;
    c.duration_s = 1;
    BenchMetrics m = run_bench(c);
    CHECK(m.throughput > 0);
    CHECK(m.reads == m.total_ops);
    CHECK(m.store.slow_path_entries == 0);
    CHECK(m.structure_ok);
}

TEST_CASE("equal seeds give equal streams and, on one thread, equal results") {
    WorkloadConfig c = tiny();
    c.read_pct = 40;
    c.insert_pct = 25;
    c.delete_pct = 25;
    c.rq_pct = 10;
    c.ops_per_thread = 20000;
    BenchMetrics a = run_bench(c), b = run_bench(c);
    CHECK(a.stream_hash == b.stream_hash);
    CHECK(a.result_hash == b.result_hash);
    CHECK(a.total_ops == 20000);
    c.seed = 2;
    CHECK(run_bench(c).stream_hash != a.stream_hash);
}

TEST_CASE("read-heavy mix at desk scale passes the post-run validators") {
    WorkloadConfig c;  // defaults: 94/2.5/2.5/1, rq 1000, prefill 1e5 of 5e5
    c.threads = 4;
    c.duration_s = 1;
    BenchMetrics m = run_bench(c);
    for (auto& v : m.violations) MESSAGE(v);
    CHECK(m.structure_ok);
    CHECK(m.total_ops > 0);
    CHECK(m.range_queries > 0);
    CHECK(m.per_thread_ops.size() == 4);
}
