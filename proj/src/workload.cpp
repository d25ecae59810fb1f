#include "uruv/workload.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace uruv {

void WorkloadConfig::validate() const {
    for (double p : {read_pct, insert_pct, delete_pct, rq_pct})
        if (p < 0 || !std::isfinite(p)) throw std::invalid_argument("workload: percentages must be non-negative");
    if (std::abs(read_pct + insert_pct + delete_pct + rq_pct - 100.0) > 1e-9)
        throw std::invalid_argument("workload: percentages must sum to 100");
    if (keyspace == 0 || keyspace >= KEY_POS_INF - 1) throw std::invalid_argument("workload: keyspace out of range");
    if (prefill > keyspace) throw std::invalid_argument("workload: prefill exceeds keyspace");
    if (rq_size == 0) throw std::invalid_argument("workload: rq_size must be >= 1");
    if (threads == 0) throw std::invalid_argument("workload: threads must be >= 1");
    if (ops_per_thread == 0 && !(duration_s > 0)) throw std::invalid_argument("workload: duration must be > 0");
    if (threads + 1 > store.max_threads) throw std::invalid_argument("workload: more threads than store slots");
    store.tree.validate();
    store.wait_free.validate();
}

OpStream::OpStream(const WorkloadConfig& cfg, std::size_t tid)
    : rng_(cfg.seed ^ (0x9E3779B97F4A7C15ULL * (tid + 1))), key_(1, cfg.keyspace),
      c_read_(cfg.read_pct), c_insert_(cfg.read_pct + cfg.insert_pct),
      c_delete_(cfg.read_pct + cfg.insert_pct + cfg.delete_pct), keyspace_(cfg.keyspace), rq_size_(cfg.rq_size) {}

GeneratedOp OpStream::next() {
    double p = pick_(rng_);
    Key k = key_(rng_);
    Value v = rng_() % (TOMBSTONE - 1);
    if (p < c_read_) return {BenchOp::Read, k, k, 0};
    if (p < c_insert_) return {BenchOp::Insert, k, k, v};
    if (p < c_delete_) return {BenchOp::Delete, k, k, 0};
    return {BenchOp::RangeQuery, k, std::min<Key>(k + rq_size_ - 1, keyspace_), 0};
}

std::vector<Key> prefill_keys(const WorkloadConfig& cfg) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<Key> dist(1, cfg.keyspace);
    std::vector<Key> out;
    out.reserve(cfg.prefill);
    if (cfg.prefill * 2 > cfg.keyspace) {
        // Dense: shuffle the whole key range.
        std::vector<Key> all(cfg.keyspace);
        for (Key k = 0; k < cfg.keyspace; ++k) all[k] = k + 1;
        std::shuffle(all.begin(), all.end(), rng);
        out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.prefill));
        return out;
    }
    std::unordered_set<Key> seen;
    while (out.size() < cfg.prefill) {
        Key k = dist(rng);
        if (seen.insert(k).second) out.push_back(k);
    }
    return out;
}

namespace {

inline std::uint64_t mix(std::uint64_t h, std::uint64_t x) {
    h ^= x + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    return h;
}

struct ThreadTally {
    std::uint64_t ops = 0, reads = 0, inserts = 0, deletes = 0, rqs = 0, rq_keys = 0;
    std::uint64_t stream_hash = 0, result_hash = 0;
};

}  // namespace

BenchMetrics run_bench(const WorkloadConfig& cfg) {
    cfg.validate();
    Store store(cfg.store);
    std::vector<ThreadHandle> hs;
    for (std::size_t t = 0; t < cfg.threads; ++t) hs.push_back(store.register_thread());
    ThreadHandle main_h = store.register_thread();

    std::mt19937_64 vrng(cfg.seed + 1);
    for (Key k : prefill_keys(cfg)) store.insert(main_h, k, vrng() % (TOMBSTONE - 1));

    std::vector<ThreadTally> tallies(cfg.threads);
    std::atomic<std::size_t> ready{0};
    std::atomic<bool> go{false}, stop{false};
    std::vector<std::thread> ts;
    for (std::size_t t = 0; t < cfg.threads; ++t) {
        ts.emplace_back([&, t] {
            OpStream stream(cfg, t);
            ThreadTally tl;
            ready.fetch_add(1);
            while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
            while (cfg.ops_per_thread ? tl.ops < cfg.ops_per_thread : !stop.load(std::memory_order_relaxed)) {
                GeneratedOp op = stream.next();
                tl.stream_hash = mix(mix(mix(tl.stream_hash, static_cast<std::uint64_t>(op.op)), op.key), op.value);
                std::uint64_t rh = 0;
                switch (op.op) {
                    case BenchOp::Read: {
                        OpResult r = store.search(hs[t], op.key);
                        rh = mix(static_cast<std::uint64_t>(r.kind), r.value.value_or(0));
                        ++tl.reads;
                        break;
                    }
                    case BenchOp::Insert: {
                        OpResult r = store.insert(hs[t], op.key, op.value);
                        rh = mix(static_cast<std::uint64_t>(r.kind), r.value.value_or(0));
                        ++tl.inserts;
                        break;
                    }
                    case BenchOp::Delete: {
                        OpResult r = store.remove(hs[t], op.key);
                        rh = mix(static_cast<std::uint64_t>(r.kind), r.value.value_or(0));
                        ++tl.deletes;
                        break;
                    }
                    case BenchOp::RangeQuery: {
                        auto out = store.range_query(hs[t], op.key, op.high);
                        rh = out.size();
                        for (auto& [k, v] : out) rh = mix(mix(rh, k), v);
                        tl.rq_keys += out.size();
                        ++tl.rqs;
                        break;
                    }
                }
                tl.result_hash = mix(tl.result_hash, rh);
                ++tl.ops;
            }
            tallies[t] = tl;
        });
    }
    while (ready.load() < cfg.threads) std::this_thread::yield();
    auto start = std::chrono::steady_clock::now();
    go.store(true, std::memory_order_release);
    if (!cfg.ops_per_thread) {
        std::this_thread::sleep_for(std::chrono::duration<double>(cfg.duration_s));
        stop.store(true);
    }
    for (auto& t : ts) t.join();
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    BenchMetrics m;
    m.elapsed_s = elapsed;
    for (const ThreadTally& tl : tallies) {
        m.total_ops += tl.ops;
        m.reads += tl.reads;
        m.inserts += tl.inserts;
        m.deletes += tl.deletes;
        m.range_queries += tl.rqs;
        m.range_keys_returned += tl.rq_keys;
        m.per_thread_ops.push_back(tl.ops);
        m.stream_hash = mix(m.stream_hash, tl.stream_hash);
        m.result_hash = mix(m.result_hash, tl.result_hash);
    }
    if (elapsed > 0) {
        m.throughput = static_cast<double>(m.total_ops) / elapsed;
        m.read_throughput = static_cast<double>(m.reads) / elapsed;
        m.insert_throughput = static_cast<double>(m.inserts) / elapsed;
        m.delete_throughput = static_cast<double>(m.deletes) / elapsed;
        m.rq_throughput = static_cast<double>(m.range_queries) / elapsed;
    }
    ValidationReport r = store.validate_structure();
    m.structure_ok = r.ok;
    m.violations = r.violations;
    m.store = store.stats();
    if (m.store.search_restarts != 0) {
        m.structure_ok = false;
        m.violations.push_back("search restarted");
    }
    store.quiesce();
    m.version_nodes_after_quiesce = alloc_counters().version_nodes.load();
    return m;
}

}  // namespace uruv
