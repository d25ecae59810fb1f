#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "uruv/core.hpp"
#include "uruv/waitfree.hpp"

namespace uruv {

struct WorkloadConfig {
    // Operation mix in percent; must sum to 100.
    double read_pct = 94;
    double insert_pct = 2.5;
    double delete_pct = 2.5;
    double rq_pct = 1;
    Key rq_size = 1000;
    std::size_t prefill = 100000;
    Key keyspace = 500000;
    std::size_t threads = 1;
    double duration_s = 5;
    // When non-zero each thread runs exactly this many operations instead of
    // running for duration_s.
    std::uint64_t ops_per_thread = 0;
    std::uint64_t seed = 1;
    StoreConfig store;

    void validate() const;
};

enum class BenchOp : std::uint8_t { Read, Insert, Delete, RangeQuery };

struct GeneratedOp {
    BenchOp op;
    Key key;
    Key high;
    Value value;
};

// The per-thread operation stream; a function of (seed, thread) only.
class OpStream {
public:
    OpStream(const WorkloadConfig& cfg, std::size_t tid);
    GeneratedOp next();

private:
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> pick_{0.0, 100.0};
    std::uniform_int_distribution<Key> key_;
    double c_read_, c_insert_, c_delete_;
    Key keyspace_;
    Key rq_size_;
};

// Distinct keys drawn uniformly from [1, keyspace].
std::vector<Key> prefill_keys(const WorkloadConfig& cfg);

struct BenchMetrics {
    double elapsed_s = 0;
    std::uint64_t total_ops = 0;
    std::uint64_t reads = 0;
    std::uint64_t inserts = 0;
    std::uint64_t deletes = 0;
    std::uint64_t range_queries = 0;
    std::uint64_t range_keys_returned = 0;
    double throughput = 0;  // ops per second, all kinds
    double read_throughput = 0;
    double insert_throughput = 0;
    double delete_throughput = 0;
    double rq_throughput = 0;
    std::vector<std::uint64_t> per_thread_ops;
    // Hashes of the generated operations and of their results, per thread,
    // folded in thread order.
    std::uint64_t stream_hash = 0;
    std::uint64_t result_hash = 0;
    StoreStats store;
    bool structure_ok = true;
    std::vector<std::string> violations;
    std::int64_t version_nodes_after_quiesce = 0;
};

BenchMetrics run_bench(const WorkloadConfig& cfg);

}  // namespace uruv
