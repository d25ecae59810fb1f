#include "uruv/verify.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include "uruv/hooks.hpp"

namespace uruv::verify {

namespace {

const char* type_name(OpType t) {
    switch (t) {
        case OpType::Insert: return "insert";
        case OpType::Delete: return "delete";
        case OpType::Search: return "search";
        case OpType::RangeQuery: return "range";
    }
    return "?";
}

thread_local bool t_force_slow = false;

// Installs the slow-path veto for the lifetime of a run, if this build has hooks.
struct SlowPathVeto {
    bool active;
    explicit SlowPathVeto(bool want) : active(want && hooks::compiled_in()) {
        if (active) hooks::set("waitfree:fast-path", [] { return t_force_slow; });
    }
    ~SlowPathVeto() {
        if (active) hooks::clear("waitfree:fast-path");
    }
};

}  // namespace

std::string to_string(const Operation& op) {
    std::ostringstream os;
    os << type_name(op.type) << "(" << op.key;
    if (op.type == OpType::Insert) os << ", " << op.value;
    if (op.type == OpType::RangeQuery) os << ".." << op.high;
    os << ")";
    return os.str();
}

std::string to_string(const Response& r) {
    std::ostringstream os;
    os << uruv::to_string(r.kind);
    if (r.value) os << " " << *r.value;
    if (!r.range.empty() || r.kind == OpKind::OperationFinished) {
        os << " [";
        for (std::size_t i = 0; i < r.range.size(); ++i) {
            if (i) os << ", ";
            os << r.range[i].first << ":" << r.range[i].second;
        }
        os << "]";
    }
    return os.str();
}

Response apply_to(std::map<Key, Value>& state, const Operation& op) {
    switch (op.type) {
        case OpType::Insert: {
            auto [it, fresh] = state.try_emplace(op.key, op.value);
            if (fresh) return Response{OpKind::NewKeyInserted, std::nullopt, {}};
            Value prev = it->second;
            it->second = op.value;
            return Response{OpKind::KeyUpdated, prev, {}};
        }
        case OpType::Delete: {
            auto it = state.find(op.key);
            if (it == state.end()) return Response{OpKind::KeyNotPresent, std::nullopt, {}};
            Value prev = it->second;
            state.erase(it);
            return Response{OpKind::KeyUpdated, prev, {}};
        }
        case OpType::Search: {
            auto it = state.find(op.key);
            if (it == state.end()) return Response{OpKind::KeyNotPresent, std::nullopt, {}};
            return Response{OpKind::OperationFinished, it->second, {}};
        }
        case OpType::RangeQuery: {
            Range out;
            if (op.key <= op.high) {
                for (auto it = state.lower_bound(op.key); it != state.end() && it->first <= op.high; ++it)
                    out.push_back(*it);
            }
            return Response::of_range(std::move(out));
        }
    }
    return {};
}

Response SequentialOracle::apply_at(const Operation& op, Timestamp ts) {
    if (!log_.empty() && ts < log_.back().ts) throw std::invalid_argument("oracle: timestamps went backwards");
    Response r = apply_to(state_, op);
    if (op.type == OpType::Insert) log_.push_back({ts, op.key, op.value});
    if (op.type == OpType::Delete && r.kind == OpKind::KeyUpdated) log_.push_back({ts, op.key, TOMBSTONE});
    return r;
}

std::map<Key, Value> SequentialOracle::snapshot_at(Timestamp t) const {
    std::map<Key, Value> out;
    for (const Effect& e : log_) {
        if (e.ts > t) break;
        if (is_tombstone(e.value)) out.erase(e.key);
        else out[e.key] = e.value;
    }
    return out;
}

Range SequentialOracle::range(Key low, Key high) const {
    Range out;
    if (low > high) return out;
    for (auto it = state_.lower_bound(low); it != state_.end() && it->first <= high; ++it) out.push_back(*it);
    return out;
}

Recorder::Recorder(std::size_t threads) : logs_(threads) {}

void Recorder::invoke(std::size_t tid, const Operation& op) {
    Log& l = logs_.at(tid);
    l.pending = op;
    l.events.push_back(HistoryEvent{tid, true, op, {}, seq_.fetch_add(1, std::memory_order_seq_cst)});
}

void Recorder::respond(std::size_t tid, const Response& r) {
    Log& l = logs_.at(tid);
    l.events.push_back(HistoryEvent{tid, false, l.pending, r, seq_.fetch_add(1, std::memory_order_seq_cst)});
}

std::vector<HistoryEvent> Recorder::history() const {
    std::vector<HistoryEvent> all;
    for (const Log& l : logs_) all.insert(all.end(), l.events.begin(), l.events.end());
    std::sort(all.begin(), all.end(), [](const HistoryEvent& a, const HistoryEvent& b) { return a.seq < b.seq; });
    return all;
}

namespace {

struct LinOp {
    Operation op;
    std::optional<Response> resp;
    std::uint64_t inv;
    std::uint64_t res;  // max for pending
    std::size_t event;
};

// Turns events into operations; an empty optional with `err` set on malformed input.
std::optional<std::vector<LinOp>> pair_events(const std::vector<HistoryEvent>& h, std::string& err) {
    std::vector<LinOp> ops;
    std::map<std::size_t, std::size_t> open;  // thread -> index in ops
    for (std::size_t i = 0; i < h.size(); ++i) {
        const HistoryEvent& e = h[i];
        if (i > 0 && e.seq <= h[i - 1].seq) {
            err = "events not ordered by sequence number";
            return std::nullopt;
        }
        auto it = open.find(e.thread);
        if (e.invoke) {
            if (it != open.end()) {
                err = "thread " + std::to_string(e.thread) + " invoked twice without a response";
                return std::nullopt;
            }
            open[e.thread] = ops.size();
            ops.push_back(LinOp{e.op, std::nullopt, e.seq, std::numeric_limits<std::uint64_t>::max(), i});
        } else {
            if (it == open.end()) {
                err = "thread " + std::to_string(e.thread) + " responded without an invocation";
                return std::nullopt;
            }
            LinOp& o = ops[it->second];
            if (!(o.op == e.op)) {
                err = "response does not match the pending operation";
                return std::nullopt;
            }
            o.resp = e.result;
            o.res = e.seq;
            open.erase(it);
        }
    }
    return ops;
}

class WingGong {
public:
    explicit WingGong(const std::vector<LinOp>& ops) : ops_(ops) {
        for (std::size_t i = 0; i < ops.size(); ++i)
            if (ops[i].resp) complete_ |= (1U << i);
    }

    bool run() {
        std::map<Key, Value> state;
        return dfs(0, state);
    }
    const std::vector<std::size_t>& order() const { return order_; }

private:
    std::string encode(std::uint32_t mask, const std::map<Key, Value>& state) const {
        std::string s(reinterpret_cast<const char*>(&mask), sizeof mask);
        for (const auto& [k, v] : state) {
            s.append(reinterpret_cast<const char*>(&k), sizeof k);
            s.append(reinterpret_cast<const char*>(&v), sizeof v);
        }
        return s;
    }

    bool dfs(std::uint32_t mask, const std::map<Key, Value>& state) {
        if ((mask & complete_) == complete_) return true;
        std::string memo = encode(mask, state);
        if (dead_.count(memo)) return false;
        std::uint64_t min_res = std::numeric_limits<std::uint64_t>::max();
        for (std::size_t i = 0; i < ops_.size(); ++i)
            if (!(mask & (1U << i))) min_res = std::min(min_res, ops_[i].res);
        for (std::size_t i = 0; i < ops_.size(); ++i) {
            if (mask & (1U << i)) continue;
            if (ops_[i].inv > min_res) continue;
            std::map<Key, Value> next = state;
            Response r = apply_to(next, ops_[i].op);
            if (ops_[i].resp && !(r == *ops_[i].resp)) continue;
            order_.push_back(i);
            if (dfs(mask | (1U << i), next)) return true;
            order_.pop_back();
        }
        dead_.insert(std::move(memo));
        return false;
    }

    const std::vector<LinOp>& ops_;
    std::uint32_t complete_ = 0;
    std::unordered_set<std::string> dead_;
    std::vector<std::size_t> order_;
};

}  // namespace

Verdict check_linearizable(const std::vector<HistoryEvent>& history, const LinBounds& bounds) {
    Verdict v;
    std::string err;
    auto ops = pair_events(history, err);
    if (!ops) {
        v.kind = Verdict::Kind::Malformed;
        v.detail = err;
        return v;
    }
    std::set<std::size_t> threads;
    std::set<Key> keys;
    for (const HistoryEvent& e : history) threads.insert(e.thread);
    for (const LinOp& o : *ops) {
        keys.insert(o.op.key);
        if (o.op.type == OpType::RangeQuery) keys.insert(o.op.high);
    }
    const std::size_t op_cap = std::min<std::size_t>(bounds.ops, 32);
    if (threads.size() > bounds.threads || ops->size() > op_cap || keys.size() > bounds.keys) {
        v.kind = Verdict::Kind::BoundsExceeded;
        v.detail = std::to_string(threads.size()) + " threads, " + std::to_string(ops->size()) + " ops, " +
                   std::to_string(keys.size()) + " keys";
        return v;
    }

    WingGong full(*ops);
    if (full.run()) {
        for (std::size_t i : full.order()) v.witness.push_back((*ops)[i].event);
        return v;
    }

    v.kind = Verdict::Kind::No;
    // Linearizability is prefix-closed once unanswered calls count as pending,
    // so the first failing prefix is the minimal one.
    for (std::size_t k = 1; k <= history.size(); ++k) {
        std::vector<HistoryEvent> prefix(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(k));
        auto pops = pair_events(prefix, err);
        WingGong wg(*pops);
        if (!wg.run()) {
            v.violating_prefix = std::move(prefix);
            const HistoryEvent& last = v.violating_prefix.back();
            v.detail = "no linearization once thread " + std::to_string(last.thread) + " " +
                       (last.invoke ? "invokes " : "returns ") + to_string(last.op) +
                       (last.invoke ? "" : " -> " + to_string(last.result));
            break;
        }
    }
    return v;
}

std::optional<UpdateEffect> effect_of(const Operation& op, const OpResult& r) {
    if (op.type == OpType::Insert) {
        if (r.kind == OpKind::NewKeyInserted) return UpdateEffect{op.key, r.ts, op.value, std::nullopt};
        // An update to the value already there installs nothing.
        if (r.kind == OpKind::KeyUpdated && r.value != std::optional<Value>(op.value))
            return UpdateEffect{op.key, r.ts, op.value, r.value};
    } else if (op.type == OpType::Delete && r.kind == OpKind::KeyUpdated) {
        return UpdateEffect{op.key, r.ts, TOMBSTONE, r.value};
    }
    return std::nullopt;
}

void SnapshotReport::fail(std::string m) {
    ok = false;
    ++violations;
    if (messages.size() < 16) messages.push_back(std::move(m));
}

namespace {

inline constexpr Value ABSENT_MARK = TOMBSTONE;

// Per key: the value (or ABSENT_MARK) after all effects up to each timestamp.
struct Timeline {
    std::vector<std::pair<Timestamp, Value>> points;
    Value base = ABSENT_MARK;

    Value at(Timestamp s) const {
        auto it = std::upper_bound(points.begin(), points.end(), s,
                                   [](Timestamp t, const auto& p) { return t < p.first; });
        if (it == points.begin()) return base;
        return std::prev(it)->second;
    }
};

}  // namespace

SnapshotReport snapshot_check(const std::vector<UpdateEffect>& run_log, const std::vector<RangeRecord>& rq_results,
                              const std::map<Key, Value>& base) {
    SnapshotReport rep;
    std::map<Key, std::vector<const UpdateEffect*>> by_key;
    for (const UpdateEffect& e : run_log) {
        if (e.ts < 0) rep.fail("update on key " + std::to_string(e.key) + " has no timestamp");
        by_key[e.key].push_back(&e);
    }
    std::map<Key, Timeline> lines;
    for (const auto& [k, v] : base) lines[k].base = v;
    for (auto& [key, effects] : by_key) {
        std::stable_sort(effects.begin(), effects.end(),
                         [](const UpdateEffect* a, const UpdateEffect* b) { return a->ts < b->ts; });
        Timeline& tl = lines[key];
        std::set<Value> live;
        if (tl.base != ABSENT_MARK) live.insert(tl.base);
        for (std::size_t i = 0; i < effects.size();) {
            std::size_t j = i;
            Timestamp ts = effects[i]->ts;
            // The order inside a batch of equal timestamps is unknown, but the
            // net produced-minus-consumed set does not depend on it.
            for (; j < effects.size() && effects[j]->ts == ts; ++j)
                if (!is_tombstone(effects[j]->produced)) live.insert(effects[j]->produced);
            for (std::size_t x = i; x < j; ++x) {
                if (!effects[x]->consumed) continue;
                if (live.erase(*effects[x]->consumed) == 0)
                    rep.fail("key " + std::to_string(key) + ": value " + std::to_string(*effects[x]->consumed) +
                             " replaced at ts " + std::to_string(ts) + " was never current");
            }
            if (live.size() > 1)
                rep.fail("key " + std::to_string(key) + " has " + std::to_string(live.size()) +
                         " current values at ts " + std::to_string(ts));
            tl.points.emplace_back(ts, live.empty() ? ABSENT_MARK : *live.begin());
            i = j;
        }
    }
    for (const auto& [k, tl] : lines) {
        Value v = tl.points.empty() ? tl.base : tl.points.back().second;
        if (v != ABSENT_MARK) rep.final_state[k] = v;
    }

    for (const RangeRecord& rq : rq_results) {
        ++rep.checked;
        Range expect;
        if (rq.low <= rq.high) {
            for (auto it = lines.lower_bound(rq.low); it != lines.end() && it->first <= rq.high; ++it) {
                Value v = it->second.at(rq.snapshot);
                if (v != ABSENT_MARK) expect.emplace_back(it->first, v);
            }
        }
        if (expect != rq.result) {
            std::ostringstream os;
            os << "range [" << rq.low << ", " << rq.high << "] at " << rq.snapshot << " returned "
               << rq.result.size() << " pairs, reconstruction has " << expect.size();
            for (std::size_t i = 0; i < std::max(expect.size(), rq.result.size()); ++i) {
                bool a = i < expect.size(), b = i < rq.result.size();
                if (a && b && expect[i] == rq.result[i]) continue;
                os << "; first difference: expected ";
                if (a) os << expect[i].first << ":" << expect[i].second;
                else os << "nothing";
                os << ", got ";
                if (b) os << rq.result[i].first << ":" << rq.result[i].second;
                else os << "nothing";
                break;
            }
            rep.fail(os.str());
        }
    }
    return rep;
}

void StressConfig::validate() const {
    if (threads == 0) throw std::invalid_argument("stress: threads must be >= 1");
    if (keyspace == 0) throw std::invalid_argument("stress: keyspace must be >= 1");
    if (insert_pct < 0 || delete_pct < 0 || search_pct < 0 || rq_pct < 0 ||
        insert_pct + delete_pct + search_pct + rq_pct != 100)
        throw std::invalid_argument("stress: operation percentages must be non-negative and sum to 100");
    if (prefill > keyspace) throw std::invalid_argument("stress: prefill exceeds keyspace");
    if (rq_size == 0) throw std::invalid_argument("stress: rq_size must be >= 1");
    if (window_ops == 0) throw std::invalid_argument("stress: window_ops must be >= 1");
    if (duration_s < 0) throw std::invalid_argument("stress: negative duration");
}

void StressReport::fail(std::string m) {
    ok = false;
    if (failures.size() < 32) failures.push_back(std::move(m));
}

namespace {

struct Worker {
    std::mt19937_64 rng;
    std::uint64_t counter = 0;
    std::uint64_t ops = 0;
    std::vector<UpdateEffect> effects;
    std::vector<RangeRecord> ranges;
    std::vector<std::string> errors;
};

// Unique, never the tombstone.
inline Value unique_value(std::size_t tid, std::uint64_t counter) {
    return (static_cast<Value>(tid + 1) << 40) | (counter & ((Value{1} << 40) - 1));
}

}  // namespace

StressReport stress(const StressConfig& cfg) {
    cfg.validate();
    StressReport rep;
    StoreConfig sc = cfg.store;
    sc.max_threads = std::max(sc.max_threads, cfg.threads + 1);
    Store store(sc);
    std::vector<ThreadHandle> hs;
    for (std::size_t t = 0; t < cfg.threads; ++t) hs.push_back(store.register_thread());
    ThreadHandle main_h = store.register_thread();
    SlowPathVeto veto(cfg.slow_path_threads > 0);
    if (cfg.slow_path_threads > 0 && !veto.active)
        rep.fail("slow-path forcing requested but pause points are not compiled into this build");

    std::mt19937_64 prng(cfg.seed);
    std::map<Key, Value> base;
    {
        std::vector<Key> keys(cfg.keyspace);
        for (Key k = 0; k < cfg.keyspace; ++k) keys[k] = k + 1;
        std::shuffle(keys.begin(), keys.end(), prng);
        for (std::size_t i = 0; i < cfg.prefill; ++i) {
            Value v = unique_value(cfg.threads, i);
            store.insert(main_h, keys[i], v);
            base[keys[i]] = v;
        }
    }

    std::vector<Worker> workers(cfg.threads);
    for (std::size_t t = 0; t < cfg.threads; ++t) workers[t].rng.seed(cfg.seed * 0x9E3779B97F4A7C15ULL + t + 1);

    const auto start = std::chrono::steady_clock::now();
    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(cfg.duration_s));
    const bool timed = cfg.duration_s > 0;
    auto done = [&](const Worker& w) {
        return timed ? std::chrono::steady_clock::now() >= deadline : w.ops >= cfg.ops_per_thread;
    };

    bool more = true;
    while (more) {
        std::vector<std::thread> ts;
        for (std::size_t t = 0; t < cfg.threads; ++t) {
            ts.emplace_back([&, t] {
                Worker& w = workers[t];
                t_force_slow = t < cfg.slow_path_threads;
                const int c1 = cfg.insert_pct, c2 = c1 + cfg.delete_pct, c3 = c2 + cfg.search_pct;
                for (std::size_t i = 0; i < cfg.window_ops && !done(w); ++i) {
                    Key k = 1 + w.rng() % cfg.keyspace;
                    int dice = static_cast<int>(w.rng() % 100);
                    try {
                        if (dice < c2) {
                            Operation op = dice < c1 ? Operation::insert(k, unique_value(t, ++w.counter))
                                                     : Operation::remove(k);
                            OpResult r = op.type == OpType::Insert ? store.insert(hs[t], k, op.value)
                                                                   : store.remove(hs[t], k);
                            if (r.failed()) w.errors.push_back("update returned Failed");
                            if (cfg.check_snapshots) {
                                if (auto e = effect_of(op, r)) w.effects.push_back(*e);
                            }
                        } else if (dice < c3) {
                            store.search(hs[t], k);
                        } else {
                            Key hi = std::min<Key>(k + cfg.rq_size - 1, cfg.keyspace);
                            RangeRecord rr{k, hi, 0, {}};
                            rr.result = store.range_query(hs[t], k, hi, &rr.snapshot);
                            if (cfg.check_snapshots) w.ranges.push_back(std::move(rr));
                        }
                    } catch (const std::exception& ex) {
                        w.errors.push_back(ex.what());
                    }
                    ++w.ops;
                }
                t_force_slow = false;
            });
        }
        for (auto& t : ts) t.join();
        ++rep.windows;

        if (cfg.check_snapshots) {
            std::vector<UpdateEffect> effects;
            std::vector<RangeRecord> ranges;
            for (Worker& w : workers) {
                effects.insert(effects.end(), w.effects.begin(), w.effects.end());
                for (auto& r : w.ranges) ranges.push_back(std::move(r));
                w.effects.clear();
                w.ranges.clear();
            }
            SnapshotReport sr = snapshot_check(effects, ranges, base);
            rep.snapshots.checked += sr.checked;
            rep.snapshots.violations += sr.violations;
            rep.snapshots.ok = rep.snapshots.ok && sr.ok;
            for (auto& m : sr.messages)
                if (rep.snapshots.messages.size() < 16) rep.snapshots.messages.push_back(m);
            base = std::move(sr.final_state);
        }
        more = false;
        for (const Worker& w : workers) more = more || !done(w);
    }
    rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    for (std::size_t t = 0; t < cfg.threads; ++t) {
        rep.per_thread_ops.push_back(workers[t].ops);
        rep.ops += workers[t].ops;
        for (const auto& e : workers[t].errors) rep.fail("thread " + std::to_string(t) + ": " + e);
    }

    if (cfg.check_snapshots) {
        rep.snapshots.final_state = base;
        if (!rep.snapshots.ok) {
            rep.fail(std::to_string(rep.snapshots.violations) + " snapshot violations");
            for (const auto& m : rep.snapshots.messages) rep.fail("snapshot: " + m);
        }
        Range contents = store.range_query(main_h, 1, KEY_POS_INF - 1);
        rep.final_state_matches = contents == Range(base.begin(), base.end());
        if (!rep.final_state_matches) rep.fail("final contents differ from the reconstructed state");
    }

    rep.structure = store.validate_structure();
    if (!rep.structure.ok) {
        for (const auto& v : rep.structure.violations) rep.fail("structure: " + v);
    }
    rep.live_keys = rep.structure.live_keys;
    rep.stats = store.stats();
    if (rep.stats.search_restarts != 0) rep.fail("search restarted " + std::to_string(rep.stats.search_restarts) + " times");
    if (rep.stats.double_retires != 0) rep.fail("nodes retired twice");
    store.quiesce();
    rep.version_nodes_live = alloc_counters().version_nodes.load();
    return rep;
}

LincheckReport lincheck_campaign(const LincheckConfig& cfg) {
    if (cfg.threads == 0 || cfg.ops_per_thread == 0 || cfg.keyspace == 0)
        throw std::invalid_argument("lincheck: threads, ops and keyspace must be >= 1");
    LincheckReport rep;
    SlowPathVeto veto(cfg.slow_path_pct > 0);
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t h = 0; h < cfg.histories; ++h) {
        StoreConfig sc = cfg.store;
        sc.max_threads = std::max(sc.max_threads, cfg.threads);
        Store store(sc);
        std::vector<ThreadHandle> hs;
        for (std::size_t t = 0; t < cfg.threads; ++t) hs.push_back(store.register_thread());
        std::vector<std::vector<Operation>> plan(cfg.threads);
        for (auto& ops : plan) {
            for (std::size_t i = 0; i < cfg.ops_per_thread; ++i) {
                Key k = 1 + rng() % cfg.keyspace;
                switch (rng() % 4) {
                    case 0: ops.push_back(Operation::insert(k, 1 + rng() % 4)); break;
                    case 1: ops.push_back(Operation::remove(k)); break;
                    case 2: ops.push_back(Operation::search(k)); break;
                    default: {
                        Key hi = std::min<Key>(k + rng() % cfg.rq_width, cfg.keyspace);
                        ops.push_back(Operation::range(k, hi));
                    }
                }
            }
        }
        const bool slow = veto.active && static_cast<int>(rng() % 100) < cfg.slow_path_pct;
        Recorder rec(cfg.threads);
        std::atomic<std::size_t> ready{0};
        std::vector<std::thread> ts;
        for (std::size_t t = 0; t < cfg.threads; ++t) {
            ts.emplace_back([&, t] {
                t_force_slow = slow;
                ready.fetch_add(1);
                while (ready.load() < cfg.threads) std::this_thread::yield();
                for (const Operation& op : plan[t]) {
                    rec.invoke(t, op);
                    Response r;
                    switch (op.type) {
                        case OpType::Insert: r = Response::from(store.insert(hs[t], op.key, op.value)); break;
                        case OpType::Delete: r = Response::from(store.remove(hs[t], op.key)); break;
                        case OpType::Search: r = Response::from(store.search(hs[t], op.key)); break;
                        case OpType::RangeQuery: r = Response::of_range(store.range_query(hs[t], op.key, op.high)); break;
                    }
                    rec.respond(t, r);
                }
                t_force_slow = false;
            });
        }
        for (auto& t : ts) t.join();
        std::vector<HistoryEvent> hist = rec.history();
        if (cfg.inject_fault) {
            // A value no operation ever writes.
            constexpr Value forged = Value{1} << 50;
            for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
                if (it->invoke || it->op.type == OpType::RangeQuery) continue;
                it->result = Response{it->op.type == OpType::Search ? OpKind::OperationFinished : OpKind::KeyUpdated,
                                      forged, {}};
                break;
            }
        }
        Verdict v = check_linearizable(hist);
        ++rep.histories;
        if (v.kind == Verdict::Kind::Yes) {
            ++rep.passed;
        } else if (v.kind == Verdict::Kind::BoundsExceeded) {
            ++rep.bounds_exceeded;
            rep.ok = false;
        } else {
            ++rep.failed;
            rep.ok = false;
            if (rep.first_failure.empty()) {
                rep.first_failure.push_back(v.detail);
                for (const HistoryEvent& e : v.violating_prefix) {
                    std::string line = "t" + std::to_string(e.thread) + (e.invoke ? " call " : " ret  ") + to_string(e.op);
                    if (!e.invoke) line += " -> " + to_string(e.result);
                    rep.first_failure.push_back(line);
                }
            }
        }
    }
    return rep;
}

}  // namespace uruv::verify
