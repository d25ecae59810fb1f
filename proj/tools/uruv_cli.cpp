#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "CLI11.hpp"
#include "json.hpp"
#include "uruv/verify.hpp"
#include "uruv/workload.hpp"

using json = nlohmann::ordered_json;
using namespace uruv;

namespace {

struct Common {
    WorkloadConfig w;
    std::uint64_t ops = 0;
    std::string output;
    std::string format = "json";
    std::string config;
};

void add_workload_flags(CLI::App* app, Common& c) {
    WorkloadConfig& w = c.w;
    app->add_option("--reads", w.read_pct, "percent of point reads")->capture_default_str();
    app->add_option("--inserts", w.insert_pct, "percent of inserts")->capture_default_str();
    app->add_option("--deletes", w.delete_pct, "percent of deletes")->capture_default_str();
    app->add_option("--rq", w.rq_pct, "percent of range queries")->capture_default_str();
    app->add_option("--rq-size", w.rq_size, "keys spanned by a range query")->capture_default_str();
    app->add_option("--prefill", w.prefill, "distinct keys inserted before the run")->capture_default_str();
    app->add_option("--keyspace", w.keyspace, "keys are drawn from [1, keyspace]")->capture_default_str();
    app->add_option("--threads", w.threads, "worker threads")->capture_default_str();
    app->add_option("--duration", w.duration_s, "seconds to run")->capture_default_str();
    app->add_option("--ops", c.ops, "operations per thread instead of a timed run");
    app->add_option("--seed", w.seed, "seed for prefill and op streams")->capture_default_str();
    app->add_option("--fast-retries", w.store.wait_free.fast_path_retries, "fast-path attempts before announcing")
        ->capture_default_str();
    app->add_option("--help-period", w.store.wait_free.helping_period, "operations between helping checks")
        ->capture_default_str();
    app->add_option("--leaf-max", w.store.tree.leaf_max)->capture_default_str();
    app->add_option("--leaf-min", w.store.tree.leaf_min)->capture_default_str();
    app->add_option("--node-max", w.store.tree.max_keys)->capture_default_str();
    app->add_option("--node-min", w.store.tree.min_keys)->capture_default_str();
}

void add_output_flags(CLI::App* app, Common& c) {
    app->add_option("--output", c.output, "also write the report to this file");
    app->add_option("--format", c.format, "file format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app->add_option("--config", c.config, "key=value file; command-line flags take precedence");
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Fills options that were not given on the command line from a key=value file.
void apply_config(CLI::App* app, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        CLI::Option* opt = nullptr;
        try {
            opt = app->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

json stats_json(const StoreStats& s) {
    return json{{"leaves", s.leaves},
                {"internals", s.internals},
                {"live_keys", s.live_keys},
                {"depth", s.depth},
                {"search_descents", s.search_descents},
                {"search_restarts", s.search_restarts},
                {"slow_path_entries", s.slow_path_entries},
                {"helps", s.helps},
                {"rebalances", s.rebalances},
                {"restarts", s.restarts},
                {"max_attempts", s.max_attempts},
                {"double_retires", s.double_retires},
                {"retired", s.retired},
                {"freed", s.freed}};
}

json config_json(const Common& c) {
    const WorkloadConfig& w = c.w;
    return json{{"reads", w.read_pct},
                {"inserts", w.insert_pct},
                {"deletes", w.delete_pct},
                {"rq", w.rq_pct},
                {"rq_size", w.rq_size},
                {"prefill", w.prefill},
                {"keyspace", w.keyspace},
                {"threads", w.threads},
                {"duration", w.duration_s},
                {"ops", c.ops},
                {"seed", w.seed},
                {"fast_retries", w.store.wait_free.fast_path_retries},
                {"help_period", w.store.wait_free.helping_period},
                {"leaf_max", w.store.tree.leaf_max},
                {"leaf_min", w.store.tree.leaf_min},
                {"node_max", w.store.tree.max_keys},
                {"node_min", w.store.tree.min_keys}};
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (j.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) s += ";";
            s += j[i].is_string() ? j[i].get<std::string>() : j[i].dump();
        }
        out.emplace_back(prefix, s);
    } else {
        out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

void emit(const json& report, const Common& c) {
    std::cout << report.dump() << std::endl;
    if (c.output.empty()) return;
    std::ofstream out(c.output);
    if (!out) throw std::runtime_error("cannot write " + c.output);
    if (c.format == "json") {
        out << report.dump(2) << "\n";
        return;
    }
    std::vector<std::pair<std::string, std::string>> cols;
    flatten(report, "", cols);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << csv_field(cols[i].first);
    out << "\n";
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << csv_field(cols[i].second);
    out << "\n";
}

int whole_percent(double p, const char* name) {
    double r = std::round(p);
    if (std::abs(p - r) > 1e-9) throw std::invalid_argument(std::string("verify modes need whole percentages for ") + name);
    return static_cast<int>(r);
}

verify::StressConfig stress_config(const Common& c, bool snapshots) {
    const WorkloadConfig& w = c.w;
    verify::StressConfig s;
    s.store = w.store;
    s.threads = w.threads;
    s.keyspace = w.keyspace;
    s.prefill = w.prefill;
    s.seed = w.seed;
    s.rq_size = w.rq_size;
    s.search_pct = whole_percent(w.read_pct, "--reads");
    s.insert_pct = whole_percent(w.insert_pct, "--inserts");
    s.delete_pct = whole_percent(w.delete_pct, "--deletes");
    s.rq_pct = whole_percent(w.rq_pct, "--rq");
    if (c.ops > 0) {
        s.ops_per_thread = c.ops;
        s.duration_s = 0;
    } else {
        s.duration_s = w.duration_s;
    }
    s.check_snapshots = snapshots;
    s.validate();
    return s;
}

json stress_json(const verify::StressReport& r) {
    return json{{"ok", r.ok},
                {"ops", r.ops},
                {"per_thread_ops", r.per_thread_ops},
                {"windows", r.windows},
                {"elapsed_s", r.elapsed_s},
                {"structure_ok", r.structure.ok},
                {"depth", r.structure.depth},
                {"live_keys", r.live_keys},
                {"version_nodes", r.structure.version_nodes},
                {"range_queries_checked", r.snapshots.checked},
                {"snapshot_violations", r.snapshots.violations},
                {"final_state_matches", r.final_state_matches},
                {"store", stats_json(r.stats)},
                {"failures", r.failures}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Uruv concurrent ordered key-value store: benchmark and verification harness"};
    app.require_subcommand(1);

    Common bench_c;
    CLI::App* bench = app.add_subcommand("bench", "run a timed workload and report throughput");
    add_workload_flags(bench, bench_c);
    add_output_flags(bench, bench_c);

    CLI::App* verify_cmd = app.add_subcommand("verify", "correctness checks");
    verify_cmd->require_subcommand(1);

    Common lin_c;
    lin_c.w.threads = 3;
    lin_c.w.keyspace = 8;
    lin_c.w.rq_size = 4;
    std::size_t histories = 1000, ops_per_thread = 6;
    bool inject_fault = false;
    CLI::App* lin = verify_cmd->add_subcommand("lincheck", "record small histories and check linearizability");
    lin->add_option("--histories", histories)->capture_default_str();
    lin->add_option("--ops-per-thread", ops_per_thread)->capture_default_str();
    lin->add_option("--threads", lin_c.w.threads)->capture_default_str();
    lin->add_option("--keyspace", lin_c.w.keyspace)->capture_default_str();
    lin->add_option("--rq-size", lin_c.w.rq_size, "largest range width")->capture_default_str();
    lin->add_option("--seed", lin_c.w.seed)->capture_default_str();
    lin->add_option("--fast-retries", lin_c.w.store.wait_free.fast_path_retries)->capture_default_str();
    lin->add_option("--help-period", lin_c.w.store.wait_free.helping_period)->capture_default_str();
    lin->add_flag("--inject-fault", inject_fault, "corrupt one response per history; the campaign must fail");
    add_output_flags(lin, lin_c);

    Common stress_c;
    stress_c.w.prefill = 500;
    stress_c.w.keyspace = 1000;
    stress_c.w.read_pct = 10;
    stress_c.w.insert_pct = 40;
    stress_c.w.delete_pct = 40;
    stress_c.w.rq_pct = 10;
    stress_c.w.rq_size = 16;
    stress_c.w.threads = 4;
    stress_c.w.store.tree = TreeConfig{8, 2, 8, 2, 0};
    Common snap_c = stress_c;
    CLI::App* stress_cmd = verify_cmd->add_subcommand("stress", "churn the store, then validate structure");
    add_workload_flags(stress_cmd, stress_c);
    add_output_flags(stress_cmd, stress_c);
    CLI::App* snap_cmd = verify_cmd->add_subcommand("snapshot", "churn with range queries and check every snapshot");
    add_workload_flags(snap_cmd, snap_c);
    add_output_flags(snap_cmd, snap_c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (bench->parsed()) {
            if (!bench_c.config.empty()) apply_config(bench, bench_c.config);
            bench_c.w.ops_per_thread = bench_c.ops;
            BenchMetrics m = run_bench(bench_c.w);
            json report{{"mode", "bench"},
                        {"ok", m.structure_ok},
                        {"config", config_json(bench_c)},
                        {"metrics",
                         {{"elapsed_s", m.elapsed_s},
                          {"total_ops", m.total_ops},
                          {"throughput", m.throughput},
                          {"reads", m.reads},
                          {"inserts", m.inserts},
                          {"deletes", m.deletes},
                          {"range_queries", m.range_queries},
                          {"range_keys_returned", m.range_keys_returned},
                          {"read_throughput", m.read_throughput},
                          {"insert_throughput", m.insert_throughput},
                          {"delete_throughput", m.delete_throughput},
                          {"rq_throughput", m.rq_throughput},
                          {"per_thread_ops", m.per_thread_ops},
                          {"stream_hash", m.stream_hash},
                          {"result_hash", m.result_hash},
                          {"version_nodes_after_quiesce", m.version_nodes_after_quiesce}}},
                        {"store", stats_json(m.store)},
                        {"violations", m.violations}};
            emit(report, bench_c);
            return m.structure_ok ? 0 : 1;
        }
        if (lin->parsed()) {
            if (!lin_c.config.empty()) apply_config(lin, lin_c.config);
            verify::LincheckConfig lc;
            lc.histories = histories;
            lc.threads = lin_c.w.threads;
            lc.ops_per_thread = ops_per_thread;
            lc.keyspace = lin_c.w.keyspace;
            lc.rq_width = lin_c.w.rq_size;
            lc.seed = lin_c.w.seed;
            lc.inject_fault = inject_fault;
            lc.store = lin_c.w.store;
            lc.store.wait_free.validate();
            verify::LincheckReport r = verify::lincheck_campaign(lc);
            json report{{"mode", "verify-lincheck"},
                        {"ok", r.ok},
                        {"histories", r.histories},
                        {"passed", r.passed},
                        {"failed", r.failed},
                        {"bounds_exceeded", r.bounds_exceeded},
                        {"inject_fault", inject_fault},
                        {"first_failure", r.first_failure}};
            emit(report, lin_c);
            return r.ok ? 0 : 1;
        }
        for (auto [cmd, c, snapshots] : {std::tuple{stress_cmd, &stress_c, false}, std::tuple{snap_cmd, &snap_c, true}}) {
            if (!cmd->parsed()) continue;
            if (!c->config.empty()) apply_config(cmd, c->config);
            c->w.store.tree.validate();
            verify::StressReport r = verify::stress(stress_config(*c, snapshots));
            json report{{"mode", snapshots ? "verify-snapshot" : "verify-stress"}};
            report.update(stress_json(r));
            report["config"] = config_json(*c);
            emit(report, *c);
            return r.ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
    return 2;
}
