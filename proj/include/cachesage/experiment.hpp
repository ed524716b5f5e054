#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cachesage/baselines.hpp"
#include "cachesage/engine.hpp"
#include "cachesage/workload.hpp"

namespace cachesage {

inline const std::vector<std::string> kPolicyNames = {"lru", "ttl", "cachesage", "belady"};

/// One workload entry of a run config: a preset name, an inline spec, or a
/// trace file to replay.
struct WorkloadRef {
    std::string preset;
    std::optional<WorkloadSpec> inline_spec;
    std::string trace_path;

    std::string display_name() const;
};

struct RunConfig {
    std::vector<WorkloadRef> workloads;
    std::vector<std::string> policies;
    std::optional<int> budget_blocks;  // overrides the workload pairing
    std::optional<int> concurrency;    // overrides the workload pairing
    int block_size = 16;
    CostModel cost;
    CacheSageConfig cachesage;
    TtlConfig ttl;
    bool prefetch = true;
    std::string out_dir = "out";
    bool force = false;
    bool write_events = true;
    bool dump_state = false;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

/// Parses and validates a run config file. Errors carry the config line
/// number where the problem sits.
RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin);

/// Builds the named policy over the materialized request stream.
std::shared_ptr<Policy> make_policy(const std::string& name, const RunConfig& config,
                                    const std::vector<Request>& requests);

struct CellOutcome {
    std::string workload;
    std::string policy;
    RunMetrics metrics;
};

/// One (trace, policy) simulation: wires policy -> runtime -> engine, loads
/// the warmup catalog, and runs the request stream.
RunResult run_cell(const Trace& trace, const std::string& policy_name, const RunConfig& config,
                   json* policy_state = nullptr);

/// Executes every (workload, policy) cell, writes per-cell metrics.json,
/// turns.csv, and events.jsonl under out_dir, prints the comparison table,
/// and writes the machine-readable summary.json.
std::vector<CellOutcome> run_experiment(const RunConfig& config, std::ostream& summary);

/// Figure-style measurement report: first-turn phi, per-depth phi decay, and
/// entropy reduction R.
json measure_trace(const Trace& trace);

/// Hot-path microbenchmark at a given alphabet size: per-call observe and
/// score latency, serialized state size, and rebuild counts.
json run_bench(int agent_count = 50, std::uint64_t observe_events = 200000,
               std::uint64_t score_calls = 1000000, std::uint64_t seed = 1);

}  // namespace cachesage
