#include <fstream>
#include <sstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cachesage/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::optional<std::uint64_t>& seed,
            const std::string& out, bool force, const std::string& policy_override,
            std::optional<int> budget, int jobs, bool dump_state) {
    cachesage::RunConfig config = cachesage::parse_run_config(config_path);
    if (seed) {
        config.seed = *seed;
    }
    if (!out.empty()) {
        config.out_dir = out;
    }
    if (force) {
        config.force = true;
    }
    if (!policy_override.empty()) {
        config.policies = {policy_override};
    }
    if (budget) {
        config.budget_blocks = *budget;
    }
    if (jobs > 0) {
        config.jobs = jobs;
    }
    if (dump_state) {
        config.dump_state = true;
    }
    cachesage::run_experiment(config, std::cout);
    return 0;
}

int cmd_measure(const std::string& trace_path) {
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "error: cannot open trace '" << trace_path << "'\n";
        return 2;
    }
    const cachesage::Trace trace = cachesage::read_trace_jsonl(in);
    std::cout << cachesage::measure_trace(trace).dump(2) << '\n';
    return 0;
}

int cmd_gen_trace(const std::string& preset, const std::string& spec_path,
                  const std::string& out_path, const std::optional<std::uint64_t>& seed,
                  std::optional<int> sessions) {
    cachesage::WorkloadSpec spec;
    if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) {
            std::cerr << "error: cannot open spec '" << spec_path << "'\n";
            return 2;
        }
        std::stringstream ss;
        ss << "{\"schema\":\"cachesage-trace/v1\",\"spec\":";
        ss << in.rdbuf() << "}\n";
        std::istringstream header(ss.str());
        spec = cachesage::read_trace_jsonl(header).spec;
    } else {
        spec = cachesage::preset_by_name(preset);
    }
    if (seed) {
        spec.seed = *seed;
    }
    if (sessions) {
        spec.sessions = *sessions;
    }
    const cachesage::Trace trace = cachesage::generate_trace(spec);
    if (out_path.empty() || out_path == "-") {
        cachesage::write_trace_jsonl(trace, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return 2;
        }
        cachesage::write_trace_jsonl(trace, out);
    }
    return 0;
}

int cmd_bench(int agents, std::uint64_t events, std::uint64_t seed) {
    std::cout << cachesage::run_bench(agents, events, 1000000, seed).dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"agent-aware KV cache policies on a trace-driven serving-engine simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool force = false;
    std::string policy_override;
    std::optional<int> budget;
    int jobs = 0;
    bool dump_state = false;
    auto* run = app.add_subcommand("run", "run an experiment config across policies");
    run->add_option("-c,--config", config_path, "run config file")->required();
    run->add_option("--seed", seed, "override the workload seed");
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--force", force, "overwrite a non-empty output directory");
    run->add_option("--policy", policy_override, "run a single policy instead of the config list");
    run->add_option("--budget", budget, "override the cache budget in blocks");
    run->add_option("--jobs", jobs, "parallel (workload, policy) cells");
    run->add_flag("--dump-state", dump_state, "write the policy state dump per cell");

    std::string trace_path;
    auto* measure = app.add_subcommand("measure", "report phi and entropy reduction of a trace");
    measure->add_option("trace", trace_path, "trace JSONL file")->required();

    std::string preset;
    std::string spec_path;
    std::string gen_out;
    std::optional<int> sessions;
    auto* gen = app.add_subcommand("gen-trace", "generate a workload trace as JSONL");
    gen->add_option("preset", preset, "workload preset name");
    gen->add_option("--spec", spec_path, "workload spec JSON file (instead of a preset)");
    gen->add_option("-o,--out", gen_out, "output file (default stdout)");
    gen->add_option("--seed", seed, "workload seed");
    gen->add_option("--sessions", sessions, "session count");

    int bench_agents = 50;
    std::uint64_t bench_events = 200000;
    std::uint64_t bench_seed = 1;
    auto* bench = app.add_subcommand("bench", "hot-path observe/score microbenchmark");
    bench->add_option("--agents", bench_agents, "alphabet size");
    bench->add_option("--events", bench_events, "observe events");
    bench->add_option("--seed", bench_seed, "stream seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path, seed, out_dir, force, policy_override, budget, jobs,
                           dump_state);
        }
        if (measure->parsed()) {
            return cmd_measure(trace_path);
        }
        if (gen->parsed()) {
            if (preset.empty() && spec_path.empty()) {
                std::cerr << "error: gen-trace needs a preset name or --spec\n";
                return 2;
            }
            return cmd_gen_trace(preset, spec_path, gen_out, seed, sessions);
        }
        if (bench->parsed()) {
            return cmd_bench(bench_agents, bench_events, bench_seed);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
