#include "cachesage/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cachesage/hashing.hpp"

namespace cachesage {

namespace fs = std::filesystem;

namespace {

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
        }
    }
    return line;
}

void require_policy_name(const std::string& name) {
    if (std::find(kPolicyNames.begin(), kPolicyNames.end(), name) == kPolicyNames.end()) {
        std::string valid;
        for (const std::string& p : kPolicyNames) {
            valid += valid.empty() ? p : ", " + p;
        }
        throw std::invalid_argument("unknown policy '" + name + "' (valid: " + valid + ")");
    }
}

WorkloadRef parse_workload_ref(const json& j) {
    WorkloadRef ref;
    if (j.is_string()) {
        ref.preset = j.get<std::string>();
        preset_by_name(ref.preset);  // validate early
        return ref;
    }
    if (j.contains("preset")) {
        ref.preset = j.at("preset").get<std::string>();
        preset_by_name(ref.preset);
        return ref;
    }
    if (j.contains("trace")) {
        ref.trace_path = j.at("trace").get<std::string>();
        return ref;
    }
    if (j.contains("spec")) {
        // Reuse the trace header codec for inline specs.
        std::stringstream ss;
        ss << json{{"schema", "cachesage-trace/v1"}, {"spec", j.at("spec")}}.dump() << '\n';
        ref.inline_spec = read_trace_jsonl(ss).spec;
        return ref;
    }
    throw std::invalid_argument("workload entry needs one of: preset name, {preset}, {trace}, {spec}");
}

double ms(double us) { return us / 1000.0; }

json policy_config_json(const std::string& policy, const RunConfig& config) {
    if (policy == "ttl") {
        return json{{"pin_horizon_ms", ms(config.ttl.pin_horizon_us)}};
    }
    if (policy == "cachesage") {
        const CacheSageConfig& cs = config.cachesage;
        return json{{"skip", cs.identity.skip},
                    {"take", cs.identity.take},
                    {"tau", cs.tau},
                    {"e_max", cs.e_max},
                    {"w_pred", cs.w_pred},
                    {"window", cs.window},
                    {"gate",
                     {{"min_confidence", cs.gate.min_confidence},
                      {"min_row_count", cs.gate.min_row_count},
                      {"budget_per_step", cs.gate.budget_per_step}}}};
    }
    return json(nullptr);
}

json metrics_to_json(const std::string& workload, const std::string& policy,
                     const RunConfig& config, const EngineConfig& engine,
                     std::uint64_t seed, const RunMetrics& m) {
    return json{
        {"schema", "cachesage-metrics/v1"},
        {"workload", workload},
        {"policy", policy},
        {"seed", seed},
        {"engine",
         {{"budget_blocks", engine.budget_blocks},
          {"block_size", engine.block_size},
          {"concurrency", engine.concurrency},
          {"prefetch", engine.prefetch_enabled},
          {"cost_model",
           {{"prefill_per_token_us", engine.cost.prefill_per_token_us},
            {"prefill_base_us", engine.cost.prefill_base_us},
            {"decode_per_token_us", engine.cost.decode_per_token_us}}}}},
        {"hit_rate", m.hit_rate},
        {"mean_ttft_ms", ms(m.mean_ttft_us)},
        {"mean_latency_ms", ms(m.mean_latency_us)},
        {"throughput_turns_per_s", m.throughput_turns_per_s},
        {"sim_duration_ms", ms(m.sim_duration_us)},
        {"turns", m.turns},
        {"total_prompt_tokens", m.total_prompt_tokens},
        {"total_cached_tokens", m.total_cached_tokens},
        {"evictions", m.evictions},
        {"truncated_admissions", m.truncated_admissions},
        {"warmup",
         {{"executed", m.warmups_executed},
          {"dropped", m.warmups_dropped},
          {"prompt_tokens", m.warmup_prompt_tokens},
          {"uncached_tokens", m.warmup_uncached_tokens},
          {"time_ms", ms(m.warmup_time_us)}}},
        {"policy_config", policy_config_json(policy, config)}};
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_turns_csv(const std::string& path, const std::vector<TurnMetrics>& turns) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << "turn_id,session,turn,agent,label,prompt_tokens,cached_tokens,"
           "ttft_ms,latency_ms,arrival_ms,start_ms,end_ms\n";
    for (const TurnMetrics& t : turns) {
        out << t.turn_id << ',' << t.session_id << ',' << t.turn_index << ','
            << to_hex(t.agent.value) << ',' << t.agent_label << ',' << t.prompt_tokens << ','
            << t.cached_tokens << ',' << format_double(ms(t.ttft_us)) << ','
            << format_double(ms(t.latency_us)) << ',' << format_double(ms(t.arrival_us)) << ','
            << format_double(ms(t.start_us)) << ',' << format_double(ms(t.end_us)) << '\n';
    }
}

json event_to_json(const Event& event) {
    json j{{"tick", event.tick}, {"kind", event_kind(event)}};
    std::visit(overloaded{
                   [&](const BlockTouch& e) {
                       j["key"] = to_hex(e.key.value);
                       j["agent"] = e.agent ? json(to_hex(e.agent->value)) : json(nullptr);
                   },
                   [&](const RequestArrival& e) {
                       j["request"] = e.request;
                       j["agent"] = to_hex(e.agent.value);
                   },
                   [&](const AgentDispatch& e) {
                       j["prev"] = e.prev ? json(to_hex(e.prev->value)) : json(nullptr);
                       j["next"] = to_hex(e.next.value);
                   },
                   [&](const ToolReturn& e) { j["agent"] = to_hex(e.agent.value); },
                   [&](const TurnComplete& e) { j["request"] = e.request; },
               },
               event.payload);
    return j;
}

void write_events_jsonl(const std::string& path, const std::vector<Event>& events) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << json{{"schema", "cachesage-events/v1"}}.dump() << '\n';
    for (const Event& event : events) {
        out << event_to_json(event).dump() << '\n';
    }
}

Trace load_workload(const WorkloadRef& ref, const RunConfig& config) {
    WorkloadSpec spec;
    if (!ref.trace_path.empty()) {
        std::ifstream in(ref.trace_path);
        if (!in) {
            throw std::runtime_error("cannot open trace '" + ref.trace_path + "'");
        }
        Trace trace = read_trace_jsonl(in);
        return trace;  // replayed traces are taken as-is; seed applies to generation only
    }
    if (ref.inline_spec) {
        spec = *ref.inline_spec;
    } else {
        spec = preset_by_name(ref.preset);
    }
    if (config.seed) {
        spec.seed = *config.seed;
    }
    const int min_anchor = config.block_size * (config.cachesage.identity.skip +
                                                config.cachesage.identity.take);
    for (const AgentSpec& agent : spec.agents) {
        if (agent.anchor_tokens < min_anchor) {
            std::cerr << "warning: workload '" << spec.name << "' agent '" << agent.label
                      << "' anchor (" << agent.anchor_tokens << " tokens) is below the "
                      << min_anchor << "-token identity window; identities will degrade\n";
        }
    }
    return generate_trace(spec);
}

}  // namespace

std::string WorkloadRef::display_name() const {
    if (!preset.empty()) {
        return preset;
    }
    if (inline_spec) {
        return inline_spec->name;
    }
    return fs::path(trace_path).stem().string();
}

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(origin + ":" + std::to_string(line_of_offset(text, e.byte)) +
                                    ": " + e.what());
    }
    RunConfig config;
    try {
        if (root.contains("workloads")) {
            for (const json& j : root.at("workloads")) {
                config.workloads.push_back(parse_workload_ref(j));
            }
        } else if (root.contains("workload")) {
            config.workloads.push_back(parse_workload_ref(root.at("workload")));
        }
        if (config.workloads.empty()) {
            throw std::invalid_argument("config needs a 'workload' or 'workloads' section");
        }
        if (root.contains("policies")) {
            config.policies = root.at("policies").get<std::vector<std::string>>();
        } else if (root.contains("policy") && root.at("policy").is_string()) {
            config.policies.push_back(root.at("policy").get<std::string>());
        }
        if (config.policies.empty()) {
            throw std::invalid_argument("config needs a nonempty 'policies' list");
        }
        for (const std::string& p : config.policies) {
            require_policy_name(p);
        }

        if (root.contains("engine")) {
            const json& engine = root.at("engine");
            if (engine.contains("budget_blocks")) {
                config.budget_blocks = engine.at("budget_blocks").get<int>();
            }
            if (engine.contains("concurrency")) {
                config.concurrency = engine.at("concurrency").get<int>();
            }
            if (engine.contains("block_size")) {
                config.block_size = engine.at("block_size").get<int>();
            }
            if (engine.contains("cost_model")) {
                const json& cost = engine.at("cost_model");
                if (cost.contains("prefill_per_token_us")) {
                    config.cost.prefill_per_token_us = cost.at("prefill_per_token_us").get<double>();
                }
                if (cost.contains("prefill_base_us")) {
                    config.cost.prefill_base_us = cost.at("prefill_base_us").get<double>();
                }
                if (cost.contains("decode_per_token_us")) {
                    config.cost.decode_per_token_us = cost.at("decode_per_token_us").get<double>();
                }
            }
        }

        const json policy = root.value("policy", json::object());
        if (policy.is_object()) {
            if (policy.contains("cachesage")) {
                const json& cs = policy.at("cachesage");
                CacheSageConfig& cfg = config.cachesage;
                cfg.identity.skip = cs.value("skip", cfg.identity.skip);
                cfg.identity.take = cs.value("take", cfg.identity.take);
                cfg.tau = cs.value("tau", cfg.tau);
                cfg.e_max = cs.value("e_max", cfg.e_max);
                cfg.w_pred = cs.value("w_pred", cfg.w_pred);
                cfg.window = cs.value("window", cfg.window);
                if (cs.contains("gate")) {
                    const json& gate = cs.at("gate");
                    cfg.gate.min_confidence = gate.value("min_confidence", cfg.gate.min_confidence);
                    cfg.gate.min_row_count = gate.value("min_row_count", cfg.gate.min_row_count);
                    cfg.gate.budget_per_step = gate.value("budget_per_step", cfg.gate.budget_per_step);
                }
            }
            if (policy.contains("ttl")) {
                config.ttl.pin_horizon_us =
                    policy.at("ttl").value("pin_horizon_ms", config.ttl.pin_horizon_us / 1000.0) *
                    1000.0;
            }
            if (policy.contains("prefetch")) {
                config.prefetch = policy.at("prefetch").get<bool>();
            }
        }

        if (root.contains("output")) {
            const json& output = root.at("output");
            config.out_dir = output.value("dir", config.out_dir);
            config.write_events = output.value("events", config.write_events);
            config.dump_state = output.value("dump_state", config.dump_state);
        }
        if (root.contains("seed")) {
            config.seed = root.at("seed").get<std::uint64_t>();
        }
        if (root.contains("jobs")) {
            config.jobs = root.at("jobs").get<int>();
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(origin + ": " + e.what());
    }
    return config;
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config_text(ss.str(), path);
}

std::shared_ptr<Policy> make_policy(const std::string& name, const RunConfig& config,
                                    const std::vector<Request>& requests) {
    require_policy_name(name);
    if (name == "lru") {
        return std::make_shared<LruPolicy>();
    }
    if (name == "ttl") {
        return std::make_shared<TtlPolicy>(config.ttl);
    }
    if (name == "belady") {
        return std::make_shared<BeladyPolicy>(requests);
    }
    return std::make_shared<CacheSagePolicy>(config.cachesage);
}

RunResult run_cell(const Trace& trace, const std::string& policy_name, const RunConfig& config,
                   json* policy_state) {
    EngineConfig engine_cfg;
    engine_cfg.budget_blocks = config.budget_blocks.value_or(trace.spec.budget_blocks);
    engine_cfg.concurrency = config.concurrency.value_or(trace.spec.concurrency);
    engine_cfg.block_size = config.block_size;
    engine_cfg.cost = config.cost;
    engine_cfg.identity = config.cachesage.identity;
    engine_cfg.prefetch_enabled = config.prefetch;

    const std::vector<Request> requests =
        materialize_requests(trace, engine_cfg.block_size, engine_cfg.identity);
    std::shared_ptr<Policy> policy = make_policy(policy_name, config, requests);

    Runtime runtime;
    runtime.register_policy(policy);
    EngineSim engine(engine_cfg, runtime);
    engine.set_warmup_catalog(
        build_warmup_catalog(trace, engine_cfg.block_size, engine_cfg.identity));
    RunResult result = engine.run(requests);
    if (policy_state) {
        *policy_state = policy->serialize_state();
    }
    return result;
}

std::vector<CellOutcome> run_experiment(const RunConfig& config, std::ostream& summary) {
    for (const std::string& policy : config.policies) {
        require_policy_name(policy);  // covers --policy overrides
    }
    const fs::path out_root(config.out_dir);
    if (fs::exists(out_root) && !fs::is_empty(out_root) && !config.force) {
        throw std::runtime_error("output directory '" + config.out_dir +
                                 "' is not empty (use --force to overwrite)");
    }
    fs::create_directories(out_root);

    struct Cell {
        std::size_t workload_idx;
        std::size_t policy_idx;
    };
    std::vector<Trace> traces;
    traces.reserve(config.workloads.size());
    for (const WorkloadRef& ref : config.workloads) {
        traces.push_back(load_workload(ref, config));
    }
    std::vector<Cell> cells;
    for (std::size_t w = 0; w < config.workloads.size(); ++w) {
        for (std::size_t p = 0; p < config.policies.size(); ++p) {
            cells.push_back({w, p});
        }
    }

    std::vector<CellOutcome> outcomes(cells.size());
    std::mutex io_mutex;
    auto run_one = [&](std::size_t cell_idx) {
        const Cell& cell = cells[cell_idx];
        const Trace& trace = traces[cell.workload_idx];
        const std::string workload_name = config.workloads[cell.workload_idx].display_name();
        const std::string& policy_name = config.policies[cell.policy_idx];

        json state;
        const RunResult result = run_cell(trace, policy_name, config, &state);

        const fs::path cell_dir = out_root / workload_name / policy_name;
        {
            std::lock_guard<std::mutex> lock(io_mutex);
            fs::create_directories(cell_dir);
        }
        EngineConfig engine_cfg;  // re-derive the effective engine config for the report
        engine_cfg.budget_blocks = config.budget_blocks.value_or(trace.spec.budget_blocks);
        engine_cfg.concurrency = config.concurrency.value_or(trace.spec.concurrency);
        engine_cfg.block_size = config.block_size;
        engine_cfg.cost = config.cost;
        engine_cfg.prefetch_enabled = config.prefetch;

        std::ofstream metrics_out(cell_dir / "metrics.json");
        metrics_out << metrics_to_json(workload_name, policy_name, config, engine_cfg,
                                       config.seed.value_or(trace.spec.seed), result.aggregate)
                           .dump(2)
                    << '\n';
        write_turns_csv((cell_dir / "turns.csv").string(), result.turns);
        if (config.write_events) {
            write_events_jsonl((cell_dir / "events.jsonl").string(), result.events);
        }
        if (config.dump_state) {
            std::ofstream state_out(cell_dir / "state.json");
            state_out << state.dump(2) << '\n';
        }
        outcomes[cell_idx] = CellOutcome{workload_name, policy_name, result.aggregate};
    };

    if (config.jobs <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            run_one(i);
        }
    } else {
        std::vector<std::thread> workers;
        std::atomic<std::size_t> next{0};
        const int jobs = std::min<int>(config.jobs, static_cast<int>(cells.size()));
        for (int t = 0; t < jobs; ++t) {
            workers.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
                    run_one(i);
                }
            });
        }
        for (std::thread& w : workers) {
            w.join();
        }
    }

    // Comparison table: hit-rate delta in percentage points vs the
    // first-listed policy, per workload.
    summary << "workload            policy      hit_rate   d_hit_pp   mean_ttft_ms   turns/s\n";
    json summary_rows = json::array();
    for (std::size_t w = 0; w < config.workloads.size(); ++w) {
        double base_hit = 0.0;
        for (std::size_t p = 0; p < config.policies.size(); ++p) {
            const CellOutcome& out = outcomes[w * config.policies.size() + p];
            if (p == 0) {
                base_hit = out.metrics.hit_rate;
            }
            const double delta_pp = (out.metrics.hit_rate - base_hit) * 100.0;
            char line[160];
            std::snprintf(line, sizeof(line), "%-19s %-11s %8.4f %+10.2f %14.2f %9.3f\n",
                          out.workload.c_str(), out.policy.c_str(), out.metrics.hit_rate,
                          delta_pp, ms(out.metrics.mean_ttft_us),
                          out.metrics.throughput_turns_per_s);
            summary << line;
            summary_rows.push_back({{"workload", out.workload},
                                    {"policy", out.policy},
                                    {"hit_rate", out.metrics.hit_rate},
                                    {"delta_hit_pp", delta_pp},
                                    {"mean_ttft_ms", ms(out.metrics.mean_ttft_us)},
                                    {"mean_latency_ms", ms(out.metrics.mean_latency_us)},
                                    {"throughput_turns_per_s", out.metrics.throughput_turns_per_s}});
        }
    }
    std::ofstream summary_out(out_root / "summary.json");
    summary_out << json{{"schema", "cachesage-summary/v1"}, {"cells", summary_rows}}.dump(2)
                << '\n';
    return outcomes;
}

json measure_trace(const Trace& trace) {
    if (trace.turns.empty()) {
        throw std::invalid_argument("measure: empty trace");
    }
    double first_sum = 0.0, first_min = 1.0, first_max = 0.0;
    std::uint64_t first_count = 0;
    std::map<int, std::pair<double, std::uint64_t>> by_depth;
    std::set<int> sessions;
    for (const Turn& turn : trace.turns) {
        const double phi = compute_phi(turn);
        if (turn.turn_index == 0) {
            first_sum += phi;
            first_min = std::min(first_min, phi);
            first_max = std::max(first_max, phi);
            ++first_count;
        }
        auto& cell = by_depth[turn.turn_index];
        cell.first += phi;
        cell.second += 1;
        sessions.insert(turn.session_id);
    }
    json decay = json::array();
    for (const auto& [depth, cell] : by_depth) {
        decay.push_back({{"turn", depth},
                         {"mean_phi", cell.first / static_cast<double>(cell.second)},
                         {"count", cell.second}});
    }
    return json{{"schema", "cachesage-measure/v1"},
                {"workload", trace.spec.name},
                {"turns", trace.turns.size()},
                {"sessions", sessions.size()},
                {"first_turn_phi",
                 {{"mean", first_sum / static_cast<double>(first_count)},
                  {"min", first_min},
                  {"max", first_max}}},
                {"phi_by_turn_index", std::move(decay)},
                {"entropy_reduction", compute_entropy_reduction(trace)}};
}

json run_bench(int agent_count, std::uint64_t observe_events, std::uint64_t score_calls,
               std::uint64_t seed) {
    using clock = std::chrono::steady_clock;

    CacheSagePolicy policy;
    std::mt19937_64 rng(seed);
    std::vector<AgentId> agents;
    for (int i = 0; i < agent_count; ++i) {
        agents.push_back(AgentId{mix64(0xbe9c5ULL + static_cast<std::uint64_t>(i))});
    }

    // Dispatch-heavy stream mixed with block touches, like a live run.
    std::uint64_t agent_changes = 0;
    AgentId current = agents[0];
    Tick tick = 0;
    policy.observe(Event{++tick, AgentDispatch{std::nullopt, current}});
    ++agent_changes;

    const auto observe_start = clock::now();
    for (std::uint64_t i = 0; i < observe_events; ++i) {
        if (i % 32 == 0) {
            const AgentId next = agents[rng() % agents.size()];
            if (next != current) {
                ++agent_changes;
            }
            policy.observe(Event{++tick, AgentDispatch{current, next}});
            current = next;
        } else {
            policy.observe(Event{++tick, BlockTouch{BlockKey{rng()}, current}});
        }
        if (i % 64 == 0) {
            (void)policy.poll_actions();
        }
    }
    const double observe_ns =
        std::chrono::duration<double, std::nano>(clock::now() - observe_start).count() /
        static_cast<double>(observe_events);

    std::vector<Block> blocks(256);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        blocks[i].key = BlockKey{rng()};
        blocks[i].agent = agents[rng() % agents.size()];
        blocks[i].last_touch = i + 1;
        blocks[i].token_count = 16;
    }
    const ScoreContext ctx{tick, 1, 0.0};
    volatile double sink = 0.0;
    const auto score_start = clock::now();
    for (std::uint64_t i = 0; i < score_calls; ++i) {
        sink = sink + policy.score(blocks[i % blocks.size()], ctx);
    }
    const double score_ns =
        std::chrono::duration<double, std::nano>(clock::now() - score_start).count() /
        static_cast<double>(score_calls);

    return json{{"schema", "cachesage-bench/v1"},
                {"agents", agent_count},
                {"observe_events", observe_events},
                {"observe_ns_mean", observe_ns},
                {"score_calls", score_calls},
                {"score_ns_mean", score_ns},
                {"state_bytes", policy.state_bytes()},
                {"rebuilds", policy.rebuild_count()},
                {"agent_changes", agent_changes}};
}

}  // namespace cachesage
