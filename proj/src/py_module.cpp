#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cachesage/experiment.hpp"
#include "cachesage/hashing.hpp"
#include "cachesage/survival_oracle.hpp"

namespace py = pybind11;
using namespace cachesage;

namespace {

// JSON crosses the boundary as python dicts/lists via pybind's stl casters.
py::object json_to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null:
            return py::none();
        case json::value_t::boolean:
            return py::bool_(j.get<bool>());
        case json::value_t::number_integer:
            return py::int_(j.get<long long>());
        case json::value_t::number_unsigned:
            return py::int_(j.get<unsigned long long>());
        case json::value_t::number_float:
            return py::float_(j.get<double>());
        case json::value_t::string:
            return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const json& item : j) {
                out.append(json_to_py(item));
            }
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [key, value] : j.items()) {
                out[py::str(key)] = json_to_py(value);
            }
            return out;
        }
        default:
            return py::none();
    }
}

py::dict metrics_to_py(const RunMetrics& m) {
    py::dict out;
    out["hit_rate"] = m.hit_rate;
    out["mean_ttft_ms"] = m.mean_ttft_us / 1000.0;
    out["mean_latency_ms"] = m.mean_latency_us / 1000.0;
    out["throughput_turns_per_s"] = m.throughput_turns_per_s;
    out["sim_duration_ms"] = m.sim_duration_us / 1000.0;
    out["turns"] = m.turns;
    out["total_prompt_tokens"] = m.total_prompt_tokens;
    out["total_cached_tokens"] = m.total_cached_tokens;
    out["evictions"] = m.evictions;
    out["truncated_admissions"] = m.truncated_admissions;
    out["warmups_executed"] = m.warmups_executed;
    out["warmup_prompt_tokens"] = m.warmup_prompt_tokens;
    return out;
}

RunConfig config_for(const std::string& policy, std::optional<int> budget,
                     std::optional<int> concurrency, int block_size, bool prefetch) {
    RunConfig config;
    config.policies = {policy};
    config.budget_blocks = budget;
    config.concurrency = concurrency;
    config.block_size = block_size;
    config.prefetch = prefetch;
    return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "agent-aware KV cache policies on a trace-driven serving-engine simulator";

    m.def(
        "chain_hash",
        [](std::optional<std::uint64_t> parent, const std::vector<TokenId>& tokens) {
            return chain_hash(parent, tokens).value;
        },
        py::arg("parent"), py::arg("tokens"),
        "Prefix-chained 64-bit block hash over token ids.");

    m.def(
        "derive_agent_identity",
        [](const std::vector<std::uint64_t>& keys, int skip, int take) {
            std::vector<BlockKey> block_keys;
            block_keys.reserve(keys.size());
            for (std::uint64_t k : keys) {
                block_keys.push_back(BlockKey{k});
            }
            return derive_agent_identity(block_keys, IdentityConfig{skip, take}).value;
        },
        py::arg("block_keys"), py::arg("skip") = 4, py::arg("take") = 4,
        "Agent identity hash over a window of block hashes.");

    py::class_<TransitionLearner>(m, "TransitionLearner")
        .def(py::init<std::size_t>(), py::arg("window") = TransitionLearner::kDefaultWindow)
        .def("record",
             [](TransitionLearner& self, std::uint64_t prev, std::uint64_t next) {
                 self.record(AgentId{prev}, AgentId{next});
             })
        .def("prob",
             [](const TransitionLearner& self, std::uint64_t a, std::uint64_t b) {
                 return self.prob(AgentId{a}, AgentId{b});
             })
        .def("row_total",
             [](const TransitionLearner& self, std::uint64_t a) {
                 return self.row_total(AgentId{a});
             })
        .def("state_bytes", &TransitionLearner::state_bytes)
        .def("agents", [](const TransitionLearner& self) {
            std::vector<std::uint64_t> out;
            for (AgentId a : self.agents()) {
                out.push_back(a.value);
            }
            return out;
        });

    m.def(
        "exact_survival_prob",
        [](std::uint64_t target, int k, TransitionLearner& matrix, std::uint64_t current) {
            return oracle::exact_survival_prob(AgentId{target}, k, matrix, AgentId{current});
        },
        py::arg("target"), py::arg("k"), py::arg("matrix"), py::arg("current"),
        "Brute-force k-step survival probability (test oracle).");

    m.def("preset_names", &preset_names);

    m.def(
        "generate_trace",
        [](const std::string& preset, std::optional<int> sessions,
           std::optional<std::uint64_t> seed) {
            WorkloadSpec spec = preset_by_name(preset);
            if (sessions) {
                spec.sessions = *sessions;
            }
            if (seed) {
                spec.seed = *seed;
            }
            return generate_trace(spec);
        },
        py::arg("preset"), py::arg("sessions") = py::none(), py::arg("seed") = py::none());

    py::class_<Trace>(m, "Trace")
        .def_property_readonly("name", [](const Trace& t) { return t.spec.name; })
        .def_property_readonly("turn_count", [](const Trace& t) { return t.turns.size(); })
        .def("to_jsonl",
             [](const Trace& t) {
                 std::ostringstream out;
                 write_trace_jsonl(t, out);
                 return out.str();
             })
        .def("measure", [](const Trace& t) { return json_to_py(measure_trace(t)); });

    m.def(
        "read_trace_jsonl",
        [](const std::string& text) {
            std::istringstream in(text);
            return read_trace_jsonl(in);
        },
        py::arg("text"));

    m.def(
        "run_sim",
        [](const Trace& trace, const std::string& policy, std::optional<int> budget,
           std::optional<int> concurrency, int block_size, bool prefetch) {
            const RunConfig config =
                config_for(policy, budget, concurrency, block_size, prefetch);
            const RunResult result = run_cell(trace, policy, config);
            return metrics_to_py(result.aggregate);
        },
        py::arg("trace"), py::arg("policy") = "cachesage", py::arg("budget") = py::none(),
        py::arg("concurrency") = py::none(), py::arg("block_size") = 16,
        py::arg("prefetch") = true,
        "Run one (trace, policy) simulation and return the aggregate metrics.");

    m.def("bench", [](int agents) { return json_to_py(run_bench(agents, 50000, 200000, 1)); },
          py::arg("agents") = 50);
}
