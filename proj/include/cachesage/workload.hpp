#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cachesage/types.hpp"

namespace cachesage {

struct AgentSpec {
    std::string label;
    int anchor_tokens = 256;
};

/// Synthetic multi-agent workload: a set of agents with fixed anchor regions,
/// a row-stochastic transition matrix walked per session, and a deterministic
/// session-history growth model. Everything is reproducible from the seed.
struct WorkloadSpec {
    std::string name = "custom";
    std::vector<AgentSpec> agents;
    std::vector<std::vector<double>> transition;  // row-stochastic over agents
    std::optional<int> supervisor;                // hub agent; sessions start here
    int turns_min = 8;
    int turns_max = 32;
    int sessions = 50;
    int task_tokens = 480;     // per-session task content at the head of history
    int history_growth = 40;   // tokens appended to history per turn
    int decode_tokens = 32;
    int template_tokens = 16;  // shared chat-template prefix (1 block by default)
    int concurrency = 4;       // paired engine concurrency for this workload
    int budget_blocks = 120;   // paired engine cache budget
    std::uint64_t seed = 42;

    int start_agent() const { return supervisor.value_or(0); }

    /// Throws std::invalid_argument when rows are not stochastic or sizes are
    /// out of range for the token id scheme.
    void validate() const;
};

/// One generated turn. The prompt is template + agent anchor + session
/// history; history at turn t covers task_tokens + t * history_growth tokens
/// of the session's append-only stream.
struct Turn {
    int session_id = 0;
    int turn_index = 0;
    int agent = 0;
    long anchor_tokens = 0;
    long history_tokens = 0;
    long prompt_tokens = 0;
    int decode_tokens = 0;
};

struct Trace {
    WorkloadSpec spec;
    std::vector<Turn> turns;

    /// Materializes the prompt token stream of a turn. Anchor token ids are
    /// fixed per agent across all sessions; history token ids are unique per
    /// session.
    std::vector<TokenId> turn_tokens(const Turn& turn) const;

    /// Warmup prompt for an agent: template + anchor + a one-token user
    /// message (the decoded token is not part of the prompt).
    std::vector<TokenId> warmup_tokens(int agent) const;
};

/// Seeded, reproducible generation: each session draws its length and walks
/// the transition matrix with a per-session RNG stream.
Trace generate_trace(const WorkloadSpec& spec);

/// Shareable surface of a turn: anchor_tokens / prompt_tokens.
double compute_phi(const Turn& turn);

/// Relative conditional entropy reduction R = 1 - H(next|cur)/H(next) over
/// adjacent same-session turn pairs. R = 0 when H(next) = 0.
/// Throws std::invalid_argument on traces with fewer than 2 turns.
double compute_entropy_reduction(const Trace& trace);

/// The five bundled workloads: four six-agent supervisor surrogates plus the
/// twelve-agent deterministic synthetic chain.
std::vector<WorkloadSpec> preset_workloads();

/// Lookup by name; throws std::invalid_argument listing valid names.
WorkloadSpec preset_by_name(const std::string& name);

std::vector<std::string> preset_names();

/// JSONL trace format: a header line carrying the spec, then one turn per
/// line. Schema "cachesage-trace/v1".
void write_trace_jsonl(const Trace& trace, std::ostream& out);

/// Throws std::runtime_error with a line number on malformed input.
Trace read_trace_jsonl(std::istream& in);

}  // namespace cachesage
