#include "cachesage/workload.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "cachesage/hashing.hpp"

namespace cachesage {

namespace {

// Token id regions. History ids are structurally unique per (session, position)
// so cross-session history reuse is impossible by construction.
constexpr TokenId kTemplateBase = 0x00100000;
constexpr TokenId kAnchorBase = 0x01000000;
constexpr TokenId kAnchorAgentStride = 0x00010000;
constexpr TokenId kWarmupUserToken = 0x02000000;
constexpr TokenId kHistoryFlag = 0x80000000;
constexpr int kHistoryPosBits = 20;

constexpr int kMaxAgents = 255;
constexpr int kMaxSessions = 2047;
constexpr long kMaxHistoryTokens = (1L << kHistoryPosBits) - 1;

TokenId history_token(int session_id, long position) {
    return kHistoryFlag | (static_cast<TokenId>(session_id) << kHistoryPosBits) |
           static_cast<TokenId>(position);
}

// Hand-rolled draws keep traces bit-identical across standard libraries.
std::uint64_t draw_u64(std::mt19937_64& rng) { return rng(); }

int draw_uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(draw_u64(rng) % static_cast<std::uint64_t>(hi - lo + 1));
}

int draw_categorical(std::mt19937_64& rng, const std::vector<double>& row) {
    const double u = static_cast<double>(draw_u64(rng) >> 11) * 0x1.0p-53;
    double acc = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] <= 0.0) {
            continue;
        }
        last_positive = static_cast<int>(i);
        acc += row[i];
        if (u < acc) {
            return last_positive;
        }
    }
    return last_positive;  // u fell into the rounding gap below 1.0
}

double entropy(const std::unordered_map<int, std::uint64_t>& counts, double total) {
    double h = 0.0;
    for (const auto& [_, n] : counts) {
        if (n == 0) {
            continue;
        }
        const double p = static_cast<double>(n) / total;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

void WorkloadSpec::validate() const {
    if (agents.empty()) {
        throw std::invalid_argument("workload '" + name + "': no agents");
    }
    if (agents.size() > kMaxAgents) {
        throw std::invalid_argument("workload '" + name + "': too many agents");
    }
    if (transition.size() != agents.size()) {
        throw std::invalid_argument("workload '" + name + "': transition matrix must have one row per agent");
    }
    for (std::size_t i = 0; i < transition.size(); ++i) {
        if (transition[i].size() != agents.size()) {
            throw std::invalid_argument("workload '" + name + "': transition row " +
                                        std::to_string(i) + " has wrong width");
        }
        double sum = 0.0;
        for (double p : transition[i]) {
            if (p < 0.0) {
                throw std::invalid_argument("workload '" + name + "': negative transition probability");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw std::invalid_argument("workload '" + name + "': transition row " +
                                        std::to_string(i) + " sums to " + std::to_string(sum));
        }
    }
    if (supervisor && (*supervisor < 0 || *supervisor >= static_cast<int>(agents.size()))) {
        throw std::invalid_argument("workload '" + name + "': supervisor index out of range");
    }
    for (const AgentSpec& a : agents) {
        if (a.anchor_tokens < 1 || a.anchor_tokens >= static_cast<int>(kAnchorAgentStride)) {
            throw std::invalid_argument("workload '" + name + "': anchor_tokens out of range for '" +
                                        a.label + "'");
        }
    }
    if (turns_min < 1 || turns_max < turns_min) {
        throw std::invalid_argument("workload '" + name + "': bad turns_per_session range");
    }
    if (sessions < 1 || sessions > kMaxSessions) {
        throw std::invalid_argument("workload '" + name + "': sessions out of range");
    }
    if (task_tokens < 0 || history_growth < 0 || decode_tokens < 1 || template_tokens < 0) {
        throw std::invalid_argument("workload '" + name + "': negative size parameter");
    }
    const long max_history = static_cast<long>(task_tokens) +
                             static_cast<long>(turns_max - 1) * history_growth;
    if (max_history > kMaxHistoryTokens) {
        throw std::invalid_argument("workload '" + name + "': history exceeds token id space");
    }
    if (concurrency < 1 || budget_blocks < 1) {
        throw std::invalid_argument("workload '" + name + "': concurrency and budget must be positive");
    }
}

std::vector<TokenId> Trace::turn_tokens(const Turn& turn) const {
    std::vector<TokenId> tokens;
    tokens.reserve(turn.prompt_tokens);
    for (int j = 0; j < spec.template_tokens; ++j) {
        tokens.push_back(kTemplateBase + static_cast<TokenId>(j));
    }
    const TokenId anchor_base =
        kAnchorBase + static_cast<TokenId>(turn.agent) * kAnchorAgentStride;
    for (long j = 0; j < turn.anchor_tokens; ++j) {
        tokens.push_back(anchor_base + static_cast<TokenId>(j));
    }
    for (long p = 0; p < turn.history_tokens; ++p) {
        tokens.push_back(history_token(turn.session_id, p));
    }
    return tokens;
}

std::vector<TokenId> Trace::warmup_tokens(int agent) const {
    std::vector<TokenId> tokens;
    const int anchor = spec.agents.at(agent).anchor_tokens;
    tokens.reserve(spec.template_tokens + anchor + 1);
    for (int j = 0; j < spec.template_tokens; ++j) {
        tokens.push_back(kTemplateBase + static_cast<TokenId>(j));
    }
    const TokenId anchor_base = kAnchorBase + static_cast<TokenId>(agent) * kAnchorAgentStride;
    for (int j = 0; j < anchor; ++j) {
        tokens.push_back(anchor_base + static_cast<TokenId>(j));
    }
    tokens.push_back(kWarmupUserToken);
    return tokens;
}

Trace generate_trace(const WorkloadSpec& spec) {
    spec.validate();
    Trace trace;
    trace.spec = spec;
    for (int s = 0; s < spec.sessions; ++s) {
        std::mt19937_64 rng(mix64(spec.seed ^ mix64(0x5e5510ULL + static_cast<std::uint64_t>(s))));
        const int turns = draw_uniform_int(rng, spec.turns_min, spec.turns_max);
        int agent = spec.start_agent();
        for (int t = 0; t < turns; ++t) {
            if (t > 0) {
                agent = draw_categorical(rng, spec.transition[agent]);
            }
            Turn turn;
            turn.session_id = s;
            turn.turn_index = t;
            turn.agent = agent;
            turn.anchor_tokens = spec.agents[agent].anchor_tokens;
            turn.history_tokens =
                static_cast<long>(spec.task_tokens) + static_cast<long>(t) * spec.history_growth;
            turn.prompt_tokens = spec.template_tokens + turn.anchor_tokens + turn.history_tokens;
            turn.decode_tokens = spec.decode_tokens;
            trace.turns.push_back(turn);
        }
    }
    return trace;
}

double compute_phi(const Turn& turn) {
    if (turn.prompt_tokens <= 0) {
        throw std::invalid_argument("compute_phi: zero-length prompt");
    }
    return static_cast<double>(turn.anchor_tokens) / static_cast<double>(turn.prompt_tokens);
}

double compute_entropy_reduction(const Trace& trace) {
    if (trace.turns.size() < 2) {
        throw std::invalid_argument("compute_entropy_reduction: trace has fewer than 2 turns");
    }
    std::unordered_map<int, std::unordered_map<int, std::uint64_t>> pair_counts;
    std::unordered_map<int, std::uint64_t> cur_counts;
    std::unordered_map<int, std::uint64_t> next_counts;
    std::uint64_t pairs = 0;
    for (std::size_t i = 1; i < trace.turns.size(); ++i) {
        const Turn& prev = trace.turns[i - 1];
        const Turn& cur = trace.turns[i];
        if (prev.session_id != cur.session_id) {
            continue;  // sessions are independent walks
        }
        ++pair_counts[prev.agent][cur.agent];
        ++cur_counts[prev.agent];
        ++next_counts[cur.agent];
        ++pairs;
    }
    if (pairs == 0) {
        throw std::invalid_argument("compute_entropy_reduction: no adjacent same-session pairs");
    }
    const double total = static_cast<double>(pairs);
    const double h_next = entropy(next_counts, total);
    if (h_next <= 0.0) {
        return 0.0;
    }
    double h_cond = 0.0;
    for (const auto& [cur, row] : pair_counts) {
        const double row_total = static_cast<double>(cur_counts.at(cur));
        h_cond += (row_total / total) * entropy(row, row_total);
    }
    return 1.0 - h_cond / h_next;
}

}  // namespace cachesage
