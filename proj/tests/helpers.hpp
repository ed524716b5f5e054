#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "cachesage/hashing.hpp"
#include "cachesage/transition_learner.hpp"
#include "cachesage/types.hpp"
#include "cachesage/workload.hpp"

namespace testutil {

using namespace cachesage;

inline AgentId agent(std::uint64_t i) { return AgentId{mix64(0xa6e47ULL + i)}; }

inline Block make_block(std::uint64_t key, std::optional<AgentId> a, Tick touch,
                        int tokens = 16) {
    Block b;
    b.key = BlockKey{key};
    b.agent = a;
    b.last_touch = touch;
    b.token_count = tokens;
    return b;
}

/// Brute-force shadow of the sliding-window counts: recount the last W pairs.
inline std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> recount_window(
    const std::vector<std::pair<AgentId, AgentId>>& history, std::size_t window) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
    const std::size_t start = history.size() > window ? history.size() - window : 0;
    for (std::size_t i = start; i < history.size(); ++i) {
        ++counts[{history[i].first.value, history[i].second.value}];
    }
    return counts;
}

/// Monte Carlo estimate of the k-step visit probability under the learner's
/// MLE chain; same conventions as the exact oracle (step 0 counts, dead rows
/// halt the walk).
inline double mc_survival(AgentId target, int k, const TransitionLearner& matrix,
                          AgentId current, std::uint64_t samples, std::uint64_t seed) {
    if (target == current) {
        return 1.0;
    }
    std::mt19937_64 rng(seed);
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < samples; ++s) {
        AgentId at = current;
        for (int step = 0; step < k; ++step) {
            const auto* row = matrix.row(at);
            if (!row) {
                break;
            }
            const double total = static_cast<double>(matrix.row_total(at));
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            double acc = 0.0;
            AgentId next = at;
            for (const auto& [b, count] : *row) {
                acc += static_cast<double>(count) / total;
                next = b;
                if (u < acc) {
                    break;
                }
            }
            at = next;
            if (at == target) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(samples);
}

/// Small two-agent alternating workload used across engine tests.
inline WorkloadSpec tiny_spec(int agents = 2, int sessions = 4, std::uint64_t seed = 5) {
    WorkloadSpec spec;
    spec.name = "tiny";
    for (int i = 0; i < agents; ++i) {
        spec.agents.push_back({"agent-" + std::to_string(i), 160});
    }
    spec.transition.assign(agents, std::vector<double>(agents, 0.0));
    for (int i = 0; i < agents; ++i) {
        spec.transition[i][(i + 1) % agents] = 1.0;
    }
    spec.supervisor = 0;
    spec.turns_min = 4;
    spec.turns_max = 6;
    spec.sessions = sessions;
    spec.task_tokens = 96;
    spec.history_growth = 16;
    spec.decode_tokens = 8;
    spec.template_tokens = 16;
    spec.concurrency = 1;
    spec.budget_blocks = 64;
    spec.seed = seed;
    return spec;
}

}  // namespace testutil
