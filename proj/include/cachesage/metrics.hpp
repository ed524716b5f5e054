#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cachesage/types.hpp"

namespace cachesage {

/// Per-turn accounting. cached_tokens is always within [0, prompt_tokens].
struct TurnMetrics {
    RequestId turn_id = 0;
    int session_id = 0;
    int turn_index = 0;
    AgentId agent;
    std::string agent_label;
    long prompt_tokens = 0;
    long cached_tokens = 0;
    double ttft_us = 0.0;
    double latency_us = 0.0;  // end-to-end: completion minus arrival
    double arrival_us = 0.0;
    double start_us = 0.0;
    double end_us = 0.0;
};

/// Per-run aggregates. hit_rate is the cached token fraction:
/// sum(cached_tokens) / sum(prompt_tokens), exactly.
struct RunMetrics {
    double hit_rate = 0.0;
    double mean_ttft_us = 0.0;
    double mean_latency_us = 0.0;
    double throughput_turns_per_s = 0.0;
    double sim_duration_us = 0.0;
    std::uint64_t turns = 0;
    long total_prompt_tokens = 0;
    long total_cached_tokens = 0;
    std::uint64_t evictions = 0;
    std::uint64_t truncated_admissions = 0;
    // Prefetch background lane: warmups are off the critical path but not
    // free; their token and time overhead is reported here.
    std::uint64_t warmups_executed = 0;
    std::uint64_t warmups_dropped = 0;
    long warmup_prompt_tokens = 0;
    long warmup_uncached_tokens = 0;
    double warmup_time_us = 0.0;
};

RunMetrics aggregate_metrics(const std::vector<TurnMetrics>& turns);

}  // namespace cachesage
