#include "cachesage/metrics.hpp"

namespace cachesage {

RunMetrics aggregate_metrics(const std::vector<TurnMetrics>& turns) {
    RunMetrics agg;
    agg.turns = turns.size();
    double ttft_sum = 0.0;
    double latency_sum = 0.0;
    for (const TurnMetrics& t : turns) {
        agg.total_prompt_tokens += t.prompt_tokens;
        agg.total_cached_tokens += t.cached_tokens;
        ttft_sum += t.ttft_us;
        latency_sum += t.latency_us;
    }
    if (agg.total_prompt_tokens > 0) {
        agg.hit_rate = static_cast<double>(agg.total_cached_tokens) /
                       static_cast<double>(agg.total_prompt_tokens);
    }
    if (!turns.empty()) {
        agg.mean_ttft_us = ttft_sum / static_cast<double>(turns.size());
        agg.mean_latency_us = latency_sum / static_cast<double>(turns.size());
    }
    return agg;
}

}  // namespace cachesage
