#include "cachesage/survival_oracle.hpp"

#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace cachesage::oracle {

double exact_survival_prob(AgentId target, int k, const TransitionLearner& matrix,
                           AgentId current) {
    const auto& agents = matrix.agents();
    if (agents.size() > 64) {
        throw std::invalid_argument("exact_survival_prob: alphabet too large (test-scale <= 64)");
    }
    if (k > 32) {
        throw std::invalid_argument("exact_survival_prob: horizon too deep (test-scale <= 32)");
    }
    if (k < 0) {
        throw std::invalid_argument("exact_survival_prob: negative horizon");
    }
    if (target == current) {
        return 1.0;
    }

    std::unordered_map<AgentId, std::size_t> index;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        index.emplace(agents[i], i);
    }
    const auto target_it = index.find(target);
    const auto current_it = index.find(current);
    if (target_it == index.end() || current_it == index.end()) {
        return 0.0;  // agent never observed: no path to or from it
    }
    const std::size_t n = agents.size();
    const std::size_t target_idx = target_it->second;

    std::vector<double> dist(n, 0.0);
    dist[current_it->second] = 1.0;
    double absorbed = 0.0;

    std::vector<double> next(n, 0.0);
    for (int step = 0; step < k; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (dist[i] == 0.0) {
                continue;
            }
            const auto* row = matrix.row(agents[i]);
            if (!row) {
                continue;  // no outgoing observations: mass dies here
            }
            const double total = static_cast<double>(matrix.row_total(agents[i]));
            for (const auto& [b, count] : *row) {
                next[index.at(b)] += dist[i] * static_cast<double>(count) / total;
            }
        }
        absorbed += next[target_idx];
        next[target_idx] = 0.0;
        dist.swap(next);
    }
    return absorbed;
}

}  // namespace cachesage::oracle
