#include "cachesage/reachability.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <vector>

#include "cachesage/hashing.hpp"

namespace cachesage {

int ReachabilityState::hop(AgentId agent) const {
    const auto it = hops.find(agent);
    return it == hops.end() ? e_max : it->second;
}

double ReachabilityState::survival(AgentId agent) const {
    const int capped = std::min(hop(agent), e_max);
    return 1.0 - static_cast<double>(capped) / static_cast<double>(e_max);
}

json ReachabilityState::to_json() const {
    json hop_map = json::object();
    std::vector<AgentId> sorted;
    sorted.reserve(hops.size());
    for (const auto& [a, _] : hops) {
        sorted.push_back(a);
    }
    std::sort(sorted.begin(), sorted.end());
    for (AgentId a : sorted) {
        hop_map[to_hex(a.value)] = hops.at(a);
    }
    return json{{"tau", tau},
                {"e_max", e_max},
                {"anchor", to_hex(anchor.value)},
                {"hops", std::move(hop_map)}};
}

ReachabilityState rebuild_reachability(const TransitionLearner& learner, AgentId current,
                                       double tau, int e_max) {
    if (e_max <= 0) {
        throw std::invalid_argument("rebuild_reachability: e_max must be positive");
    }
    ReachabilityState state;
    state.tau = tau;
    state.e_max = e_max;
    state.anchor = current;
    for (AgentId a : learner.agents()) {
        state.hops.emplace(a, e_max);  // unreachable until BFS proves otherwise
    }
    state.hops[current] = 0;

    std::deque<AgentId> frontier{current};
    while (!frontier.empty()) {
        const AgentId a = frontier.front();
        frontier.pop_front();
        const int depth = state.hops[a];
        if (depth + 1 >= e_max) {
            continue;  // deeper hops all collapse to survival 0
        }
        const auto* row = learner.row(a);
        if (!row) {
            continue;
        }
        const double total = static_cast<double>(learner.row_total(a));
        for (const auto& [b, count] : *row) {
            if (static_cast<double>(count) / total < tau) {
                continue;
            }
            auto it = state.hops.find(b);
            if (it == state.hops.end()) {
                it = state.hops.emplace(b, e_max).first;
            }
            if (it->second > depth + 1) {
                it->second = depth + 1;
                frontier.push_back(b);
            }
        }
    }
    return state;
}

}  // namespace cachesage
