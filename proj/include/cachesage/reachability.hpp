#pragma once

#include <unordered_map>

#include "cachesage/json_alias.hpp"
#include "cachesage/transition_learner.hpp"
#include "cachesage/types.hpp"

namespace cachesage {

/// Hop-count survival proxy over the thresholded transition graph. Hop counts
/// come from a single BFS rooted at the current agent; the survival
/// probability proxy is 1 - min(E[a], e_max) / e_max.
struct ReachabilityState {
    double tau = 0.01;
    int e_max = 8;
    AgentId anchor;
    std::unordered_map<AgentId, int> hops;  // capped at e_max; absent = never built

    bool empty() const { return hops.empty(); }

    /// BFS hop count of `agent`; e_max for unreachable or unknown agents.
    int hop(AgentId agent) const;

    /// Survival proxy in [0,1]. 1 at the anchor, 0 at or beyond e_max hops,
    /// strictly decreasing in hop count in between.
    double survival(AgentId agent) const;

    json to_json() const;
};

/// Builds the edge set {(a,b) : P(b|a) >= tau}, BFS from `current`, and the
/// per-agent hop counts for every known agent. O(|A| + |E|) per rebuild;
/// intended to run only when the dispatched agent changes.
ReachabilityState rebuild_reachability(const TransitionLearner& learner, AgentId current,
                                       double tau, int e_max);

}  // namespace cachesage
