#pragma once

#include "cachesage/transition_learner.hpp"
#include "cachesage/types.hpp"

namespace cachesage::oracle {

/// Brute-force probability that a first-order chain started at `current`
/// visits `target` within k steps, by k-step state-distribution propagation
/// with absorbing mass at `target`. A visit at step 0 (target == current)
/// counts; rows with no observations halt the chain.
///
/// Test-scale only: O(|A|^2 k) per call. Throws std::invalid_argument when
/// |A| > 64 or k > 32.
double exact_survival_prob(AgentId target, int k, const TransitionLearner& matrix,
                           AgentId current);

}  // namespace cachesage::oracle
