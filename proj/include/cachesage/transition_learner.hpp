#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cachesage/json_alias.hpp"
#include "cachesage/types.hpp"

namespace cachesage {

/// Online first-order Markov estimator over the agent alphabet: pairwise
/// counts n(a,b) over a sliding window of recent transitions, with the MLE
/// transition P(b|a) = n(a,b) / n(a). All updates are O(1) amortized.
class TransitionLearner {
public:
    static constexpr std::size_t kDefaultWindow = 1024;

    explicit TransitionLearner(std::size_t window_capacity = kDefaultWindow);

    /// Adds an agent to the alphabet without recording a transition. New
    /// agents join lazily; their rows stay empty until observed.
    void note_agent(AgentId agent);

    /// Appends (prev, next) to the window and bumps counts. When the window
    /// exceeds capacity the oldest pair is decremented.
    void record(AgentId prev, AgentId next);

    /// MLE transition probability; 0 by convention when row n(a) is zero.
    double prob(AgentId a, AgentId b) const;

    std::uint64_t row_total(AgentId a) const;

    /// Positive-count row of a, or nullptr if the row is empty.
    const std::unordered_map<AgentId, std::uint64_t>* row(AgentId a) const;

    /// Most likely successor of a with its probability; ties broken by the
    /// smaller agent id. Empty when the row is unseen.
    std::optional<std::pair<AgentId, double>> argmax_row(AgentId a) const;

    /// Known alphabet in first-seen order.
    const std::vector<AgentId>& agents() const { return alphabet_; }

    std::size_t window_capacity() const { return capacity_; }
    std::size_t window_size() const { return window_.size(); }
    std::uint64_t transitions_recorded() const { return recorded_; }
    const std::deque<std::pair<AgentId, AgentId>>& window() const { return window_; }

    /// Byte accounting of the learner's serialized state: window entries as
    /// u16 alphabet-index pairs, sparse count entries as (u16,u16,u64), row
    /// totals as (u16,u64), plus the 8-byte alphabet table entries.
    std::size_t state_bytes() const;

    json to_json() const;

private:
    std::size_t capacity_;
    std::uint64_t recorded_ = 0;
    std::deque<std::pair<AgentId, AgentId>> window_;
    std::unordered_map<AgentId, std::unordered_map<AgentId, std::uint64_t>> counts_;
    std::unordered_map<AgentId, std::uint64_t> row_totals_;
    std::vector<AgentId> alphabet_;
    std::unordered_set<AgentId> alphabet_set_;

    std::size_t nonzero_pairs_ = 0;
};

}  // namespace cachesage
