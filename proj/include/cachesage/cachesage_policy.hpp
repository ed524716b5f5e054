#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cachesage/reachability.hpp"
#include "cachesage/runtime.hpp"
#include "cachesage/transition_learner.hpp"
#include "cachesage/types.hpp"

namespace cachesage {

/// Window of block hashes, after the chat-template prefix, whose content hash
/// forms the agent identity.
struct IdentityConfig {
    int skip = 4;
    int take = 4;
};

/// Agent identity = hash of block_keys[skip .. skip+take). Degrades when the
/// prompt is short: fewer than skip+take blocks hashes everything after skip;
/// at most skip blocks hashes the full list.
AgentId derive_agent_identity(std::span<const BlockKey> block_keys, const IdentityConfig& cfg);

/// Gate on cross-session warmups: the argmax transition must clear a
/// confidence bar from a sufficiently observed row, within a per-step budget.
/// budget_per_step = 0 disables prefetch.
struct PrefetchGate {
    double min_confidence = 0.5;
    std::uint64_t min_row_count = 5;
    int budget_per_step = 1;
};

struct CacheSageConfig {
    IdentityConfig identity;
    double tau = 0.01;
    int e_max = 8;
    double w_pred = 1.0;
    std::size_t window = TransitionLearner::kDefaultWindow;
    PrefetchGate gate;
};

/// The case-study policy: learns the agent transition matrix online from the
/// dispatch stream, scores blocks by survival proxy plus recency, and issues
/// gated warmups for the most likely next agent.
class CacheSagePolicy : public Policy {
public:
    explicit CacheSagePolicy(CacheSageConfig cfg = {});

    const char* name() const override { return "cachesage"; }
    void observe(const Event& event) override;
    double score(const Block& block, const ScoreContext& ctx) const override;
    Forecast predict(int horizon) const override;
    std::vector<SideEffect> poll_actions() override;
    json serialize_state() const override;

    /// Full MLE row of `current` as a next-agent forecast; empty when the row
    /// is unseen.
    Forecast predict_next(AgentId current, int horizon = 1) const;

    /// Gate check for a warmup of the most likely successor of `current`.
    /// Consumes per-step budget when it fires.
    std::optional<SideEffect> maybe_prefetch(AgentId current);

    const TransitionLearner& learner() const { return learner_; }
    const ReachabilityState& reachability() const { return reach_; }
    std::optional<AgentId> current_agent() const { return current_; }
    std::uint64_t rebuild_count() const { return rebuilds_; }
    const CacheSageConfig& config() const { return cfg_; }

    /// Byte accounting of learner + reachability state (documented layout:
    /// learner accounting plus one u8 hop per known agent and the anchor id).
    std::size_t state_bytes() const;

private:
    CacheSageConfig cfg_;
    TransitionLearner learner_;
    ReachabilityState reach_;
    std::optional<AgentId> current_;
    std::vector<SideEffect> pending_;
    int step_warmups_ = 0;
    std::uint64_t rebuilds_ = 0;
};

}  // namespace cachesage
