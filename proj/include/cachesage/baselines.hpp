#pragma once

#include <unordered_map>
#include <vector>

#include "cachesage/runtime.hpp"
#include "cachesage/types.hpp"

namespace cachesage {

struct Request;  // engine.hpp

/// Pure recency scorer, as in a reactive prefix cache: score(b) is the
/// normalized recency residual, so the eviction argmin is the LRU victim.
class LruPolicy : public Policy {
public:
    const char* name() const override { return "lru"; }
    void observe(const Event& event) override;
    double score(const Block& block, const ScoreContext& ctx) const override;
    Forecast predict(int horizon) const override { return Forecast{horizon, {}}; }
    std::vector<SideEffect> poll_actions() override { return {}; }
    json serialize_state() const override;
};

struct TtlConfig {
    SimMicros pin_horizon_us = 5'000'000.0;  // 5 simulated seconds
};

/// TTL-pin scorer: a touched block is ineligible for eviction until the pin
/// horizon elapses on the simulated clock (never the victim while unpinned
/// candidates exist; falls back to recency ordering among all-pinned sets).
/// With pin_horizon -> 0 this is exactly the recency scorer.
class TtlPolicy : public Policy {
public:
    static constexpr double kPinSentinel = 1.0e6;

    explicit TtlPolicy(TtlConfig cfg = {});

    const char* name() const override { return "ttl"; }
    void observe(const Event& event) override;
    double score(const Block& block, const ScoreContext& ctx) const override;
    Forecast predict(int horizon) const override { return Forecast{horizon, {}}; }
    std::vector<SideEffect> poll_actions() override { return {}; }
    json serialize_state() const override;

    const TtlConfig& config() const { return cfg_; }

private:
    TtlConfig cfg_;
};

/// Clairvoyant scorer: scores a block by the inverse distance to its next
/// reference in the trace; never-referenced-again blocks score 0, so the
/// eviction argmin is the farthest-next-use victim. Offline upper bound only.
class BeladyPolicy : public Policy {
public:
    /// Builds the next-use index from the materialized request stream; the
    /// cursor tracks the highest request id seen on the observe stream.
    explicit BeladyPolicy(const std::vector<Request>& requests);

    const char* name() const override { return "belady"; }
    void observe(const Event& event) override;
    double score(const Block& block, const ScoreContext& ctx) const override;
    Forecast predict(int horizon) const override { return Forecast{horizon, {}}; }
    std::vector<SideEffect> poll_actions() override { return {}; }
    json serialize_state() const override;

private:
    std::unordered_map<BlockKey, std::vector<RequestId>> references_;
    std::unordered_map<BlockKey, int> depth_;
    RequestId cursor_ = 0;
};

}  // namespace cachesage
