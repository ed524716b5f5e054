#pragma once

#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cachesage/json_alias.hpp"
#include "cachesage/types.hpp"

namespace cachesage {

/// Probabilistic forecast over future agent activity. The distribution is
/// either empty (no data) or sums to 1 within 1e-9 over its support.
struct Forecast {
    int horizon = 1;
    std::unordered_map<AgentId, double> distribution;

    bool empty() const { return distribution.empty(); }
};

bool forecast_is_normalized(const Forecast& forecast);

/// Off-critical-path action a policy asks its neighbor to perform. Warmup is
/// the only kind in scope; the shape admits further actions.
struct SideEffect {
    enum class Kind { Warmup };
    Kind kind = Kind::Warmup;
    AgentId target;
    Tick issued_tick = 0;
};

/// Snapshot of the engine's recency clock handed to score consults.
/// oldest_live_touch is the minimum last_touch over resident blocks.
struct ScoreContext {
    Tick now_tick = 0;
    Tick oldest_live_touch = 0;
    SimMicros now_us = 0.0;
};

/// Normalized recency residual in [0,1]: min-max of last_touch over the live
/// window. Degenerate window (all equal ticks) maps every block to 1.
double recency_residual(const Block& block, const ScoreContext& ctx);

/// The four-primitive policy contract. observe is the only state-mutating
/// entry point; score and predict are pure reads; poll_actions drains queued
/// side-effects in issue order.
class Policy {
public:
    virtual ~Policy() = default;

    virtual const char* name() const = 0;
    virtual void observe(const Event& event) = 0;
    virtual double score(const Block& block, const ScoreContext& ctx) const = 0;
    virtual Forecast predict(int horizon) const = 0;
    virtual std::vector<SideEffect> poll_actions() = 0;

    /// Full policy state as a documented JSON shape, for inspection and test
    /// assertions. All learned state is keyed by agent identity.
    virtual json serialize_state() const = 0;
};

struct PolicyHandle {
    std::uint32_t id = 0;
};

/// Registry through which the engine and workload driver deliver events and
/// consult the active policy. At most one scoring policy per run; the engine
/// uses exactly two hooks (event forward, score consult) plus the
/// between-step side-effect drain.
class Runtime {
public:
    /// Throws std::runtime_error if a scoring policy is already registered.
    PolicyHandle register_policy(std::shared_ptr<Policy> policy);

    bool has_policy() const { return policy_ != nullptr; }
    Policy& policy();
    const Policy& policy() const;

    /// Forwards the event to the registered policy's observe.
    /// Throws std::runtime_error on a tick regression.
    void dispatch_event(const Event& event);

    /// Returns and clears queued side-effects in issue order.
    std::vector<SideEffect> drain_side_effects();

    /// Eviction hook: the registered policy's score, or the bare recency
    /// residual when no policy is registered.
    double consult_score(const Block& block, const ScoreContext& ctx) const;

    Forecast consult_forecast(int horizon) const;

private:
    std::shared_ptr<Policy> policy_;
    std::optional<Tick> last_tick_;
};

}  // namespace cachesage
