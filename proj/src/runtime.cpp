#include "cachesage/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cachesage {

bool forecast_is_normalized(const Forecast& forecast) {
    if (forecast.distribution.empty()) {
        return true;
    }
    double sum = 0.0;
    for (const auto& [agent, p] : forecast.distribution) {
        if (p < 0.0 || p > 1.0) {
            return false;
        }
        sum += p;
    }
    return std::abs(sum - 1.0) <= 1e-9;
}

double recency_residual(const Block& block, const ScoreContext& ctx) {
    if (ctx.now_tick <= ctx.oldest_live_touch) {
        return 1.0;
    }
    const double span = static_cast<double>(ctx.now_tick - ctx.oldest_live_touch);
    const double offset = block.last_touch >= ctx.oldest_live_touch
                              ? static_cast<double>(block.last_touch - ctx.oldest_live_touch)
                              : 0.0;
    return std::clamp(offset / span, 0.0, 1.0);
}

PolicyHandle Runtime::register_policy(std::shared_ptr<Policy> policy) {
    if (!policy) {
        throw std::invalid_argument("register_policy: null policy");
    }
    if (policy_) {
        throw std::runtime_error("register_policy: a scoring policy is already registered");
    }
    policy_ = std::move(policy);
    return PolicyHandle{1};
}

Policy& Runtime::policy() {
    if (!policy_) {
        throw std::runtime_error("runtime: no policy registered");
    }
    return *policy_;
}

const Policy& Runtime::policy() const {
    if (!policy_) {
        throw std::runtime_error("runtime: no policy registered");
    }
    return *policy_;
}

void Runtime::dispatch_event(const Event& event) {
    if (last_tick_ && event.tick < *last_tick_) {
        throw std::runtime_error("dispatch_event: tick regression (" +
                                 std::to_string(event.tick) + " after " +
                                 std::to_string(*last_tick_) + ")");
    }
    last_tick_ = event.tick;
    if (policy_) {
        policy_->observe(event);
    }
}

std::vector<SideEffect> Runtime::drain_side_effects() {
    if (!policy_) {
        return {};
    }
    return policy_->poll_actions();
}

double Runtime::consult_score(const Block& block, const ScoreContext& ctx) const {
    if (!policy_) {
        return recency_residual(block, ctx);
    }
    return policy_->score(block, ctx);
}

Forecast Runtime::consult_forecast(int horizon) const {
    if (!policy_) {
        return Forecast{horizon, {}};
    }
    return policy_->predict(horizon);
}

}  // namespace cachesage
