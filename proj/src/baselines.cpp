#include "cachesage/baselines.hpp"

#include <algorithm>

#include "cachesage/engine.hpp"
#include "cachesage/hashing.hpp"

namespace cachesage {

void LruPolicy::observe(const Event& event) { (void)event; }

double LruPolicy::score(const Block& block, const ScoreContext& ctx) const {
    return recency_residual(block, ctx);
}

json LruPolicy::serialize_state() const { return json{{"policy", name()}}; }

TtlPolicy::TtlPolicy(TtlConfig cfg) : cfg_(cfg) {}

void TtlPolicy::observe(const Event& event) { (void)event; }

double TtlPolicy::score(const Block& block, const ScoreContext& ctx) const {
    const double rho = recency_residual(block, ctx);
    if (ctx.now_us - block.last_touch_us < cfg_.pin_horizon_us) {
        return kPinSentinel + rho;  // pinned; rho still orders all-pinned sets
    }
    return rho;
}

json TtlPolicy::serialize_state() const {
    return json{{"policy", name()}, {"pin_horizon_us", cfg_.pin_horizon_us}};
}

BeladyPolicy::BeladyPolicy(const std::vector<Request>& requests) {
    for (const Request& req : requests) {
        for (std::size_t i = 0; i < req.prompt_blocks.size(); ++i) {
            const BlockKey key = req.prompt_blocks[i].key;
            references_[key].push_back(req.id);
            depth_.emplace(key, static_cast<int>(i));  // chain position is fixed per key
        }
    }
    for (auto& [key, refs] : references_) {
        std::sort(refs.begin(), refs.end());
        refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
    }
}

void BeladyPolicy::observe(const Event& event) {
    if (const auto* arrival = std::get_if<RequestArrival>(&event.payload)) {
        cursor_ = std::max(cursor_, arrival->request);
    }
}

double BeladyPolicy::score(const Block& block, const ScoreContext& ctx) const {
    (void)ctx;
    const auto it = references_.find(block.key);
    if (it == references_.end()) {
        return 0.0;
    }
    const auto next = std::upper_bound(it->second.begin(), it->second.end(), cursor_);
    if (next == it->second.end()) {
        return 0.0;  // never referenced again
    }
    // Among equal next-use distances, shed the deepest chain position first:
    // evicting a tail block keeps the prefix below it hit-eligible.
    const auto depth_it = depth_.find(block.key);
    const double depth_nudge =
        depth_it == depth_.end() ? 0.0 : 1e-10 * static_cast<double>(depth_it->second);
    return 1.0 / (1.0 + static_cast<double>(*next - cursor_)) - depth_nudge;
}

json BeladyPolicy::serialize_state() const {
    return json{{"policy", name()}, {"cursor", cursor_}};
}

}  // namespace cachesage
