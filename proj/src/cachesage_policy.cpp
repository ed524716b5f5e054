#include "cachesage/cachesage_policy.hpp"

#include <stdexcept>

#include "cachesage/hashing.hpp"

namespace cachesage {

AgentId derive_agent_identity(std::span<const BlockKey> block_keys, const IdentityConfig& cfg) {
    if (cfg.skip < 0 || cfg.take < 1) {
        throw std::invalid_argument("derive_agent_identity: skip >= 0 and take >= 1 required");
    }
    if (block_keys.empty()) {
        throw std::invalid_argument("derive_agent_identity: no block keys");
    }
    std::span<const BlockKey> window;
    const std::size_t skip = static_cast<std::size_t>(cfg.skip);
    const std::size_t take = static_cast<std::size_t>(cfg.take);
    if (block_keys.size() >= skip + take) {
        window = block_keys.subspan(skip, take);
    } else if (block_keys.size() > skip) {
        window = block_keys.subspan(skip);  // short prompt: everything after skip
    } else {
        window = block_keys;  // degenerate prompt: hash the full list
    }
    std::uint64_t h = mix64(kHashSeed ^ 0xa9e0c7d35b1f64e9ULL);
    for (const BlockKey& key : window) {
        h = mix64(h ^ key.value);
    }
    return AgentId{h};
}

CacheSagePolicy::CacheSagePolicy(CacheSageConfig cfg) : cfg_(cfg), learner_(cfg.window) {
    if (cfg_.identity.skip < 0 || cfg_.identity.take < 1) {
        throw std::invalid_argument("CacheSagePolicy: invalid identity window");
    }
    if (cfg_.tau < 0.0 || cfg_.tau > 1.0) {
        throw std::invalid_argument("CacheSagePolicy: tau must be a probability");
    }
    if (cfg_.e_max <= 0) {
        throw std::invalid_argument("CacheSagePolicy: e_max must be positive");
    }
    if (cfg_.gate.min_confidence < 0.0 || cfg_.gate.budget_per_step < 0) {
        throw std::invalid_argument("CacheSagePolicy: invalid prefetch gate");
    }
    reach_.tau = cfg_.tau;
    reach_.e_max = cfg_.e_max;
}

void CacheSagePolicy::observe(const Event& event) {
    std::visit(
        overloaded{
            [&](const BlockTouch&) {
                // Recency lives on the engine's clock; nothing to learn here.
            },
            [&](const RequestArrival& arrival) { learner_.note_agent(arrival.agent); },
            [&](const AgentDispatch& dispatch) {
                learner_.note_agent(dispatch.next);
                if (dispatch.prev) {
                    learner_.record(*dispatch.prev, dispatch.next);
                }
                const bool changed = !current_ || *current_ != dispatch.next;
                current_ = dispatch.next;
                if (changed) {
                    reach_ = rebuild_reachability(learner_, dispatch.next, cfg_.tau, cfg_.e_max);
                    ++rebuilds_;
                }
                if (auto warmup = maybe_prefetch(dispatch.next)) {
                    warmup->issued_tick = event.tick;
                    pending_.push_back(*warmup);
                }
            },
            [&](const ToolReturn& tool) { learner_.note_agent(tool.agent); },
            [&](const TurnComplete&) {},
        },
        event.payload);
}

double CacheSagePolicy::score(const Block& block, const ScoreContext& ctx) const {
    double survival = 0.0;
    if (block.agent && !reach_.empty()) {
        survival = reach_.survival(*block.agent);
    }
    return cfg_.w_pred * survival + recency_residual(block, ctx);
}

Forecast CacheSagePolicy::predict(int horizon) const {
    if (!current_) {
        return Forecast{horizon, {}};
    }
    return predict_next(*current_, horizon);
}

Forecast CacheSagePolicy::predict_next(AgentId current, int horizon) const {
    Forecast forecast;
    forecast.horizon = horizon;
    const auto* row = learner_.row(current);
    const std::uint64_t total = learner_.row_total(current);
    if (!row || total == 0) {
        return forecast;
    }
    for (const auto& [next, count] : *row) {
        forecast.distribution[next] =
            static_cast<double>(count) / static_cast<double>(total);
    }
    return forecast;
}

std::optional<SideEffect> CacheSagePolicy::maybe_prefetch(AgentId current) {
    const PrefetchGate& gate = cfg_.gate;
    if (step_warmups_ >= gate.budget_per_step) {
        return std::nullopt;
    }
    if (learner_.row_total(current) < gate.min_row_count) {
        return std::nullopt;
    }
    const auto top = learner_.argmax_row(current);
    if (!top || top->second < gate.min_confidence) {
        return std::nullopt;
    }
    ++step_warmups_;
    return SideEffect{SideEffect::Kind::Warmup, top->first, 0};
}

std::vector<SideEffect> CacheSagePolicy::poll_actions() {
    step_warmups_ = 0;  // the drain marks a scheduler step boundary
    std::vector<SideEffect> drained;
    drained.swap(pending_);
    return drained;
}

std::size_t CacheSagePolicy::state_bytes() const {
    std::size_t bytes = learner_.state_bytes();
    bytes += reach_.hops.size();  // u8 hop per known agent
    bytes += 8;                   // anchor agent id
    return bytes;
}

json CacheSagePolicy::serialize_state() const {
    json pending = json::array();
    for (const SideEffect& effect : pending_) {
        pending.push_back({{"kind", "warmup"},
                           {"target", to_hex(effect.target.value)},
                           {"issued_tick", effect.issued_tick}});
    }
    return json{{"policy", name()},
                {"current", current_ ? json(to_hex(current_->value)) : json(nullptr)},
                {"learner", learner_.to_json()},
                {"reachability", reach_.empty() ? json(nullptr) : reach_.to_json()},
                {"pending_warmups", std::move(pending)},
                {"rebuilds", rebuilds_},
                {"state_bytes", state_bytes()}};
}

}  // namespace cachesage
