#include "cachesage/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace cachesage {

std::vector<Request> materialize_requests(const Trace& trace, int block_size,
                                          const IdentityConfig& identity) {
    std::vector<Request> requests;
    requests.reserve(trace.turns.size());
    for (std::size_t i = 0; i < trace.turns.size(); ++i) {
        const Turn& turn = trace.turns[i];
        const std::vector<TokenId> tokens = trace.turn_tokens(turn);
        Request req;
        req.id = static_cast<RequestId>(i);
        req.session_id = turn.session_id;
        req.turn_index = turn.turn_index;
        req.agent_label = trace.spec.agents[turn.agent].label;
        req.prompt_blocks = block_keys_for(tokens, block_size);
        req.prompt_tokens = static_cast<long>(tokens.size());
        req.decode_tokens = turn.decode_tokens;
        req.anchor_block_count =
            (trace.spec.template_tokens + static_cast<int>(turn.anchor_tokens)) / block_size;

        std::vector<BlockKey> keys;
        keys.reserve(req.prompt_blocks.size());
        for (const PromptBlock& b : req.prompt_blocks) {
            keys.push_back(b.key);
        }
        req.agent = derive_agent_identity(keys, identity);
        requests.push_back(std::move(req));
    }
    return requests;
}

WarmupCatalog build_warmup_catalog(const Trace& trace, int block_size,
                                   const IdentityConfig& identity) {
    WarmupCatalog catalog;
    for (std::size_t i = 0; i < trace.spec.agents.size(); ++i) {
        const std::vector<TokenId> tokens = trace.warmup_tokens(static_cast<int>(i));
        WarmupTemplate tmpl;
        tmpl.label = trace.spec.agents[i].label;
        tmpl.blocks = block_keys_for(tokens, block_size);
        tmpl.prompt_tokens = static_cast<long>(tokens.size());
        std::vector<BlockKey> keys;
        for (const PromptBlock& b : tmpl.blocks) {
            keys.push_back(b.key);
        }
        tmpl.agent = derive_agent_identity(keys, identity);
        catalog.emplace(tmpl.agent, std::move(tmpl));
    }
    return catalog;
}

EngineSim::EngineSim(EngineConfig cfg, Runtime& runtime) : cfg_(cfg), runtime_(runtime) {
    if (cfg_.budget_blocks < 1 || cfg_.block_size < 1 || cfg_.concurrency < 1) {
        throw std::invalid_argument("EngineSim: budget, block size, and concurrency must be positive");
    }
    if (cfg_.cost.prefill_per_token_us <= 0.0 || cfg_.cost.prefill_base_us <= 0.0 ||
        cfg_.cost.decode_per_token_us <= 0.0) {
        throw std::invalid_argument("EngineSim: cost model parameters must be positive");
    }
}

void EngineSim::set_warmup_catalog(WarmupCatalog catalog) { catalog_ = std::move(catalog); }

const Block* EngineSim::find_block(BlockKey key) const {
    const auto it = cache_.find(key);
    return it == cache_.end() ? nullptr : &it->second.block;
}

void EngineSim::emit(EventPayload payload) {
    Event event{next_tick(), std::move(payload)};
    events_.push_back(event);
    runtime_.dispatch_event(event);
}

void EngineSim::touch(CacheEntry& entry, bool with_event) {
    const Tick t = next_tick();
    entry.block.last_touch = t;
    entry.block.last_touch_us = sim_now_;
    if (with_event) {
        Event event{t, BlockTouch{entry.block.key, entry.block.agent}};
        events_.push_back(event);
        runtime_.dispatch_event(event);
    }
}

Tick EngineSim::oldest_live_touch() const {
    Tick oldest = tick_;
    for (const auto& [key, entry] : cache_) {
        oldest = std::min(oldest, entry.block.last_touch);
    }
    return oldest;
}

ScoreContext EngineSim::score_context() const {
    return ScoreContext{tick_, oldest_live_touch(), sim_now_};
}

void EngineSim::evict_one() {
    const ScoreContext ctx = score_context();
    const CacheEntry* victim = nullptr;
    double victim_score = 0.0;
    for (const auto& [key, entry] : cache_) {
        if (entry.refs > 0) {
            continue;  // never evict a block referenced by an in-flight request
        }
        const double s = runtime_.consult_score(entry.block, ctx);
        if (!victim || s < victim_score ||
            (s == victim_score && (entry.block.last_touch < victim->block.last_touch ||
                                   (entry.block.last_touch == victim->block.last_touch &&
                                    entry.block.key < victim->block.key)))) {
            victim = &entry;
            victim_score = s;
        }
    }
    if (!victim) {
        throw std::runtime_error("evict_one: all resident blocks are pinned");
    }
    const BlockKey key = victim->block.key;
    cache_.erase(key);
    evictions_.push_back(key);
}

LookupResult EngineSim::lookup(const std::vector<PromptBlock>& blocks) {
    LookupResult result;
    for (result.first_miss_index = 0; result.first_miss_index < blocks.size();
         ++result.first_miss_index) {
        const auto it = cache_.find(blocks[result.first_miss_index].key);
        if (it == cache_.end()) {
            break;
        }
        result.cached_tokens += blocks[result.first_miss_index].token_count;
        touch(it->second, /*with_event=*/true);
    }
    return result;
}

std::vector<BlockKey> EngineSim::admit_pinned(const std::vector<PromptBlock>& blocks,
                                              std::optional<AgentId> agent,
                                              int anchor_block_count) {
    std::vector<BlockKey> pinned;
    pinned.reserve(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto it = cache_.find(blocks[i].key);
        if (it == cache_.end()) {
            while (cache_.size() >= static_cast<std::size_t>(cfg_.budget_blocks)) {
                evict_one();
            }
            CacheEntry entry;
            entry.block.key = blocks[i].key;
            entry.block.token_count = blocks[i].token_count;
            if (agent && static_cast<int>(i) < anchor_block_count) {
                entry.block.agent = agent;  // assigned at first touch only
            }
            it = cache_.emplace(blocks[i].key, std::move(entry)).first;
        }
        touch(it->second, /*with_event=*/false);
        if (it->second.refs++ == 0) {
            ++pinned_count_;
        }
        pinned.push_back(blocks[i].key);
        assert_budget();
    }
    return pinned;
}

void EngineSim::unpin(const std::vector<BlockKey>& keys) {
    for (const BlockKey& key : keys) {
        const auto it = cache_.find(key);
        if (it == cache_.end()) {
            throw std::logic_error("unpin: block vanished while referenced");
        }
        if (--it->second.refs == 0) {
            --pinned_count_;
        }
    }
}

void EngineSim::admit(const std::vector<PromptBlock>& blocks, std::optional<AgentId> agent,
                      int anchor_block_count) {
    if (blocks.size() > static_cast<std::size_t>(cfg_.budget_blocks)) {
        throw std::invalid_argument("admit: prompt larger than cache budget");
    }
    unpin(admit_pinned(blocks, agent, anchor_block_count));
}

void EngineSim::assert_budget() const {
    // Always-on: budget safety must hold at every event boundary.
    if (cache_.size() > static_cast<std::size_t>(cfg_.budget_blocks)) {
        throw std::logic_error("cache exceeded its block budget");
    }
}

void EngineSim::execute_warmup(const SideEffect& effect) {
    const auto it = catalog_.find(effect.target);
    if (it == catalog_.end()) {
        ++warmups_dropped_;
        return;
    }
    const WarmupTemplate& tmpl = it->second;
    Request req;  // the warmup flows through the normal admission path
    req.agent = tmpl.agent;
    req.agent_label = tmpl.label;
    req.prompt_blocks = tmpl.blocks;
    req.anchor_block_count = static_cast<int>(tmpl.blocks.size());
    req.prompt_tokens = tmpl.prompt_tokens;
    req.decode_tokens = 1;
    req.is_warmup = true;

    const std::size_t room = static_cast<std::size_t>(cfg_.budget_blocks) - pinned_count_;
    const std::size_t admit_count = std::min(req.prompt_blocks.size(), room);

    const LookupResult lr = lookup(req.prompt_blocks);
    std::vector<PromptBlock> head(req.prompt_blocks.begin(),
                                  req.prompt_blocks.begin() + admit_count);
    unpin(admit_pinned(head, req.agent, static_cast<int>(head.size())));

    ++warmups_executed_;
    warmup_prompt_tokens_ += req.prompt_tokens;
    warmup_uncached_tokens_ += req.prompt_tokens - lr.cached_tokens;
    warmup_time_us_ += cfg_.cost.prefill_base_us +
                       cfg_.cost.prefill_per_token_us *
                           static_cast<double>(req.prompt_tokens - lr.cached_tokens) +
                       cfg_.cost.decode_per_token_us * req.decode_tokens;
}

void EngineSim::drain_and_run_warmups() {
    const std::vector<SideEffect> effects = runtime_.drain_side_effects();
    if (!cfg_.prefetch_enabled) {
        return;  // drained and dropped
    }
    for (const SideEffect& effect : effects) {
        execute_warmup(effect);
    }
}

void EngineSim::load(std::vector<Request> requests) {
    if (loaded_) {
        throw std::logic_error("EngineSim::load: the simulator is single-shot");
    }
    loaded_ = true;
    sched_.requests = std::move(requests);
    // Session-major scheduling: turns within a session are strictly
    // sequential; up to `concurrency` sessions are active at once, FIFO by
    // session id, with head-of-line feasibility on the block budget.
    for (std::size_t i = 0; i < sched_.requests.size(); ++i) {
        sched_.by_session[sched_.requests[i].session_id].push_back(i);
    }
    for (const auto& [sid, _] : sched_.by_session) {
        sched_.pending_sessions.push_back(sid);
    }
}

bool EngineSim::done() const {
    return loaded_ && sched_.in_flight.empty() && sched_.ready.empty() &&
           sched_.pending_sessions.empty();
}

void EngineSim::arrive(std::size_t idx) {
    sched_.arrival_us[idx] = sim_now_;
    emit(RequestArrival{sched_.requests[idx].id, sched_.requests[idx].agent});
    sched_.ready.push_back(idx);
}

void EngineSim::activate_sessions() {
    while (sched_.active_sessions < cfg_.concurrency && !sched_.pending_sessions.empty()) {
        const int sid = sched_.pending_sessions.front();
        sched_.pending_sessions.pop_front();
        ++sched_.active_sessions;
        sched_.session_pos[sid] = 0;
        arrive(sched_.by_session[sid][0]);
    }
}

void EngineSim::start_request(std::size_t idx) {
    const Request& req = sched_.requests[idx];
    emit(AgentDispatch{last_dispatched_, req.agent});
    last_dispatched_ = req.agent;

    const bool oversized =
        req.prompt_blocks.size() > static_cast<std::size_t>(cfg_.budget_blocks);
    long cached = 0;
    std::size_t admit_count = req.prompt_blocks.size();
    if (oversized) {
        // Full miss by definition; admit the longest prefix that fits.
        ++truncated_admissions_;
        admit_count = static_cast<std::size_t>(cfg_.budget_blocks) - pinned_count_;
    } else {
        cached = lookup(req.prompt_blocks).cached_tokens;
    }
    std::vector<PromptBlock> head(req.prompt_blocks.begin(),
                                  req.prompt_blocks.begin() + admit_count);

    InFlight flight;
    flight.seq = sched_.flight_seq++;
    flight.request_index = idx;
    flight.pins = admit_pinned(head, req.agent, req.anchor_block_count);

    const double ttft =
        cfg_.cost.prefill_base_us +
        cfg_.cost.prefill_per_token_us * static_cast<double>(req.prompt_tokens - cached);
    flight.end_us = sim_now_ + ttft + cfg_.cost.decode_per_token_us * req.decode_tokens;

    TurnMetrics& m = flight.metrics;
    m.turn_id = req.id;
    m.session_id = req.session_id;
    m.turn_index = req.turn_index;
    m.agent = req.agent;
    m.agent_label = req.agent_label;
    m.prompt_tokens = req.prompt_tokens;
    m.cached_tokens = cached;
    m.ttft_us = ttft;
    m.arrival_us = sched_.arrival_us[idx];
    m.start_us = sim_now_;
    m.end_us = flight.end_us;
    m.latency_us = flight.end_us - m.arrival_us;

    sched_.in_flight.push_back(std::move(flight));
    std::push_heap(sched_.in_flight.begin(), sched_.in_flight.end(), InFlight::later);
}

bool EngineSim::try_start_head() {
    if (sched_.ready.empty() ||
        sched_.in_flight.size() >= static_cast<std::size_t>(cfg_.concurrency)) {
        return false;
    }
    const std::size_t idx = sched_.ready.front();
    const Request& req = sched_.requests[idx];
    if (req.prompt_blocks.size() > static_cast<std::size_t>(cfg_.budget_blocks)) {
        if (!sched_.in_flight.empty()) {
            return false;  // oversized prompts run solo
        }
    } else {
        std::size_t needed = 0;
        for (const PromptBlock& b : req.prompt_blocks) {
            const auto it = cache_.find(b.key);
            if (it == cache_.end() || it->second.refs == 0) {
                ++needed;
            }
        }
        if (pinned_count_ + needed > static_cast<std::size_t>(cfg_.budget_blocks)) {
            return false;  // wait for in-flight pins to clear
        }
    }
    sched_.ready.pop_front();
    start_request(idx);
    return true;
}

TurnMetrics EngineSim::complete_earliest() {
    std::pop_heap(sched_.in_flight.begin(), sched_.in_flight.end(), InFlight::later);
    InFlight flight = std::move(sched_.in_flight.back());
    sched_.in_flight.pop_back();
    sim_now_ = flight.end_us;
    const Request& req = sched_.requests[flight.request_index];
    emit(TurnComplete{req.id});
    unpin(flight.pins);

    const int sid = req.session_id;
    if (++sched_.session_pos[sid] < sched_.by_session[sid].size()) {
        arrive(sched_.by_session[sid][sched_.session_pos[sid]]);
    } else {
        --sched_.active_sessions;
    }
    completed_.push_back(flight.metrics);
    return flight.metrics;
}

std::vector<TurnMetrics> EngineSim::step() {
    std::vector<TurnMetrics> finished;
    if (done()) {
        return finished;
    }
    activate_sessions();
    bool progressed = false;
    while (try_start_head()) {
        progressed = true;
    }
    if (!progressed) {
        if (!sched_.in_flight.empty()) {
            finished.push_back(complete_earliest());
        } else if (!sched_.ready.empty()) {
            throw std::runtime_error("scheduler stalled with an idle engine");
        }
    }
    // Side-effects execute strictly between scheduler steps.
    drain_and_run_warmups();
    return finished;
}

RunResult EngineSim::finalize() {
    RunResult result;
    result.turns = std::move(completed_);
    std::sort(result.turns.begin(), result.turns.end(),
              [](const TurnMetrics& a, const TurnMetrics& b) { return a.turn_id < b.turn_id; });
    result.aggregate = aggregate_metrics(result.turns);
    result.aggregate.sim_duration_us = sim_now_;
    result.aggregate.throughput_turns_per_s =
        sim_now_ > 0.0 ? static_cast<double>(result.turns.size()) / (sim_now_ / 1e6) : 0.0;
    result.aggregate.evictions = evictions_.size();
    result.aggregate.truncated_admissions = truncated_admissions_;
    result.aggregate.warmups_executed = warmups_executed_;
    result.aggregate.warmups_dropped = warmups_dropped_;
    result.aggregate.warmup_prompt_tokens = warmup_prompt_tokens_;
    result.aggregate.warmup_uncached_tokens = warmup_uncached_tokens_;
    result.aggregate.warmup_time_us = warmup_time_us_;
    result.events = std::move(events_);
    result.evictions = evictions_;
    return result;
}

RunResult EngineSim::run(const std::vector<Request>& requests) {
    load(requests);
    while (!done()) {
        step();
    }
    return finalize();
}

}  // namespace cachesage
