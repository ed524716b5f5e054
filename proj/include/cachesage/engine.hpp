#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cachesage/cachesage_policy.hpp"
#include "cachesage/hashing.hpp"
#include "cachesage/metrics.hpp"
#include "cachesage/runtime.hpp"
#include "cachesage/types.hpp"
#include "cachesage/workload.hpp"

namespace cachesage {

/// Linear service-time model standing in for real hardware: TTFT is a base
/// cost plus a per-token charge over uncached prompt tokens; decode is a flat
/// per-token charge.
struct CostModel {
    double prefill_per_token_us = 50.0;
    double prefill_base_us = 1000.0;
    double decode_per_token_us = 20000.0;
};

struct EngineConfig {
    int budget_blocks = 120;
    int block_size = 16;
    int concurrency = 4;
    CostModel cost;
    IdentityConfig identity;
    bool prefetch_enabled = true;
};

/// A scheduled turn: prefix-chained prompt blocks plus the derived agent
/// identity. Warmup requests carry a one-token user suffix and decode exactly
/// one token.
struct Request {
    RequestId id = 0;
    int session_id = 0;
    int turn_index = 0;
    AgentId agent;
    std::string agent_label;
    std::vector<PromptBlock> prompt_blocks;
    int anchor_block_count = 0;  // leading blocks wholly inside template+anchor
    long prompt_tokens = 0;
    int decode_tokens = 1;
    bool is_warmup = false;
};

/// Turns a trace into the engine's request stream. Request ids are trace
/// positions; agent identities come from derive_agent_identity over the
/// prompt's block keys.
std::vector<Request> materialize_requests(const Trace& trace, int block_size,
                                          const IdentityConfig& identity);

/// Warmup prompt per agent identity, synthesized from the workload catalog:
/// the agent's system prompt, a one-token user message, one decode token.
struct WarmupTemplate {
    AgentId agent;
    std::string label;
    std::vector<PromptBlock> blocks;
    long prompt_tokens = 0;
};

using WarmupCatalog = std::unordered_map<AgentId, WarmupTemplate>;

WarmupCatalog build_warmup_catalog(const Trace& trace, int block_size,
                                   const IdentityConfig& identity);

struct LookupResult {
    long cached_tokens = 0;
    std::size_t first_miss_index = 0;
};

struct RunResult {
    std::vector<TurnMetrics> turns;  // sorted by turn id
    RunMetrics aggregate;
    std::vector<Event> events;
    std::vector<BlockKey> evictions;
};

/// Deterministic trace-driven simulator of a block-granular prefix-caching
/// serving engine: longest-prefix lookup, budgeted eviction via the
/// registered scorer, a concurrency-limited FIFO scheduler, and warmup
/// execution between scheduler steps on a background lane.
class EngineSim {
public:
    EngineSim(EngineConfig cfg, Runtime& runtime);

    void set_warmup_catalog(WarmupCatalog catalog);

    /// Longest resident prefix of the prompt. Emits one BlockTouch per hit
    /// block; the returned token count is the turn's cached_tokens.
    LookupResult lookup(const std::vector<PromptBlock>& blocks);

    /// Makes all blocks resident, evicting lowest-score unreferenced blocks
    /// while over budget. First touch of a new block inside the anchor region
    /// assigns the agent identity. Throws std::invalid_argument when the
    /// prompt alone exceeds the budget.
    void admit(const std::vector<PromptBlock>& blocks, std::optional<AgentId> agent,
               int anchor_block_count);

    /// Admits the warmup prompt of the effect's target agent under normal
    /// eviction rules, charging its cost to the background lane. Unknown
    /// agents drop the effect with a counter increment.
    void execute_warmup(const SideEffect& effect);

    /// Loads the request stream into the scheduler. Single-shot.
    void load(std::vector<Request> requests);

    /// One scheduler step: starts every startable queued turn, or advances
    /// the clock to the earliest completion, then executes drained warmup
    /// side-effects off the critical path. Returns the turns completed
    /// during the step.
    std::vector<TurnMetrics> step();

    bool done() const;

    /// Aggregates metrics and hands over the event and eviction logs.
    RunResult finalize();

    /// load + step until done + finalize.
    RunResult run(const std::vector<Request>& requests);

    // Introspection for tests and tools.
    std::size_t resident_blocks() const { return cache_.size(); }
    bool is_resident(BlockKey key) const { return cache_.contains(key); }
    const Block* find_block(BlockKey key) const;
    Tick now_tick() const { return tick_; }
    SimMicros now_us() const { return sim_now_; }
    const EngineConfig& config() const { return cfg_; }
    std::uint64_t evictions_count() const { return evictions_.size(); }
    const std::vector<BlockKey>& eviction_log() const { return evictions_; }

private:
    struct CacheEntry {
        Block block;
        int refs = 0;  // in-flight references; pinned blocks are never evicted
    };

    struct InFlight {
        double end_us = 0.0;
        std::uint64_t seq = 0;
        std::size_t request_index = 0;
        std::vector<BlockKey> pins;
        TurnMetrics metrics;

        // max-heap comparator ordering the earliest completion at the top
        static bool later(const InFlight& a, const InFlight& b) {
            return a.end_us > b.end_us || (a.end_us == b.end_us && a.seq > b.seq);
        }
    };

    struct Scheduler {
        std::vector<Request> requests;
        std::map<int, std::vector<std::size_t>> by_session;
        std::deque<int> pending_sessions;
        std::unordered_map<int, std::size_t> session_pos;
        std::unordered_map<std::size_t, double> arrival_us;
        std::deque<std::size_t> ready;
        std::vector<InFlight> in_flight;  // heap under InFlight::later
        std::uint64_t flight_seq = 0;
        int active_sessions = 0;
    };

    EngineConfig cfg_;
    Runtime& runtime_;
    WarmupCatalog catalog_;

    bool loaded_ = false;
    Scheduler sched_;
    std::unordered_map<BlockKey, CacheEntry> cache_;
    std::size_t pinned_count_ = 0;  // distinct resident keys with refs > 0
    Tick tick_ = 0;
    SimMicros sim_now_ = 0.0;
    std::optional<AgentId> last_dispatched_;

    std::vector<Event> events_;
    std::vector<BlockKey> evictions_;
    std::vector<TurnMetrics> completed_;
    std::uint64_t truncated_admissions_ = 0;
    std::uint64_t warmups_executed_ = 0;
    std::uint64_t warmups_dropped_ = 0;
    long warmup_prompt_tokens_ = 0;
    long warmup_uncached_tokens_ = 0;
    double warmup_time_us_ = 0.0;

    Tick next_tick() { return ++tick_; }
    void emit(EventPayload payload);
    void touch(CacheEntry& entry, bool with_event);
    Tick oldest_live_touch() const;
    ScoreContext score_context() const;
    void evict_one();
    std::vector<BlockKey> admit_pinned(const std::vector<PromptBlock>& blocks,
                                       std::optional<AgentId> agent, int anchor_block_count);
    void unpin(const std::vector<BlockKey>& keys);
    void assert_budget() const;
    void drain_and_run_warmups();
    void arrive(std::size_t request_index);
    void activate_sessions();
    void start_request(std::size_t request_index);
    bool try_start_head();
    TurnMetrics complete_earliest();
};

}  // namespace cachesage
