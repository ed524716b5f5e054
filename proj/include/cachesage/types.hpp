#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace cachesage {

// Synthetic vocabulary token. No real tokenizer is involved; ids are
// deterministic functions of the workload spec and trace position.
using TokenId = std::uint32_t;

// Logical event counter. One tick per event; decoupled from simulated time so
// recency ordering is deterministic regardless of cost-model parameters.
using Tick = std::uint64_t;

using RequestId = std::uint64_t;

// Simulated time in microseconds.
using SimMicros = double;

/// Storage key of a KV block: prefix-chained content hash over token ids.
/// Two blocks compare equal iff their full token prefix is identical.
struct BlockKey {
    std::uint64_t value = 0;
    auto operator<=>(const BlockKey&) const = default;
};

/// Stable identity of an agent's anchor region (system + tools + few-shot
/// head of the prompt). Equal for any two requests sharing the anchor,
/// regardless of session history.
struct AgentId {
    std::uint64_t value = 0;
    auto operator<=>(const AgentId&) const = default;
};

std::string to_hex(std::uint64_t value);

/// Unit of cache storage, eviction, and hit accounting.
struct Block {
    BlockKey key;
    std::optional<AgentId> agent;  // assigned at first touch, never mutated
    Tick last_touch = 0;
    SimMicros last_touch_us = 0.0;  // simulated clock of last touch (TTL pins)
    int token_count = 0;
};

struct BlockTouch {
    BlockKey key;
    std::optional<AgentId> agent;
};

struct RequestArrival {
    RequestId request = 0;
    AgentId agent;
};

struct AgentDispatch {
    std::optional<AgentId> prev;
    AgentId next;
};

struct ToolReturn {
    AgentId agent;
};

struct TurnComplete {
    RequestId request = 0;
};

using EventPayload =
    std::variant<BlockTouch, RequestArrival, AgentDispatch, ToolReturn, TurnComplete>;

/// Policy-relevant occurrence carried on the observe stream.
/// Delivered in nondecreasing tick order.
struct Event {
    Tick tick = 0;
    EventPayload payload;
};

const char* event_kind(const Event& event);

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace cachesage

template <>
struct std::hash<cachesage::BlockKey> {
    std::size_t operator()(const cachesage::BlockKey& k) const noexcept {
        return static_cast<std::size_t>(k.value);
    }
};

template <>
struct std::hash<cachesage::AgentId> {
    std::size_t operator()(const cachesage::AgentId& a) const noexcept {
        return static_cast<std::size_t>(a.value);
    }
};
