#include "cachesage/hashing.hpp"

#include <cstdio>
#include <stdexcept>

namespace cachesage {

std::string to_hex(std::uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(value));
    return buf;
}

const char* event_kind(const Event& event) {
    return std::visit(
        overloaded{
            [](const BlockTouch&) { return "block_touch"; },
            [](const RequestArrival&) { return "request_arrival"; },
            [](const AgentDispatch&) { return "agent_dispatch"; },
            [](const ToolReturn&) { return "tool_return"; },
            [](const TurnComplete&) { return "turn_complete"; },
        },
        event.payload);
}

BlockKey chain_hash(std::optional<std::uint64_t> parent, std::span<const TokenId> tokens) {
    if (tokens.empty()) {
        throw std::invalid_argument("chain_hash: token sequence must be nonempty");
    }
    std::uint64_t h = mix64(kHashSeed ^ parent.value_or(kRootParent));
    for (TokenId t : tokens) {
        h = mix64(h ^ (static_cast<std::uint64_t>(t) + 0x9e3779b97f4a7c15ULL));
    }
    return BlockKey{h};
}

std::vector<PromptBlock> block_keys_for(std::span<const TokenId> tokens, int block_size) {
    if (block_size <= 0) {
        throw std::invalid_argument("block_keys_for: block_size must be positive");
    }
    std::vector<PromptBlock> blocks;
    blocks.reserve((tokens.size() + block_size - 1) / block_size);
    std::optional<std::uint64_t> parent;
    for (std::size_t off = 0; off < tokens.size(); off += block_size) {
        const std::size_t n = std::min<std::size_t>(block_size, tokens.size() - off);
        BlockKey key = chain_hash(parent, tokens.subspan(off, n));
        blocks.push_back({key, static_cast<int>(n)});
        parent = key.value;
    }
    return blocks;
}

}  // namespace cachesage
