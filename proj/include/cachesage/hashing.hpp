#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cachesage/types.hpp"

namespace cachesage {

// Fixed seeds keep block keys stable across runs for the same trace.
inline constexpr std::uint64_t kHashSeed = 0x5ca9e5a6e0f1c3b7ULL;
inline constexpr std::uint64_t kRootParent = 0x9d2c5680f0a5b4d1ULL;

/// splitmix64 finalizer. Non-cryptographic; chosen for speed and avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Prefix-chained block hash: absorbs the parent key, then each token id in
/// order. Equal inputs give equal keys; changing any token or the parent
/// changes the key with overwhelming probability.
/// Throws std::invalid_argument on an empty token sequence.
BlockKey chain_hash(std::optional<std::uint64_t> parent, std::span<const TokenId> tokens);

/// A block of a prompt: key plus the token count it covers (the last block of
/// a prompt may be short).
struct PromptBlock {
    BlockKey key;
    int token_count = 0;
};

/// Splits a token stream into prefix-chained blocks of `block_size` tokens.
std::vector<PromptBlock> block_keys_for(std::span<const TokenId> tokens, int block_size);

}  // namespace cachesage
