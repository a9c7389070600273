#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crdtmerge/tensor.hpp"

namespace crdtmerge {

/// 256-bit digest. Ordered by the digest value read as a 256-bit big-endian
/// integer, which coincides with lexicographic byte order.
class Hash256 {
public:
    /// All-zero digest; used as the sentinel root of an empty visible set.
    Hash256() = default;

    explicit Hash256(const std::array<std::uint8_t, 32>& bytes) : bytes_(bytes) {}

    /// Parses 64 hex characters (either case). Throws FormatError otherwise.
    static Hash256 from_hex(std::string_view hex);

    const std::array<std::uint8_t, 32>& bytes() const noexcept { return bytes_; }

    /// 64 lowercase hex characters.
    std::string hex() const;

    bool is_zero() const noexcept;

    auto operator<=>(const Hash256&) const = default;

private:
    std::array<std::uint8_t, 32> bytes_{};
};

Hash256 sha256(std::span<const std::uint8_t> bytes);

/// SHA-256 of the tensor's canonical wire encoding.
Hash256 content_hash(const Tensor& t);

/// Ascending digest order over a set of hashes. The input is treated as a
/// set: duplicates collapse. Throws ValueError when empty.
std::vector<Hash256> canonical_order(std::vector<Hash256> hashes);

/// Merkle root over the leaves in the given order. Each parent is the
/// SHA-256 of its two children's digests concatenated; a level's unpaired
/// last node is promoted unchanged. A single leaf is its own root. Throws
/// ValueError when empty.
Hash256 merkle_root(std::span<const Hash256> ordered_leaves);

/// 64-bit seed: the first 8 digest bytes read as a big-endian integer.
std::uint64_t derive_seed(const Hash256& digest);

/// Labelled sub-seed: derive_seed(sha256(seed as 8 big-endian bytes ++ the
/// label's bytes)). Splits one seed into independent named streams.
std::uint64_t derive_subseed(std::uint64_t seed, std::string_view label);

} // namespace crdtmerge
