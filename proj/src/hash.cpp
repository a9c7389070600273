#include "crdtmerge/hash.hpp"

#include <algorithm>
#include <cstring>

#include <openssl/evp.h>

#include "crdtmerge/errors.hpp"

namespace crdtmerge {

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

Hash256 Hash256::from_hex(std::string_view hex) {
    if (hex.size() != 64) {
        throw FormatError("hash: hex string must be 64 characters");
    }
    std::array<std::uint8_t, 32> bytes{};
    for (std::size_t i = 0; i < 32; ++i) {
        const int hi = hex_digit(hex[2 * i]);
        const int lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw FormatError("hash: invalid hex character");
        }
        bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return Hash256(bytes);
}

std::string Hash256::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(64, '0');
    for (std::size_t i = 0; i < 32; ++i) {
        out[2 * i] = digits[bytes_[i] >> 4];
        out[2 * i + 1] = digits[bytes_[i] & 0x0f];
    }
    return out;
}

bool Hash256::is_zero() const noexcept {
    return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

Hash256 sha256(std::span<const std::uint8_t> bytes) {
    std::array<std::uint8_t, 32> digest{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != digest.size()) {
        throw Error("sha256: digest computation failed");
    }
    return Hash256(digest);
}

Hash256 content_hash(const Tensor& t) {
    const auto encoded = canonical_bytes(t);
    return sha256(encoded);
}

std::vector<Hash256> canonical_order(std::vector<Hash256> hashes) {
    if (hashes.empty()) {
        throw ValueError("canonical_order: empty hash set");
    }
    std::sort(hashes.begin(), hashes.end());
    hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
    return hashes;
}

Hash256 merkle_root(std::span<const Hash256> ordered_leaves) {
    if (ordered_leaves.empty()) {
        throw ValueError("merkle_root: no leaves");
    }
    std::vector<Hash256> level(ordered_leaves.begin(), ordered_leaves.end());
    std::array<std::uint8_t, 64> pair{};
    while (level.size() > 1) {
        std::vector<Hash256> next;
        next.reserve(level.size() / 2 + 1);
        std::size_t i = 0;
        for (; i + 1 < level.size(); i += 2) {
            std::memcpy(pair.data(), level[i].bytes().data(), 32);
            std::memcpy(pair.data() + 32, level[i + 1].bytes().data(), 32);
            next.push_back(sha256(pair));
        }
        if (i < level.size()) {
            next.push_back(level[i]);  // unpaired node is promoted as-is
        }
        level = std::move(next);
    }
    return level.front();
}

std::uint64_t derive_seed(const Hash256& digest) {
    std::uint64_t seed = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        seed = seed << 8 | digest.bytes()[i];
    }
    return seed;
}

std::uint64_t derive_subseed(std::uint64_t seed, std::string_view label) {
    std::vector<std::uint8_t> buf;
    buf.reserve(8 + label.size());
    for (int i = 7; i >= 0; --i) {
        buf.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
    }
    buf.insert(buf.end(), label.begin(), label.end());
    return derive_seed(sha256(buf));
}

} // namespace crdtmerge
