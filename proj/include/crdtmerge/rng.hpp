#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace crdtmerge {

/// Deterministic 64-bit generator (splitmix64). The update is fully
/// specified so streams reproduce bit-for-bit on every platform:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   output = z ^ (z >> 31)
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept;

    /// Uniform double in [0, 1): (next_u64() >> 11) * 2^-53.
    double next_uniform() noexcept;

    /// True with probability p: next_uniform() < p. Always consumes exactly
    /// one draw.
    bool next_bernoulli(double p) noexcept;

    /// Uniform integer in [0, n) computed as next_u64() % n. The modulo
    /// bias is negligible at the sizes used here and the result is fully
    /// reproducible. Throws ValueError when n is zero.
    std::uint64_t next_below(std::uint64_t n);

private:
    std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle driven by next_below; deterministic given
/// the generator state.
template <typename T>
void shuffle(std::vector<T>& items, SplitMix64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(gen.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Fresh nondeterministic seed from the operating system entropy source.
std::uint64_t entropy_seed();

class Tensor;

/// Tensor with values uniform in [-1, 1), drawn row-major (one draw per
/// element, 2 * next_uniform() - 1). Audits and simulations share this
/// protocol so runs reproduce from a seed alone.
Tensor random_uniform_tensor(SplitMix64& gen, const std::vector<std::size_t>& shape);

} // namespace crdtmerge
