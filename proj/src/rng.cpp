#include "crdtmerge/rng.hpp"

#include <random>

#include "crdtmerge/errors.hpp"
#include "crdtmerge/tensor.hpp"

namespace crdtmerge {

std::uint64_t SplitMix64::next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SplitMix64::next_uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool SplitMix64::next_bernoulli(double p) noexcept {
    return next_uniform() < p;
}

std::uint64_t SplitMix64::next_below(std::uint64_t n) {
    if (n == 0) {
        throw ValueError("next_below: bound must be positive");
    }
    return next_u64() % n;
}

std::uint64_t entropy_seed() {
    std::random_device rd;
    return static_cast<std::uint64_t>(rd()) << 32 ^ rd();
}

Tensor random_uniform_tensor(SplitMix64& gen, const std::vector<std::size_t>& shape) {
    std::size_t count = 1;
    for (std::size_t dim : shape) {
        count *= dim;
    }
    std::vector<double> values(count);
    for (auto& v : values) {
        v = 2.0 * gen.next_uniform() - 1.0;
    }
    return Tensor(shape, std::move(values));
}

} // namespace crdtmerge
