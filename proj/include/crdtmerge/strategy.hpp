#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crdtmerge/tensor.hpp"

namespace crdtmerge {

/// Tuning knobs shared by all strategies; fields a strategy does not use
/// are ignored.
struct StrategyParams {
    double lambda = 1.0;         ///< delta-sum scale (task_arithmetic)
    std::optional<Tensor> base;  ///< reference point for delta-based
                                 ///< strategies; absent means all zeros
    double t = 0.5;              ///< interpolation position (slerp)
    double drop_p = 0.5;         ///< dropout probability (dare)
    double keep_frac = 0.8;      ///< fraction kept by magnitude trims
    double linear_w = 0.5;       ///< pairwise linear weight
    int pop_size = 16;           ///< candidates per search generation
    int generations = 8;         ///< search generations
};

struct StrategySpec {
    std::string id;
    StrategyParams params{};
};

enum class Arity {
    n_ary,       ///< defined directly on an ordered list
    binary_fold  ///< defined pairwise; lists fold left to right
};

/// How a pairwise application obtains randomness. Deterministic strategies
/// ignore the mode; stochastic strategies draw a fresh nondeterministic
/// seed per call when unseeded.
struct RngMode {
    bool seeded = false;
    std::uint64_t seed = 0;

    static RngMode unseeded() { return {}; }
    static RngMode with_seed(std::uint64_t s) { return {true, s}; }
};

struct StrategyKernel {
    Arity arity = Arity::n_ary;
    bool stochastic = false;  ///< consumes the seeded random stream
    /// n-ary form; null when only the pairwise rule exists.
    std::function<Tensor(std::span<const Tensor>, const StrategyParams&, std::uint64_t)> n_ary;
    /// pairwise form; null when the n-ary form is the only definition.
    std::function<Tensor(const Tensor&, const Tensor&, const StrategyParams&, std::uint64_t)> pair;
};

/// Name-to-kernel table, preloaded with the built-in strategies. Additional
/// kernels can be registered under fresh ids.
class StrategyRegistry {
public:
    static StrategyRegistry& instance();

    /// Throws StrategyError when the id is already taken or the kernel has
    /// no callable form.
    void register_kernel(const std::string& id, StrategyKernel kernel);

    bool contains(const std::string& id) const;
    const StrategyKernel& get(const std::string& id) const;  // StrategyError if unknown

    /// All registered ids in sorted order.
    std::vector<std::string> ids() const;

private:
    StrategyRegistry();

    std::map<std::string, StrategyKernel> kernels_;
};

/// Throws StrategyError on unknown ids or parameters outside their range.
void validate(const StrategySpec& spec);

/// Applies the strategy to an ordered, non-empty, shape-homogeneous list.
/// Strategies defined only pairwise fold left to right (see apply_fold).
/// Deterministic given (spec, inputs, seed).
Tensor apply_n(const StrategySpec& spec, std::span<const Tensor> ordered, std::uint64_t seed);

/// Pairwise application using the strategy's pairwise form when it has one,
/// otherwise its n-ary form on two elements.
Tensor apply_pair_raw(const StrategySpec& spec, const Tensor& a, const Tensor& b,
                      const RngMode& mode);

/// Left fold: acc = pair(acc, next). Fold step i (1-based) uses
/// fold_subseed(seed, i) so stochastic pairwise rules stay reproducible
/// while successive steps stay decorrelated. A single-element list is
/// returned unchanged.
Tensor apply_fold(const StrategySpec& spec, std::span<const Tensor> ordered, std::uint64_t seed);

/// derive_seed(sha256(seed as 8 big-endian bytes ++ step as 8 big-endian
/// bytes)).
std::uint64_t fold_subseed(std::uint64_t seed, std::uint64_t step);

} // namespace crdtmerge
