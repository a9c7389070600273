#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crdtmerge/strategy.hpp"
#include "crdtmerge/tensor.hpp"

namespace crdtmerge {

enum class Verdict { pass, fail, not_applicable };

/// "pass", "fail" or "n/a".
std::string verdict_name(Verdict v);
/// 'P', 'F' or '-'.
char verdict_letter(Verdict v);

/// Algebraic-law verdicts for one strategy.
struct PropertyVerdict {
    std::string strategy;
    Verdict commutativity = Verdict::not_applicable;
    Verdict associativity = Verdict::not_applicable;
    Verdict idempotency = Verdict::not_applicable;
    Verdict convergence = Verdict::not_applicable;
    int trials = 0;             ///< input tuples per repetition
    double max_violation = 0.0; ///< largest gap seen across all checks
    double atol = 0.0;

    /// Every applicable verdict passed.
    bool crdt_compliant() const;
};

struct AuditConfig {
    std::vector<std::size_t> shape{4, 4};
    std::uint64_t seed = 42;
    double atol = 1e-5;
    int trials = 20;
    /// Stochastic strategies rerun this many times over the same inputs; a
    /// property passes only when every repetition passes.
    int repetitions = 5;
    /// Empty means every registered strategy.
    std::vector<std::string> strategies;
    StrategyParams params{};
};

struct CheckResult {
    bool pass = false;
    double violation = 0.0;
};

/// f(a, b) vs f(b, a) within atol.
CheckResult check_commutativity(const StrategySpec& spec, const Tensor& a, const Tensor& b,
                                double atol, const RngMode& mode);

/// f(f(a, b), c) vs f(a, f(b, c)) within atol.
CheckResult check_associativity(const StrategySpec& spec, const Tensor& a, const Tensor& b,
                                const Tensor& c, double atol, const RngMode& mode);

/// f(a, a) vs a within atol.
CheckResult check_idempotency(const StrategySpec& spec, const Tensor& a, double atol,
                              const RngMode& mode);

/// Raw pairwise audit: commutativity, associativity and idempotency per
/// strategy over seeded random inputs, with stochastic strategies drawing
/// fresh entropy per call. Convergence is not applicable at this layer.
std::vector<PropertyVerdict> run_phase1(const AuditConfig& cfg);

/// Spins up one single-contribution replica per tensor (exactly 3), merges
/// them in all 6 orders and resolves each result. With atol zero, outputs
/// must be bitwise identical.
CheckResult check_replica_convergence(const StrategySpec& spec,
                                      std::span<const Tensor> contributions, double atol);

/// Replicated-state audit: the same laws plus convergence, checked through
/// the replica layer where every comparison is bitwise.
std::vector<PropertyVerdict> run_phase2(const AuditConfig& cfg);

} // namespace crdtmerge
