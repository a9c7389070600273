// Acceptance checks for the replicated-merge system. Each check prints one
// verdict line; the process exits 0 only when every check passes. Tolerances
// and runtime budgets are pinned here on purpose: a change that moves any of
// these numbers is a behavior change, not a refactor.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crdtmerge/audit.hpp"
#include "crdtmerge/hash.hpp"
#include "crdtmerge/rng.hpp"
#include "crdtmerge/sim.hpp"
#include "crdtmerge/state.hpp"
#include "crdtmerge/strategy.hpp"
#include "crdtmerge/tensor.hpp"

using namespace crdtmerge;

namespace {

constexpr double kAuditAtol = 1e-5;
constexpr double kSlerpTraceTol = 1e-3;
constexpr double kTiesTraceTol = 1e-9;
constexpr double kMeanGapTol = 1e-12;
constexpr double kRawAuditBudgetSec = 10.0;
constexpr double kReplicatedAuditBudgetSec = 60.0;
constexpr double kConvergenceBudgetSec = 120.0;
constexpr int kSemilatticeCases = 1000;
constexpr int kOrderingCases = 500;

const std::vector<std::string> kStrategies{
    "weight_average", "linear", "task_arithmetic", "ties",
    "dare", "dare_ties", "slerp", "fisher_merge", "model_breadcrumbs",
    "evolutionary_merge"};

struct Outcome {
    bool pass = true;
    std::string detail;
};

void fail(Outcome& o, const std::string& why) {
    o.pass = false;
    if (!o.detail.empty()) {
        o.detail += "; ";
    }
    o.detail += why;
}

AuditConfig audit_config() {
    AuditConfig cfg;
    cfg.shape = {4, 4};
    cfg.seed = 42;
    cfg.atol = kAuditAtol;
    cfg.trials = 20;
    cfg.repetitions = 5;
    cfg.strategies = kStrategies;
    return cfg;
}

std::string law_letters(const PropertyVerdict& row) {
    return {verdict_letter(row.commutativity), verdict_letter(row.associativity),
            verdict_letter(row.idempotency)};
}

// 1. The raw pairwise operators reproduce the frozen verdict table.
Outcome check_raw_verdict_table() {
    const std::map<std::string, std::string> expected{
        {"weight_average", "PFP"}, {"linear", "PFP"},
        {"task_arithmetic", "PPF"}, {"ties", "PFF"},
        {"dare", "FFF"}, {"dare_ties", "FFF"},
        {"slerp", "PFP"}, {"fisher_merge", "PFP"},
        {"model_breadcrumbs", "PFF"}, {"evolutionary_merge", "FFF"}};

    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_phase1(audit_config());
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (rows.size() != expected.size()) {
        fail(o, "expected " + std::to_string(expected.size()) + " rows, got " +
                     std::to_string(rows.size()));
    }
    for (const auto& row : rows) {
        const auto it = expected.find(row.strategy);
        if (it == expected.end()) {
            fail(o, "unexpected strategy " + row.strategy);
            continue;
        }
        if (law_letters(row) != it->second) {
            fail(o, row.strategy + " C/A/I " + law_letters(row) + " != " + it->second);
        }
    }
    if (sec >= kRawAuditBudgetSec) {
        fail(o, "runtime " + std::to_string(sec) + "s over budget");
    }
    return o;
}

// 2. Through the replicated layer every strategy passes every law, bitwise.
Outcome check_replicated_compliance() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_phase2(audit_config());
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    int passed = 0;
    for (const auto& row : rows) {
        for (const Verdict v : {row.commutativity, row.associativity, row.idempotency,
                                row.convergence}) {
            if (v == Verdict::pass) {
                ++passed;
            }
        }
        if (!row.crdt_compliant()) {
            fail(o, row.strategy + " not compliant");
        }
        if (row.max_violation != 0.0) {
            fail(o, row.strategy + " non-bitwise violation " +
                         std::to_string(row.max_violation));
        }
    }
    if (passed != 40) {
        fail(o, std::to_string(passed) + "/40 properties passed");
    }
    if (sec >= kReplicatedAuditBudgetSec) {
        fail(o, "runtime " + std::to_string(sec) + "s over budget");
    }
    return o;
}

double trace_gap(const Tensor& got, const std::array<double, 3>& want) {
    double gap = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        gap = std::max(gap, std::abs(got.values()[i] - want[i]));
    }
    return gap;
}

// 3. The fold-order counterexample traces come out at their known values.
Outcome check_counterexample_traces() {
    Outcome o;

    // Spherical interpolation over the unit basis: the two association
    // orders land on different great circles.
    const StrategySpec slerp{"slerp", {}};
    const Tensor e1({3}, {1, 0, 0});
    const Tensor e2({3}, {0, 1, 0});
    const Tensor e3({3}, {0, 0, 1});
    const RngMode mode = RngMode::with_seed(0);
    const Tensor sl = apply_pair_raw(slerp, apply_pair_raw(slerp, e1, e2, mode), e3, mode);
    const Tensor sr = apply_pair_raw(slerp, e1, apply_pair_raw(slerp, e2, e3, mode), mode);
    const double r = std::sqrt(0.5);
    if (trace_gap(sl, {0.5, 0.5, r}) > kSlerpTraceTol) {
        fail(o, "slerp left fold off by " +
                     std::to_string(trace_gap(sl, {0.5, 0.5, r})));
    }
    if (trace_gap(sr, {r, 0.5, 0.5}) > kSlerpTraceTol) {
        fail(o, "slerp right fold off by " +
                     std::to_string(trace_gap(sr, {r, 0.5, 0.5})));
    }

    // Magnitude trimming at keep 0.8: drops 1 of 3 coordinates per input,
    // so the two association orders trim different coordinates.
    StrategySpec ties{"ties", {}};
    ties.params.keep_frac = 0.8;
    const Tensor a({3}, {10, 1, 0.1});
    const Tensor b({3}, {0.1, 10, 1});
    const Tensor c({3}, {1, 0.1, 10});
    const std::vector<Tensor> ab{a, b};
    const Tensor m_ab = apply_n(ties, ab, 0);
    const std::vector<Tensor> ab_c{m_ab, c};
    const Tensor tl = apply_n(ties, ab_c, 0);
    const std::vector<Tensor> bc{b, c};
    const Tensor m_bc = apply_n(ties, bc, 0);
    const std::vector<Tensor> a_bc{a, m_bc};
    const Tensor tr = apply_n(ties, a_bc, 0);
    if (trace_gap(tl, {3.0, 2.75, 5.0}) > kTiesTraceTol) {
        fail(o, "ties left fold off by " +
                     std::to_string(trace_gap(tl, {3.0, 2.75, 5.0})));
    }
    if (trace_gap(tr, {5.0, 3.0, 2.75}) > kTiesTraceTol) {
        fail(o, "ties right fold off by " +
                     std::to_string(trace_gap(tr, {5.0, 3.0, 2.75})));
    }

    // Averaging renormalizes per application, so the association gap is
    // exactly max|a - c| / 4.
    const StrategySpec mean{"weight_average", {}};
    SplitMix64 gen(2025);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor x = random_uniform_tensor(gen, {4, 4});
        const Tensor y = random_uniform_tensor(gen, {4, 4});
        const Tensor z = random_uniform_tensor(gen, {4, 4});
        const std::vector<Tensor> xy{x, y};
        const std::vector<Tensor> left_in{apply_n(mean, xy, 0), z};
        const std::vector<Tensor> yz{y, z};
        const std::vector<Tensor> right_in{x, apply_n(mean, yz, 0)};
        const double gap =
            max_abs_diff(apply_n(mean, left_in, 0), apply_n(mean, right_in, 0));
        const double want = max_abs_diff(x, z) / 4.0;
        if (std::abs(gap - want) > kMeanGapTol) {
            fail(o, "mean association gap " + std::to_string(gap) + " != max|a-c|/4 " +
                         std::to_string(want));
            break;
        }
    }
    return o;
}

bool dominates(const MergeState& lo, const MergeState& hi) {
    const StateOrder ord = lo.compare(hi);
    return ord == StateOrder::equal || ord == StateOrder::less_equal;
}

// 4. Joins form a semilattice and operations only grow states.
Outcome check_semilattice_laws() {
    Outcome o;
    SplitMix64 gen(4242);

    std::vector<Tensor> pool;
    for (int i = 0; i < 6; ++i) {
        pool.push_back(random_uniform_tensor(gen, {2, 2}));
    }
    const auto random_state = [&](const char* name) {
        MergeState s{NodeId(name)};
        const auto ops = 1 + gen.next_below(4);
        for (std::uint64_t i = 0; i < ops; ++i) {
            s.add(pool[gen.next_below(pool.size())]);
        }
        if (gen.next_bernoulli(0.3) && s.visible_count() > 0) {
            const auto hashes = s.visible_hashes();
            s.remove(hashes[gen.next_below(hashes.size())]);
        }
        return s;
    };

    int failures = 0;
    for (int i = 0; i < kSemilatticeCases && failures == 0; ++i) {
        const MergeState a = random_state("a");
        const MergeState b = random_state("b");
        const MergeState c = random_state("c");

        const MergeState ab = merge(a, b);
        if (!ab.same_state(merge(b, a))) {
            fail(o, "join not commutative at case " + std::to_string(i));
            ++failures;
        }
        if (!merge(ab, c).same_state(merge(a, merge(b, c)))) {
            fail(o, "join not associative at case " + std::to_string(i));
            ++failures;
        }
        if (!merge(a, a).same_state(a)) {
            fail(o, "join not idempotent at case " + std::to_string(i));
            ++failures;
        }

        // Least upper bound: the join dominates both inputs and is itself
        // dominated by any other upper bound.
        const MergeState upper = merge(ab, c);
        if (!dominates(a, ab) || !dominates(b, ab) || !dominates(ab, upper)) {
            fail(o, "join is not the least upper bound at case " + std::to_string(i));
            ++failures;
        }

        // Every operation moves a state up the partial order.
        MergeState grown = a;
        grown.add(pool[gen.next_below(pool.size())]);
        if (!dominates(a, grown)) {
            fail(o, "add did not grow the state at case " + std::to_string(i));
            ++failures;
        }
        const MergeState before_remove = grown;
        grown.remove(grown.visible_hashes().front());
        if (!dominates(before_remove, grown)) {
            fail(o, "remove did not grow the state at case " + std::to_string(i));
            ++failures;
        }
        if (!dominates(a, merge(a, b))) {
            fail(o, "join did not grow the state at case " + std::to_string(i));
            ++failures;
        }
    }
    return o;
}

// 5. Insertion order never leaks into the canonical ordering, the root or
// the derived seed.
Outcome check_order_independence() {
    Outcome o;
    SplitMix64 gen(777);
    for (int i = 0; i < kOrderingCases && o.pass; ++i) {
        const auto count = 1 + gen.next_below(8);
        std::vector<Tensor> tensors;
        for (std::uint64_t k = 0; k < count; ++k) {
            tensors.push_back(random_uniform_tensor(gen, {2, 2}));
        }
        std::vector<std::size_t> order1(tensors.size());
        std::vector<std::size_t> order2(tensors.size());
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            order1[k] = order2[k] = k;
        }
        shuffle(order1, gen);
        shuffle(order2, gen);

        MergeState r1{NodeId("r1")};
        MergeState r2{NodeId("r2")};
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            r1.add(tensors[order1[k]]);
            r2.add(tensors[order2[k]]);
        }

        std::vector<Hash256> hashes;
        for (const auto& t : tensors) {
            hashes.push_back(content_hash(t));
        }
        const auto canon = canonical_order(hashes);
        if (r1.visible_hashes() != canon || r2.visible_hashes() != canon) {
            fail(o, "canonical orderings disagree at case " + std::to_string(i));
        }
        if (r1.root() != r2.root() || r1.root() != merkle_root(canon)) {
            fail(o, "roots disagree at case " + std::to_string(i));
        }
        if (derive_seed(r1.root()) != derive_seed(r2.root())) {
            fail(o, "derived seeds disagree at case " + std::to_string(i));
        }
    }
    return o;
}

// 6. Twenty replicas converge bitwise under twenty random delivery orders.
Outcome check_multi_node_convergence() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const auto rows = run_convergence(SimConfig{});
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (rows.size() != 20) {
        fail(o, "expected 20 orderings, got " + std::to_string(rows.size()));
    }
    std::set<Hash256> outputs;
    for (const auto& row : rows) {
        if (!row.bitwise_equal || row.max_diff != 0.0) {
            fail(o, "ordering " + std::to_string(row.ordering) + " diverged");
        }
        outputs.insert(row.output_hash);
    }
    if (outputs.size() != 1) {
        fail(o, std::to_string(outputs.size()) + " distinct resolved roots");
    }
    if (sec >= kConvergenceBudgetSec) {
        fail(o, "runtime " + std::to_string(sec) + "s over budget");
    }
    return o;
}

// 7. Partitions resolve apart, then heal to the unpartitioned answer.
Outcome check_partition_healing() {
    Outcome o;
    const auto rep = run_partition_healing(SimConfig{});
    if (rep.partition_hashes.size() != 4) {
        fail(o, std::to_string(rep.partition_hashes.size()) + " partition roots");
    }
    if (!rep.partitions_consistent) {
        fail(o, "a partition did not agree internally");
    }
    if (!rep.partition_hashes_distinct) {
        fail(o, "partition roots not distinct during isolation");
    }
    if (!rep.vv_isolated) {
        fail(o, "version entries leaked across partitions");
    }
    if (!rep.healed_converged) {
        fail(o, "healing did not converge");
    }
    if (!rep.matches_unpartitioned || rep.healed_hash != rep.unpartitioned_hash) {
        fail(o, "healed root differs from the unpartitioned run");
    }
    return o;
}

// 8. Merge-call counters scale as n(n-1) and merges never read payloads.
Outcome check_scalability_counters() {
    Outcome o;
    const std::vector<std::uint64_t> expected{2, 20, 90, 380, 870, 2450};
    const auto rows = run_scalability(SimConfig{});
    if (rows.size() != expected.size()) {
        fail(o, "expected " + std::to_string(expected.size()) + " rungs");
        return o;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].merge_calls != expected[i]) {
            fail(o, std::to_string(rows[i].nodes) + " nodes: " +
                         std::to_string(rows[i].merge_calls) + " merges, expected " +
                         std::to_string(expected[i]));
        }
        if (!rows[i].converged) {
            fail(o, std::to_string(rows[i].nodes) + " nodes did not converge");
        }
        if (rows[i].payload_bytes_during_merge != 0) {
            fail(o, std::to_string(rows[i].nodes) + " nodes read " +
                         std::to_string(rows[i].payload_bytes_during_merge) +
                         " payload bytes during merges");
        }
    }
    return o;
}

// 9. The harness actually catches violations: a kernel with hidden state
// fails replicated convergence, and a tampered node is named.
Outcome check_negative_controls() {
    Outcome o;

    const std::string impure_id = "impure_probe";
    if (!StrategyRegistry::instance().contains(impure_id)) {
        StrategyKernel kernel;
        kernel.arity = Arity::n_ary;
        kernel.stochastic = false;
        kernel.n_ary = [](std::span<const Tensor> inputs, const StrategyParams&,
                          std::uint64_t) {
            static std::uint64_t calls = 0;  // hidden state: breaks purity
            std::vector<double> out(inputs[0].values().begin(), inputs[0].values().end());
            for (std::size_t i = 1; i < inputs.size(); ++i) {
                const auto v = inputs[i].values();
                for (std::size_t j = 0; j < out.size(); ++j) {
                    out[j] += v[j];
                }
            }
            for (double& x : out) {
                x /= static_cast<double>(inputs.size());
            }
            out[0] += 0.001 * static_cast<double>(++calls % 7);
            return Tensor(inputs[0].shape(), std::move(out));
        };
        StrategyRegistry::instance().register_kernel(impure_id, std::move(kernel));
    }

    AuditConfig cfg = audit_config();
    cfg.strategies = {impure_id};
    cfg.trials = 5;
    const auto rows = run_phase2(cfg);
    if (rows.size() != 1 || rows[0].convergence != Verdict::fail ||
        rows[0].crdt_compliant()) {
        fail(o, "impure kernel was not flagged by the replicated audit");
    }

    SimConfig sim;
    sim.nodes = 4;
    sim.shape = {4, 4};
    sim.orderings = 1;
    auto nodes = sim_setup(sim);
    gossip_round_all_pairs(nodes, all_pairs(sim.nodes));
    resolve_all(nodes, sim.strategy);
    nodes[2].resolved_hash = Hash256::from_hex(std::string(64, 'e'));
    const auto flagged = verify_roots(nodes);
    if (flagged.converged || flagged.divergent.size() != 1 ||
        flagged.divergent[0] != nodes[2].id) {
        fail(o, "tampered node was not the one flagged divergent");
    }
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> checks{
        {"raw operator verdict table", check_raw_verdict_table},
        {"replicated-layer compliance", check_replicated_compliance},
        {"association counterexample traces", check_counterexample_traces},
        {"state join semilattice laws", check_semilattice_laws},
        {"insertion-order independence", check_order_independence},
        {"multi-node bitwise convergence", check_multi_node_convergence},
        {"partition healing", check_partition_healing},
        {"scalability counters", check_scalability_counters},
        {"negative controls", check_negative_controls},
    };

    int failures = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = checks[i].second();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        std::printf("[%zu/%zu] %-36s %s (%.1fs)\n", i + 1, checks.size(), checks[i].first,
                    outcome.pass ? "PASS" : "FAIL", sec);
        if (!outcome.pass) {
            std::printf("        %s\n", outcome.detail.c_str());
            ++failures;
        }
    }
    std::printf("acceptance: %zu/%zu checks passed\n", checks.size() - failures,
                checks.size());
    if (failures == 0) {
        std::printf("note: the large-scale convergence run is available via "
                    "'crdt-merge converge --full-scale'\n");
    }
    return failures == 0 ? 0 : 1;
}
