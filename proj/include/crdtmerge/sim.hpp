#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crdtmerge/hash.hpp"
#include "crdtmerge/state.hpp"
#include "crdtmerge/strategy.hpp"

namespace crdtmerge {

struct SimConfig {
    int nodes = 20;
    std::vector<std::size_t> shape{64, 64};
    StrategySpec strategy{"slerp", {}};
    int orderings = 20;
    std::uint64_t seed = 7;
    int partitions = 4;
    std::vector<int> ladder{2, 5, 10, 20, 30, 50};
};

struct SimNode {
    NodeId id;
    MergeState state;
    std::optional<Tensor> resolved;
    Hash256 resolved_hash;
};

struct DirectedPair {
    int from = 0;
    int to = 0;
};

struct GossipStats {
    std::uint64_t merge_calls = 0;
    /// Tensor payload bytes read while joining states. Joins move metadata
    /// and content hashes only, so this stays zero.
    std::uint64_t payload_bytes_during_merge = 0;
};

/// One replica per index, named "n00", "n01", ... Each starts with a single
/// locally added contribution drawn from the config seed.
std::vector<SimNode> sim_setup(const SimConfig& cfg);

/// The n(n-1) directed pairs in canonical (from, to) order.
std::vector<DirectedPair> all_pairs(int nodes);

/// Delivers one full push round in the given order: each delivery encodes
/// the sender's current state, decodes it at the receiver and joins it in.
/// The ordering must be a permutation of all_pairs(n); anything else throws
/// ValueError. Payload reads are counted around the joins only.
GossipStats gossip_round_all_pairs(std::vector<SimNode>& nodes,
                                   std::span<const DirectedPair> ordering);

/// Resolves every node's state in place and records the output hash.
void resolve_all(std::vector<SimNode>& nodes, const StrategySpec& spec);

struct RootCheck {
    bool converged = false;
    std::vector<NodeId> divergent;  ///< empty when converged
};

/// Groups nodes by resolved output hash. With more than one group, every
/// node outside the largest group (ties break toward the smallest hash) is
/// reported divergent. Throws StateError when a node is unresolved.
RootCheck verify_roots(const std::vector<SimNode>& nodes);

struct OrderingReport {
    int ordering = 0;
    std::uint64_t merge_calls = 0;
    double gossip_ms = 0.0;
    double resolve_ms = 0.0;
    double max_diff = 0.0;
    bool bitwise_equal = false;
    Hash256 output_hash;
};

/// Re-runs one all-pairs round from the same initial states under
/// cfg.orderings random delivery orders, resolving every node each time.
/// Replicas must expose identical visible sets after each round; that is
/// asserted before resolution.
std::vector<OrderingReport> run_convergence(const SimConfig& cfg);

struct PartitionReport {
    int nodes = 0;
    int partitions = 0;
    std::vector<Hash256> partition_hashes;  ///< one resolved hash per partition
    bool partitions_consistent = false;     ///< each partition internally bitwise-equal
    bool partition_hashes_distinct = false;
    bool vv_isolated = false;  ///< no version entries leaked across partitions
    double partition_ms = 0.0;
    double healing_ms = 0.0;
    double resolve_ms = 0.0;
    std::uint64_t merge_calls = 0;
    bool healed_converged = false;
    Hash256 healed_hash;
    Hash256 unpartitioned_hash;
    bool matches_unpartitioned = false;

    bool all_pass() const {
        return partitions_consistent && partition_hashes_distinct && vv_isolated &&
               healed_converged && matches_unpartitioned;
    }
};

/// Splits nodes round-robin (node i joins partition i mod k), gossips to
/// convergence inside each partition, then heals with one global round and
/// compares against an unpartitioned run from the same initial states.
PartitionReport run_partition_healing(const SimConfig& cfg);

struct SweepRow {
    std::string strategy;
    double gossip_ms = 0.0;
    double resolve_ms = 0.0;
    bool converged = false;
    Hash256 output_hash;
};

/// One gossip-and-resolve run per registered strategy, identical initial
/// states each time.
std::vector<SweepRow> run_strategy_sweep(const SimConfig& cfg);

struct ScaleRow {
    int nodes = 0;
    std::uint64_t params = 0;  ///< total tensor elements across nodes
    std::uint64_t merge_calls = 0;
    std::uint64_t payload_bytes_during_merge = 0;
    double gossip_ms = 0.0;
    double resolve_ms = 0.0;
    bool converged = false;
};

/// One run per ladder rung (node count), reporting merge counts, payload
/// isolation and timings.
std::vector<ScaleRow> run_scalability(const SimConfig& cfg);

} // namespace crdtmerge
