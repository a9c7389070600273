#include "crdtmerge/sim.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "crdtmerge/errors.hpp"
#include "crdtmerge/rng.hpp"

namespace crdtmerge {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string node_name(int index, int total) {
    int width = 2;
    for (int bound = 100; bound <= total - 1; bound *= 10) {
        ++width;
    }
    std::string digits = std::to_string(index);
    return "n" + std::string(width - digits.size(), '0') + digits;
}

void validate_sim(const SimConfig& cfg) {
    if (cfg.nodes < 2) {
        throw ValueError("sim: need at least 2 nodes");
    }
    validate(cfg.strategy);
}

// Deliveries without the full-coverage validation; partition rounds reuse
// this on pair subsets.
GossipStats deliver(std::vector<SimNode>& nodes, std::span<const DirectedPair> ordering) {
    GossipStats stats;
    for (const auto& [from, to] : ordering) {
        const auto bytes = nodes[static_cast<std::size_t>(from)].state.serialize();
        const MergeState incoming = MergeState::deserialize(bytes);
        const std::uint64_t before = Tensor::payload_bytes_read();
        nodes[static_cast<std::size_t>(to)].state.merge_in(incoming);
        stats.payload_bytes_during_merge += Tensor::payload_bytes_read() - before;
        ++stats.merge_calls;
    }
    return stats;
}

std::vector<DirectedPair> pairs_within(std::span<const int> members) {
    std::vector<DirectedPair> out;
    out.reserve(members.size() * (members.size() - 1));
    for (int from : members) {
        for (int to : members) {
            if (from != to) {
                out.push_back({from, to});
            }
        }
    }
    return out;
}

std::set<Hash256> distinct_hashes(const std::vector<SimNode>& nodes) {
    std::set<Hash256> out;
    for (const auto& n : nodes) {
        out.insert(n.resolved_hash);
    }
    return out;
}

} // namespace

std::vector<SimNode> sim_setup(const SimConfig& cfg) {
    validate_sim(cfg);
    SplitMix64 gen(cfg.seed);
    std::vector<SimNode> nodes;
    nodes.reserve(static_cast<std::size_t>(cfg.nodes));
    for (int i = 0; i < cfg.nodes; ++i) {
        NodeId id(node_name(i, cfg.nodes));
        MergeState state(id);
        state.add(random_uniform_tensor(gen, cfg.shape));
        nodes.push_back(SimNode{std::move(id), std::move(state), std::nullopt, Hash256{}});
    }
    return nodes;
}

std::vector<DirectedPair> all_pairs(int nodes) {
    std::vector<DirectedPair> out;
    out.reserve(static_cast<std::size_t>(nodes) * (nodes - 1));
    for (int from = 0; from < nodes; ++from) {
        for (int to = 0; to < nodes; ++to) {
            if (from != to) {
                out.push_back({from, to});
            }
        }
    }
    return out;
}

GossipStats gossip_round_all_pairs(std::vector<SimNode>& nodes,
                                   std::span<const DirectedPair> ordering) {
    const int n = static_cast<int>(nodes.size());
    if (n < 2) {
        throw ValueError("gossip: need at least 2 nodes");
    }
    const auto expected = static_cast<std::size_t>(n) * (n - 1);
    if (ordering.size() != expected) {
        throw ValueError("gossip: ordering must cover every directed pair exactly once");
    }
    std::vector<char> seen(static_cast<std::size_t>(n) * n, 0);
    for (const auto& [from, to] : ordering) {
        if (from < 0 || from >= n || to < 0 || to >= n || from == to) {
            throw ValueError("gossip: ordering contains an invalid pair");
        }
        auto& flag = seen[static_cast<std::size_t>(from) * n + to];
        if (flag) {
            throw ValueError("gossip: ordering contains a duplicate pair");
        }
        flag = 1;
    }
    return deliver(nodes, ordering);
}

void resolve_all(std::vector<SimNode>& nodes, const StrategySpec& spec) {
    for (auto& node : nodes) {
        node.resolved = resolve(node.state, spec);
        node.resolved_hash = content_hash(*node.resolved);
    }
}

RootCheck verify_roots(const std::vector<SimNode>& nodes) {
    if (nodes.empty()) {
        throw ValueError("verify_roots: no nodes");
    }
    std::map<Hash256, std::size_t> groups;
    for (const auto& node : nodes) {
        if (!node.resolved) {
            throw StateError("verify_roots: node " + node.id.str() + " is unresolved");
        }
        ++groups[node.resolved_hash];
    }
    if (groups.size() == 1) {
        return {true, {}};
    }
    // the largest group is authoritative; map order breaks ties toward the
    // smallest hash
    const Hash256* majority = nullptr;
    std::size_t best = 0;
    for (const auto& [hash, count] : groups) {
        if (count > best) {
            best = count;
            majority = &hash;
        }
    }
    RootCheck check;
    check.converged = false;
    for (const auto& node : nodes) {
        if (node.resolved_hash != *majority) {
            check.divergent.push_back(node.id);
        }
    }
    return check;
}

std::vector<OrderingReport> run_convergence(const SimConfig& cfg) {
    if (cfg.orderings < 0) {
        throw ValueError("sim: orderings must be non-negative");
    }
    const auto initial = sim_setup(cfg);
    const auto base_pairs = all_pairs(cfg.nodes);
    SplitMix64 order_gen(derive_subseed(cfg.seed, "orderings"));

    std::vector<OrderingReport> reports;
    reports.reserve(static_cast<std::size_t>(cfg.orderings));
    for (int o = 0; o < cfg.orderings; ++o) {
        auto nodes = initial;
        auto pairs = base_pairs;
        shuffle(pairs, order_gen);

        const auto gossip_start = Clock::now();
        const GossipStats stats = gossip_round_all_pairs(nodes, pairs);
        const double gossip_ms = ms_since(gossip_start);

        const auto reference = nodes.front().state.visible_hashes();
        for (const auto& node : nodes) {
            if (node.state.visible_hashes() != reference) {
                throw StateError("sim: replicas left the round with different visible sets");
            }
        }

        const auto resolve_start = Clock::now();
        resolve_all(nodes, cfg.strategy);
        const double resolve_ms = ms_since(resolve_start);

        OrderingReport rep;
        rep.ordering = o + 1;
        rep.merge_calls = stats.merge_calls;
        rep.gossip_ms = gossip_ms;
        rep.resolve_ms = resolve_ms;
        rep.output_hash = nodes.front().resolved_hash;
        rep.bitwise_equal = distinct_hashes(nodes).size() == 1;
        if (rep.bitwise_equal) {
            // equal hashes mean equal payload bytes
            rep.max_diff = 0.0;
        } else {
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                for (std::size_t j = i + 1; j < nodes.size(); ++j) {
                    rep.max_diff = std::max(
                        rep.max_diff, max_abs_diff(*nodes[i].resolved, *nodes[j].resolved));
                }
            }
        }
        reports.push_back(rep);
    }
    return reports;
}

PartitionReport run_partition_healing(const SimConfig& cfg) {
    if (cfg.partitions < 2) {
        throw ValueError("partition: need at least 2 partitions");
    }
    if (cfg.nodes % cfg.partitions != 0) {
        throw ValueError("partition: partition count must divide the node count");
    }

    auto nodes = sim_setup(cfg);
    PartitionReport rep;
    rep.nodes = cfg.nodes;
    rep.partitions = cfg.partitions;

    std::vector<std::vector<int>> members(static_cast<std::size_t>(cfg.partitions));
    std::vector<int> partition_of(static_cast<std::size_t>(cfg.nodes));
    for (int i = 0; i < cfg.nodes; ++i) {
        members[static_cast<std::size_t>(i % cfg.partitions)].push_back(i);
        partition_of[static_cast<std::size_t>(i)] = i % cfg.partitions;
    }

    SplitMix64 order_gen(derive_subseed(cfg.seed, "partition"));

    const auto partition_start = Clock::now();
    for (const auto& group : members) {
        auto pairs = pairs_within(group);
        shuffle(pairs, order_gen);
        rep.merge_calls += deliver(nodes, pairs).merge_calls;
    }
    rep.partition_ms = ms_since(partition_start);

    resolve_all(nodes, cfg.strategy);
    rep.partitions_consistent = true;
    for (const auto& group : members) {
        const Hash256& first = nodes[static_cast<std::size_t>(group.front())].resolved_hash;
        for (int i : group) {
            if (nodes[static_cast<std::size_t>(i)].resolved_hash != first) {
                rep.partitions_consistent = false;
            }
        }
        rep.partition_hashes.push_back(first);
    }
    const std::set<Hash256> partition_set(rep.partition_hashes.begin(),
                                          rep.partition_hashes.end());
    rep.partition_hashes_distinct =
        partition_set.size() == static_cast<std::size_t>(cfg.partitions);

    rep.vv_isolated = true;
    for (int i = 0; i < cfg.nodes; ++i) {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        for (const auto& [peer, value] : node.state.version_vector().entries()) {
            (void)value;
            bool in_partition = false;
            for (int m : members[static_cast<std::size_t>(partition_of[static_cast<std::size_t>(i)])]) {
                if (nodes[static_cast<std::size_t>(m)].id == peer) {
                    in_partition = true;
                    break;
                }
            }
            if (!in_partition) {
                rep.vv_isolated = false;
            }
        }
    }

    auto heal_pairs = all_pairs(cfg.nodes);
    shuffle(heal_pairs, order_gen);
    const auto heal_start = Clock::now();
    rep.merge_calls += gossip_round_all_pairs(nodes, heal_pairs).merge_calls;
    rep.healing_ms = ms_since(heal_start);

    const auto resolve_start = Clock::now();
    resolve_all(nodes, cfg.strategy);
    rep.resolve_ms = ms_since(resolve_start);
    rep.healed_converged = distinct_hashes(nodes).size() == 1;
    rep.healed_hash = nodes.front().resolved_hash;

    // reference: the same initial states gossiped with no partition
    auto reference = sim_setup(cfg);
    auto reference_pairs = all_pairs(cfg.nodes);
    shuffle(reference_pairs, order_gen);
    gossip_round_all_pairs(reference, reference_pairs);
    resolve_all(reference, cfg.strategy);
    rep.unpartitioned_hash = reference.front().resolved_hash;
    rep.matches_unpartitioned =
        distinct_hashes(reference).size() == 1 && rep.healed_hash == rep.unpartitioned_hash;
    return rep;
}

std::vector<SweepRow> run_strategy_sweep(const SimConfig& cfg) {
    std::vector<SweepRow> rows;
    for (const auto& id : StrategyRegistry::instance().ids()) {
        SimConfig c = cfg;
        c.strategy = StrategySpec{id, cfg.strategy.params};
        auto nodes = sim_setup(c);
        auto pairs = all_pairs(c.nodes);
        SplitMix64 gen(derive_subseed(cfg.seed, "sweep:" + id));
        shuffle(pairs, gen);

        SweepRow row;
        row.strategy = id;
        const auto gossip_start = Clock::now();
        gossip_round_all_pairs(nodes, pairs);
        row.gossip_ms = ms_since(gossip_start);
        const auto resolve_start = Clock::now();
        resolve_all(nodes, c.strategy);
        row.resolve_ms = ms_since(resolve_start);
        row.converged = verify_roots(nodes).converged;
        row.output_hash = nodes.front().resolved_hash;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ScaleRow> run_scalability(const SimConfig& cfg) {
    if (cfg.ladder.empty()) {
        throw ValueError("bench: ladder must not be empty");
    }
    std::size_t elements = 1;
    for (std::size_t dim : cfg.shape) {
        elements *= dim;
    }
    std::vector<ScaleRow> rows;
    rows.reserve(cfg.ladder.size());
    for (int n : cfg.ladder) {
        SimConfig c = cfg;
        c.nodes = n;
        auto nodes = sim_setup(c);
        auto pairs = all_pairs(n);
        SplitMix64 gen(derive_subseed(cfg.seed, "bench:" + std::to_string(n)));
        shuffle(pairs, gen);

        ScaleRow row;
        row.nodes = n;
        row.params = static_cast<std::uint64_t>(n) * elements;
        const auto gossip_start = Clock::now();
        const GossipStats stats = gossip_round_all_pairs(nodes, pairs);
        row.gossip_ms = ms_since(gossip_start);
        row.merge_calls = stats.merge_calls;
        row.payload_bytes_during_merge = stats.payload_bytes_during_merge;
        const auto resolve_start = Clock::now();
        resolve_all(nodes, c.strategy);
        row.resolve_ms = ms_since(resolve_start);
        row.converged = verify_roots(nodes).converged;
        rows.push_back(row);
    }
    return rows;
}

} // namespace crdtmerge
