#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crdtmerge/hash.hpp"
#include "crdtmerge/strategy.hpp"
#include "crdtmerge/tensor.hpp"

namespace crdtmerge {

/// Replica identifier: non-empty ASCII, ordered lexicographically.
class NodeId {
public:
    explicit NodeId(std::string id);

    const std::string& str() const noexcept { return id_; }

    auto operator<=>(const NodeId&) const = default;

private:
    std::string id_;
};

/// Unique add event: the issuing replica together with that replica's
/// operation counter at the time of the add. Counters start at 1.
struct Tag {
    NodeId node;
    std::uint64_t counter = 0;

    auto operator<=>(const Tag&) const = default;
};

/// One add-set entry: which content was added, under which tag.
struct AddEntry {
    Hash256 hash;
    Tag tag;

    auto operator<=>(const AddEntry&) const = default;
};

/// Per-replica operation counters. Absent entries read as zero. Entries
/// only ever grow: local operations bump the owner, merges take pointwise
/// maxima.
class VersionVector {
public:
    VersionVector() = default;

    /// Builds from explicit entries; zero-valued entries are dropped (an
    /// absent entry already means zero).
    explicit VersionVector(std::map<NodeId, std::uint64_t> entries);

    std::uint64_t get(const NodeId& node) const noexcept;
    std::uint64_t bump(const NodeId& node);  // returns the new value
    void merge_max(const VersionVector& other);

    /// True when every entry of a is <= the matching entry of b.
    static bool less_equal(const VersionVector& a, const VersionVector& b);

    const std::map<NodeId, std::uint64_t>& entries() const noexcept { return entries_; }

    bool operator==(const VersionVector&) const = default;

private:
    std::map<NodeId, std::uint64_t> entries_;
};

/// A visible piece of content: its hash plus the shared payload.
struct Contribution {
    Hash256 hash;
    std::shared_ptr<const Tensor> tensor;
};

enum class StateOrder { equal, less_equal, greater_equal, concurrent };

/// Replicated add-wins set of tensor contributions. Metadata (add entries,
/// remove tombstones, version vector) merges as a join-semilattice; payloads
/// are carried by content hash and are never read while merging. The state
/// keeps a Merkle root over its visible hashes, from which resolution
/// derives its random seed.
class MergeState {
public:
    explicit MergeState(NodeId owner);

    /// Assembles a state from raw parts, validating that the store covers
    /// every add, stored payloads match their hashes, removes tombstone
    /// known add tags (with counters starting at 1) and the version vector
    /// covers every issued counter. Throws StateError on violations.
    static MergeState from_parts(NodeId owner,
                                 std::set<AddEntry> adds,
                                 std::set<Tag> removes,
                                 VersionVector version_vector,
                                 std::map<Hash256, std::shared_ptr<const Tensor>> store);

    const NodeId& owner() const noexcept { return owner_; }
    const std::set<AddEntry>& adds() const noexcept { return adds_; }
    const std::set<Tag>& removes() const noexcept { return removes_; }
    const VersionVector& version_vector() const noexcept { return vv_; }

    /// Records a contribution under a fresh (owner, counter) tag and
    /// returns that tag.
    Tag add(Tensor t);

    /// Tombstones every currently visible tag carrying this content hash.
    /// Throws StateError when the hash is not visible.
    void remove(const Hash256& h);

    /// Joins another replica's state into this one: set unions plus the
    /// pointwise version vector maximum. Reads no tensor payloads.
    void merge_in(const MergeState& other);

    /// Distinct visible contributions in canonical hash order. A hash is
    /// visible when at least one of its add tags has no tombstone.
    std::vector<Contribution> visible() const;
    std::vector<Hash256> visible_hashes() const;
    std::size_t visible_count() const;

    /// Merkle root over the visible hashes in canonical order, or the
    /// all-zero digest when nothing is visible. Kept current by every
    /// mutating operation.
    const Hash256& root() const noexcept { return root_; }

    /// Replica-content equality: adds, removes and version vector all
    /// equal. The owner is transport metadata and does not participate.
    bool same_state(const MergeState& other) const;

    /// Partial order induced by componentwise subset/vector comparison.
    StateOrder compare(const MergeState& other) const;

    /// Wire encoding (magic "CMS1", versioned, byte-deterministic for a
    /// given state and owner).
    std::vector<std::uint8_t> serialize() const;

    /// Inverse of serialize. Revalidates everything: structure, content
    /// hashes, tombstone targets and version coverage. Throws FormatError
    /// on any problem.
    static MergeState deserialize(std::span<const std::uint8_t> bytes);

    /// Short human-readable summary for logs.
    std::string describe() const;

private:
    void recompute_root();

    NodeId owner_;
    std::set<AddEntry> adds_;
    std::set<Tag> removes_;
    VersionVector vv_;
    std::map<Hash256, std::shared_ptr<const Tensor>> store_;
    Hash256 root_;
};

/// Pure join; the result carries a's owner.
MergeState merge(const MergeState& a, const MergeState& b);

/// Deterministic resolution: the visible contributions in canonical order,
/// the seed derived from the Merkle root, then the strategy applied. Throws
/// StateError when nothing is visible, ShapeError when visible shapes are
/// mixed, StrategyError for unknown strategies.
Tensor resolve(const MergeState& state, const StrategySpec& spec);

} // namespace crdtmerge
