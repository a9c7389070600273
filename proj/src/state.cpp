#include "crdtmerge/state.hpp"

#include <algorithm>
#include <mutex>
#include <utility>

#include "crdtmerge/errors.hpp"
#include "wire.hpp"

namespace crdtmerge {

NodeId::NodeId(std::string id) : id_(std::move(id)) {
    if (id_.empty()) {
        throw ValueError("node id must be non-empty");
    }
    for (char c : id_) {
        const auto byte = static_cast<unsigned char>(c);
        if (byte == 0 || byte > 0x7f) {
            throw ValueError("node id must be ASCII");
        }
    }
}

VersionVector::VersionVector(std::map<NodeId, std::uint64_t> entries)
    : entries_(std::move(entries)) {
    std::erase_if(entries_, [](const auto& e) { return e.second == 0; });
}

std::uint64_t VersionVector::get(const NodeId& node) const noexcept {
    const auto it = entries_.find(node);
    return it == entries_.end() ? 0 : it->second;
}

std::uint64_t VersionVector::bump(const NodeId& node) {
    return ++entries_[node];
}

void VersionVector::merge_max(const VersionVector& other) {
    for (const auto& [node, value] : other.entries_) {
        auto& mine = entries_[node];
        mine = std::max(mine, value);
    }
}

bool VersionVector::less_equal(const VersionVector& a, const VersionVector& b) {
    return std::all_of(a.entries_.begin(), a.entries_.end(),
                       [&](const auto& e) { return e.second <= b.get(e.first); });
}

namespace {

// Payloads are immutable and content-addressed, so identical content is
// shared process-wide. Without this every replica in a simulation would
// hold its own private copy of every contribution it has ever received.
std::shared_ptr<const Tensor> intern_payload(const Hash256& h,
                                             std::shared_ptr<const Tensor> tensor) {
    static std::mutex mu;
    static std::map<Hash256, std::weak_ptr<const Tensor>> pool;
    std::lock_guard<std::mutex> lock(mu);
    if (pool.size() >= 4096) {
        std::erase_if(pool, [](const auto& e) { return e.second.expired(); });
    }
    auto& slot = pool[h];
    if (auto existing = slot.lock()) {
        return existing;
    }
    slot = tensor;
    return tensor;
}

} // namespace

MergeState::MergeState(NodeId owner) : owner_(std::move(owner)) {}

MergeState MergeState::from_parts(NodeId owner, std::set<AddEntry> adds, std::set<Tag> removes,
                                  VersionVector version_vector,
                                  std::map<Hash256, std::shared_ptr<const Tensor>> store) {
    MergeState s(std::move(owner));
    s.adds_ = std::move(adds);
    s.removes_ = std::move(removes);
    s.vv_ = std::move(version_vector);
    s.store_ = std::move(store);

    std::set<Tag> known_tags;
    std::set<Hash256> known_hashes;
    for (const auto& e : s.adds_) {
        if (e.tag.counter == 0) {
            throw StateError("state parts: tag counters start at 1");
        }
        if (s.vv_.get(e.tag.node) < e.tag.counter) {
            throw StateError("state parts: version vector does not cover tag " +
                             e.tag.node.str() + ":" + std::to_string(e.tag.counter));
        }
        known_tags.insert(e.tag);
        known_hashes.insert(e.hash);
    }
    for (const auto& t : s.removes_) {
        if (!known_tags.contains(t)) {
            throw StateError("state parts: tombstone for unknown tag " + t.node.str() + ":" +
                             std::to_string(t.counter));
        }
    }
    if (s.store_.size() != known_hashes.size()) {
        throw StateError("state parts: store does not match the add set");
    }
    for (auto& [h, tensor] : s.store_) {
        if (!known_hashes.contains(h)) {
            throw StateError("state parts: store holds content with no add entry");
        }
        if (!tensor) {
            throw StateError("state parts: missing payload");
        }
        if (content_hash(*tensor) != h) {
            throw StateError("state parts: payload does not match its hash");
        }
        tensor = intern_payload(h, std::move(tensor));
    }
    s.recompute_root();
    return s;
}

Tag MergeState::add(Tensor t) {
    auto tensor = std::make_shared<const Tensor>(std::move(t));
    const Hash256 h = content_hash(*tensor);
    const Tag tag{owner_, vv_.bump(owner_)};
    adds_.insert(AddEntry{h, tag});
    store_.emplace(h, intern_payload(h, std::move(tensor)));
    recompute_root();
    return tag;
}

void MergeState::remove(const Hash256& h) {
    std::vector<Tag> live;
    for (const auto& e : adds_) {
        if (e.hash == h && !removes_.contains(e.tag)) {
            live.push_back(e.tag);
        }
    }
    if (live.empty()) {
        throw StateError("remove: content " + h.hex().substr(0, 12) + " is not visible");
    }
    for (auto& tag : live) {
        removes_.insert(std::move(tag));
    }
    vv_.bump(owner_);
    recompute_root();
}

void MergeState::merge_in(const MergeState& other) {
    adds_.insert(other.adds_.begin(), other.adds_.end());
    removes_.insert(other.removes_.begin(), other.removes_.end());
    for (const auto& [h, tensor] : other.store_) {
        store_.emplace(h, tensor);
    }
    vv_.merge_max(other.vv_);
    recompute_root();
}

std::vector<Hash256> MergeState::visible_hashes() const {
    std::set<Hash256> live;
    for (const auto& e : adds_) {
        if (!removes_.contains(e.tag)) {
            live.insert(e.hash);
        }
    }
    return {live.begin(), live.end()};
}

std::vector<Contribution> MergeState::visible() const {
    std::vector<Contribution> out;
    for (const auto& h : visible_hashes()) {
        out.push_back(Contribution{h, store_.at(h)});
    }
    return out;
}

std::size_t MergeState::visible_count() const {
    return visible_hashes().size();
}

bool MergeState::same_state(const MergeState& other) const {
    return adds_ == other.adds_ && removes_ == other.removes_ && vv_ == other.vv_;
}

StateOrder MergeState::compare(const MergeState& other) const {
    const auto contained = [](const auto& small, const auto& big) {
        return std::includes(big.begin(), big.end(), small.begin(), small.end());
    };
    const bool le = contained(adds_, other.adds_) && contained(removes_, other.removes_) &&
                    VersionVector::less_equal(vv_, other.vv_);
    const bool ge = contained(other.adds_, adds_) && contained(other.removes_, removes_) &&
                    VersionVector::less_equal(other.vv_, vv_);
    if (le && ge) return StateOrder::equal;
    if (le) return StateOrder::less_equal;
    if (ge) return StateOrder::greater_equal;
    return StateOrder::concurrent;
}

void MergeState::recompute_root() {
    const auto vis = visible_hashes();
    root_ = vis.empty() ? Hash256{} : merkle_root(vis);
}

std::vector<std::uint8_t> MergeState::serialize() const {
    std::size_t blob_total = 0;
    for (const auto& [h, tensor] : store_) {
        blob_total += 48 + 8 + 8 * tensor->shape().size() + 8 * tensor->size();
    }
    std::vector<std::uint8_t> out;
    out.reserve(64 + owner_.str().size() + adds_.size() * 64 + removes_.size() * 32 +
                vv_.entries().size() * 32 + blob_total);

    static constexpr std::uint8_t kMagic[4] = {'C', 'M', 'S', '1'};
    wire::put_bytes(out, kMagic);
    wire::put_u32le(out, 1);
    wire::put_string(out, owner_.str());

    wire::put_u64le(out, adds_.size());
    for (const auto& e : adds_) {
        wire::put_bytes(out, e.hash.bytes());
        wire::put_string(out, e.tag.node.str());
        wire::put_u64le(out, e.tag.counter);
    }

    wire::put_u64le(out, removes_.size());
    for (const auto& t : removes_) {
        wire::put_string(out, t.node.str());
        wire::put_u64le(out, t.counter);
    }

    wire::put_u64le(out, vv_.entries().size());
    for (const auto& [node, value] : vv_.entries()) {
        wire::put_string(out, node.str());
        wire::put_u64le(out, value);
    }

    wire::put_u64le(out, store_.size());
    for (const auto& [h, tensor] : store_) {
        wire::put_bytes(out, h.bytes());
        const auto blob = canonical_bytes(*tensor);
        wire::put_u64le(out, blob.size());
        wire::put_bytes(out, blob);
    }
    return out;
}

namespace {

NodeId read_node_id(wire::Reader& r) {
    std::string id = r.string32();
    try {
        return NodeId(std::move(id));
    } catch (const ValueError& e) {
        throw FormatError(r.context() + ": " + e.what());
    }
}

Hash256 read_hash(wire::Reader& r) {
    const auto b = r.take(32);
    std::array<std::uint8_t, 32> bytes{};
    std::copy(b.begin(), b.end(), bytes.begin());
    return Hash256(bytes);
}

} // namespace

MergeState MergeState::deserialize(std::span<const std::uint8_t> bytes) {
    wire::Reader r(bytes, "state");
    r.expect_magic("CMS1");
    if (r.u32le() != 1) {
        throw FormatError("state: unsupported format version");
    }
    NodeId owner = read_node_id(r);

    // every section must arrive strictly sorted so each state has exactly
    // one encoding
    std::set<AddEntry> adds;
    const std::uint64_t add_count = r.u64le();
    for (std::uint64_t i = 0; i < add_count; ++i) {
        Hash256 h = read_hash(r);
        NodeId node = read_node_id(r);
        const std::uint64_t counter = r.u64le();
        AddEntry e{h, Tag{std::move(node), counter}};
        if (!adds.empty() && !(*adds.rbegin() < e)) {
            throw FormatError("state: add entries out of order");
        }
        adds.insert(std::move(e));
    }

    std::set<Tag> removes;
    const std::uint64_t remove_count = r.u64le();
    for (std::uint64_t i = 0; i < remove_count; ++i) {
        NodeId node = read_node_id(r);
        const std::uint64_t counter = r.u64le();
        Tag t{std::move(node), counter};
        if (!removes.empty() && !(*removes.rbegin() < t)) {
            throw FormatError("state: tombstones out of order");
        }
        removes.insert(std::move(t));
    }

    std::map<NodeId, std::uint64_t> vv_entries;
    const std::uint64_t vv_count = r.u64le();
    for (std::uint64_t i = 0; i < vv_count; ++i) {
        NodeId node = read_node_id(r);
        const std::uint64_t value = r.u64le();
        if (value == 0) {
            throw FormatError("state: version entries must be positive");
        }
        if (!vv_entries.empty() && !(vv_entries.rbegin()->first < node)) {
            throw FormatError("state: version entries out of order");
        }
        vv_entries.emplace(std::move(node), value);
    }

    std::map<Hash256, std::shared_ptr<const Tensor>> store;
    const std::uint64_t store_count = r.u64le();
    for (std::uint64_t i = 0; i < store_count; ++i) {
        Hash256 h = read_hash(r);
        if (!store.empty() && !(store.rbegin()->first < h)) {
            throw FormatError("state: store entries out of order");
        }
        const std::uint64_t blob_len = r.u64le();
        const auto blob = r.take(blob_len);
        try {
            store.emplace(h, std::make_shared<const Tensor>(tensor_from_bytes(blob)));
        } catch (const Error& e) {
            throw FormatError(std::string("state: bad tensor payload: ") + e.what());
        }
    }
    r.expect_done();

    try {
        return from_parts(std::move(owner), std::move(adds), std::move(removes),
                          VersionVector(std::move(vv_entries)), std::move(store));
    } catch (const StateError& e) {
        throw FormatError(std::string("state: ") + e.what());
    }
}

std::string MergeState::describe() const {
    return "state[owner=" + owner_.str() + " adds=" + std::to_string(adds_.size()) +
           " removes=" + std::to_string(removes_.size()) +
           " visible=" + std::to_string(visible_count()) + " root=" + root_.hex().substr(0, 12) +
           "]";
}

MergeState merge(const MergeState& a, const MergeState& b) {
    MergeState out = a;
    out.merge_in(b);
    return out;
}

Tensor resolve(const MergeState& state, const StrategySpec& spec) {
    validate(spec);
    const auto vis = state.visible();
    if (vis.empty()) {
        throw StateError("resolve: no visible contributions");
    }
    std::vector<Tensor> ordered;
    ordered.reserve(vis.size());
    for (const auto& c : vis) {
        ordered.push_back(*c.tensor);
    }
    return apply_n(spec, ordered, derive_seed(state.root()));
}

} // namespace crdtmerge
