#include "crdtmerge/audit.hpp"

#include <algorithm>
#include <optional>

#include "crdtmerge/errors.hpp"
#include "crdtmerge/hash.hpp"
#include "crdtmerge/rng.hpp"
#include "crdtmerge/state.hpp"

namespace crdtmerge {

namespace {

void validate_config(const AuditConfig& cfg) {
    if (cfg.trials < 1) {
        throw ValueError("audit: trials must be positive");
    }
    if (cfg.repetitions < 1) {
        throw ValueError("audit: repetitions must be positive");
    }
    if (!(cfg.atol >= 0.0)) {
        throw ValueError("audit: atol must be non-negative");
    }
}

std::vector<std::string> resolve_ids(const AuditConfig& cfg) {
    if (cfg.strategies.empty()) {
        return StrategyRegistry::instance().ids();
    }
    for (const auto& id : cfg.strategies) {
        (void)StrategyRegistry::instance().get(id);  // throws on unknown ids
    }
    return cfg.strategies;
}

// Fixed triples on which associativity visibly breaks; checked on top of
// the random trials for the strategies they were written for.
struct NamedTriple {
    const char* strategy;
    std::array<double, 3> a, b, c;
};

constexpr NamedTriple kAssociativityTriples[] = {
    {"slerp", {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}},
    {"ties", {10.0, 1.0, 0.1}, {0.1, 10.0, 1.0}, {1.0, 0.1, 10.0}},
};

Tensor triple_tensor(const std::array<double, 3>& v) {
    return Tensor({3}, {v[0], v[1], v[2]});
}

struct LawTally {
    bool pass = true;
    double worst = 0.0;

    void fold(const CheckResult& r) {
        pass = pass && r.pass;
        worst = std::max(worst, r.violation);
    }
};

Verdict to_verdict(bool pass) {
    return pass ? Verdict::pass : Verdict::fail;
}

MergeState random_state(SplitMix64& gen, const std::vector<std::size_t>& shape,
                        const NodeId& owner) {
    MergeState s(owner);
    const auto n_adds = 1 + gen.next_below(3);
    for (std::uint64_t k = 0; k < n_adds; ++k) {
        Tensor t = random_uniform_tensor(gen, shape);
        const Hash256 h = content_hash(t);
        s.add(std::move(t));
        if (gen.next_bernoulli(0.3)) {
            s.remove(h);
        }
    }
    if (s.visible_count() == 0) {
        s.add(random_uniform_tensor(gen, shape));
    }
    return s;
}

// Bitwise equality plus state-metadata equality for one merged pair.
CheckResult state_pair_check(const MergeState& left, const MergeState& right,
                             const StrategySpec& spec) {
    const Tensor rl = resolve(left, spec);
    const Tensor rr = resolve(right, spec);
    const bool ok = left.same_state(right) && content_hash(rl) == content_hash(rr);
    return {ok, max_abs_diff(rl, rr)};
}

} // namespace

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::not_applicable: return "n/a";
    }
    return "n/a";
}

char verdict_letter(Verdict v) {
    switch (v) {
        case Verdict::pass: return 'P';
        case Verdict::fail: return 'F';
        case Verdict::not_applicable: return '-';
    }
    return '-';
}

bool PropertyVerdict::crdt_compliant() const {
    for (Verdict v : {commutativity, associativity, idempotency, convergence}) {
        if (v == Verdict::fail) {
            return false;
        }
    }
    return true;
}

CheckResult check_commutativity(const StrategySpec& spec, const Tensor& a, const Tensor& b,
                                double atol, const RngMode& mode) {
    const Tensor ab = apply_pair_raw(spec, a, b, mode);
    const Tensor ba = apply_pair_raw(spec, b, a, mode);
    const double violation = max_abs_diff(ab, ba);
    return {violation <= atol, violation};
}

CheckResult check_associativity(const StrategySpec& spec, const Tensor& a, const Tensor& b,
                                const Tensor& c, double atol, const RngMode& mode) {
    const Tensor left = apply_pair_raw(spec, apply_pair_raw(spec, a, b, mode), c, mode);
    const Tensor right = apply_pair_raw(spec, a, apply_pair_raw(spec, b, c, mode), mode);
    const double violation = max_abs_diff(left, right);
    return {violation <= atol, violation};
}

CheckResult check_idempotency(const StrategySpec& spec, const Tensor& a, double atol,
                              const RngMode& mode) {
    const Tensor aa = apply_pair_raw(spec, a, a, mode);
    const double violation = max_abs_diff(aa, a);
    return {violation <= atol, violation};
}

std::vector<PropertyVerdict> run_phase1(const AuditConfig& cfg) {
    validate_config(cfg);
    const auto ids = resolve_ids(cfg);
    std::vector<PropertyVerdict> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const StrategySpec spec{id, cfg.params};
        const auto& kernel = StrategyRegistry::instance().get(id);
        const int reps = kernel.stochastic ? cfg.repetitions : 1;
        const auto mode = RngMode::unseeded();

        LawTally comm, assoc, idem;
        int tuples = 0;
        for (int rep = 0; rep < reps; ++rep) {
            // identical inputs every repetition; only the kernels' own
            // entropy differs
            SplitMix64 gen(derive_subseed(cfg.seed, id));
            int count = 0;
            for (int trial = 0; trial < cfg.trials; ++trial) {
                const Tensor a = random_uniform_tensor(gen, cfg.shape);
                const Tensor b = random_uniform_tensor(gen, cfg.shape);
                const Tensor c = random_uniform_tensor(gen, cfg.shape);
                comm.fold(check_commutativity(spec, a, b, cfg.atol, mode));
                assoc.fold(check_associativity(spec, a, b, c, cfg.atol, mode));
                idem.fold(check_idempotency(spec, a, cfg.atol, mode));
                ++count;
            }
            for (const auto& triple : kAssociativityTriples) {
                if (id == triple.strategy) {
                    assoc.fold(check_associativity(spec, triple_tensor(triple.a),
                                                   triple_tensor(triple.b),
                                                   triple_tensor(triple.c), cfg.atol, mode));
                    ++count;
                }
            }
            tuples = count;
        }

        PropertyVerdict v;
        v.strategy = id;
        v.commutativity = to_verdict(comm.pass);
        v.associativity = to_verdict(assoc.pass);
        v.idempotency = to_verdict(idem.pass);
        v.convergence = Verdict::not_applicable;
        v.trials = tuples;
        v.max_violation = std::max({comm.worst, assoc.worst, idem.worst});
        v.atol = cfg.atol;
        out.push_back(std::move(v));
    }
    return out;
}

CheckResult check_replica_convergence(const StrategySpec& spec,
                                      std::span<const Tensor> contributions, double atol) {
    if (contributions.size() != 3) {
        throw ValueError("check_replica_convergence: expects exactly 3 contributions");
    }
    std::vector<MergeState> replicas;
    for (std::size_t i = 0; i < 3; ++i) {
        MergeState s(NodeId("r" + std::to_string(i + 1)));
        s.add(contributions[i]);
        replicas.push_back(std::move(s));
    }
    static constexpr int kPerms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                         {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    std::optional<Tensor> first;
    Hash256 first_hash;
    bool bitwise = true;
    double violation = 0.0;
    for (const auto& perm : kPerms) {
        const MergeState merged_state =
            merge(merge(replicas[perm[0]], replicas[perm[1]]), replicas[perm[2]]);
        Tensor r = resolve(merged_state, spec);
        const Hash256 h = content_hash(r);
        if (!first) {
            first = std::move(r);
            first_hash = h;
        } else {
            bitwise = bitwise && h == first_hash;
            violation = std::max(violation, max_abs_diff(r, *first));
        }
    }
    const bool pass = violation <= atol && (atol > 0.0 || bitwise);
    return {pass, violation};
}

std::vector<PropertyVerdict> run_phase2(const AuditConfig& cfg) {
    validate_config(cfg);
    const auto ids = resolve_ids(cfg);
    std::vector<PropertyVerdict> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        const StrategySpec spec{id, cfg.params};
        SplitMix64 gen(derive_subseed(cfg.seed, "phase2:" + id));
        const NodeId n1("p1"), n2("p2"), n3("p3");

        LawTally comm, assoc, idem, conv;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            const MergeState s1 = random_state(gen, cfg.shape, n1);
            const MergeState s2 = random_state(gen, cfg.shape, n2);
            const MergeState s3 = random_state(gen, cfg.shape, n3);

            comm.fold(state_pair_check(merge(s1, s2), merge(s2, s1), spec));
            assoc.fold(state_pair_check(merge(merge(s1, s2), s3), merge(s1, merge(s2, s3)), spec));
            idem.fold(state_pair_check(merge(s1, s1), s1, spec));

            const Tensor contributions[3] = {random_uniform_tensor(gen, cfg.shape),
                                             random_uniform_tensor(gen, cfg.shape),
                                             random_uniform_tensor(gen, cfg.shape)};
            conv.fold(check_replica_convergence(spec, contributions, 0.0));
        }

        PropertyVerdict v;
        v.strategy = id;
        v.commutativity = to_verdict(comm.pass);
        v.associativity = to_verdict(assoc.pass);
        v.idempotency = to_verdict(idem.pass);
        v.convergence = to_verdict(conv.pass);
        v.trials = cfg.trials;
        v.max_violation = std::max({comm.worst, assoc.worst, idem.worst, conv.worst});
        v.atol = 0.0;
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace crdtmerge
