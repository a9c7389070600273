#include "crdtmerge/strategy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "crdtmerge/errors.hpp"
#include "crdtmerge/hash.hpp"
#include "crdtmerge/rng.hpp"

namespace crdtmerge {

namespace {

// Magnitude trims keep the fraction of largest-entry components given by
// keep_frac: drop ceil((1 - keep_frac) * p) entries, never all of them.
std::size_t trim_drop_count(std::size_t p, double keep_frac) {
    const auto drop =
        static_cast<std::size_t>(std::ceil((1.0 - keep_frac) * static_cast<double>(p)));
    return std::min(drop, p - 1);
}

// Indices ordered by |v| descending; equal magnitudes keep ascending index
// order, so lower flat indices win the keep.
std::vector<std::size_t> magnitude_ranking(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return std::fabs(v[a]) > std::fabs(v[b]); });
    return idx;
}

std::vector<double> trim_small(std::span<const double> v, double keep_frac) {
    const std::size_t drop = trim_drop_count(v.size(), keep_frac);
    const auto idx = magnitude_ranking(v);
    std::vector<double> kept(v.begin(), v.end());
    for (std::size_t r = v.size() - drop; r < v.size(); ++r) {
        kept[idx[r]] = 0.0;
    }
    return kept;
}

int sign_of(double v) {
    return (v > 0.0) - (v < 0.0);
}

// Per component: elect the sign with the larger count-weighted vote (sum of
// entry signs), then average the entries of that sign over all n inputs. A
// tied vote yields zero.
std::vector<double> elect_and_average(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.size();
    const std::size_t p = rows.front().size();
    std::vector<double> out(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        int vote = 0;
        for (const auto& row : rows) {
            vote += sign_of(row[j]);
        }
        if (vote == 0) {
            continue;
        }
        const int elected = vote > 0 ? 1 : -1;
        double sum = 0.0;
        for (const auto& row : rows) {
            if (sign_of(row[j]) == elected) {
                sum += row[j];
            }
        }
        out[j] = sum / static_cast<double>(n);
    }
    return out;
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

const Tensor* base_of(const StrategyParams& params) {
    return params.base ? &*params.base : nullptr;
}

// Deltas against the base (or the raw values when no base is set).
std::vector<std::vector<double>> deltas(std::span<const Tensor> xs, const Tensor* base) {
    std::vector<std::vector<double>> out;
    out.reserve(xs.size());
    for (const auto& x : xs) {
        const auto v = x.values();
        std::vector<double> row(v.begin(), v.end());
        if (base) {
            const auto b = base->values();
            for (std::size_t j = 0; j < row.size(); ++j) {
                row[j] -= b[j];
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

Tensor from_deltas(const std::vector<std::size_t>& shape, std::vector<double> merged,
                   const Tensor* base) {
    if (base) {
        const auto b = base->values();
        for (std::size_t j = 0; j < merged.size(); ++j) {
            merged[j] += b[j];
        }
    }
    return Tensor(shape, std::move(merged));
}

Tensor k_weight_average(std::span<const Tensor> xs, const StrategyParams&, std::uint64_t) {
    const std::size_t n = xs.size();
    const std::size_t p = xs.front().size();
    std::vector<std::span<const double>> vs;
    vs.reserve(n);
    for (const auto& x : xs) {
        vs.push_back(x.values());
    }
    std::vector<double> out(p);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += vs[i][j];
        }
        out[j] = s / static_cast<double>(n);
    }
    return Tensor(xs.front().shape(), std::move(out));
}

Tensor k_linear_pair(const Tensor& a, const Tensor& b, const StrategyParams& params,
                     std::uint64_t) {
    const double w = params.linear_w;
    const auto va = a.values();
    const auto vb = b.values();
    std::vector<double> out(va.size());
    for (std::size_t j = 0; j < va.size(); ++j) {
        out[j] = (1.0 - w) * va[j] + w * vb[j];
    }
    return Tensor(a.shape(), std::move(out));
}

Tensor k_task_arithmetic(std::span<const Tensor> xs, const StrategyParams& params,
                         std::uint64_t) {
    const Tensor* base = base_of(params);
    const auto rows = deltas(xs, base);
    const std::size_t p = rows.front().size();
    std::vector<double> merged(p);
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (const auto& row : rows) {
            s += row[j];
        }
        merged[j] = params.lambda * s;
    }
    return from_deltas(xs.front().shape(), std::move(merged), base);
}

Tensor k_ties(std::span<const Tensor> xs, const StrategyParams& params, std::uint64_t) {
    const Tensor* base = base_of(params);
    auto rows = deltas(xs, base);
    for (auto& row : rows) {
        row = trim_small(row, params.keep_frac);
    }
    return from_deltas(xs.front().shape(), elect_and_average(rows), base);
}

Tensor k_dare(std::span<const Tensor> xs, const StrategyParams& params, std::uint64_t seed) {
    const Tensor* base = base_of(params);
    const auto rows = deltas(xs, base);
    const std::size_t n = rows.size();
    const std::size_t p = rows.front().size();
    SplitMix64 gen(seed);
    const double keep_p = 1.0 - params.drop_p;
    std::vector<char> mask(p);
    for (std::size_t j = 0; j < p; ++j) {
        mask[j] = gen.next_bernoulli(keep_p) ? 1 : 0;
    }
    const double scale = 1.0 / keep_p;
    std::vector<double> merged(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        if (!mask[j]) {
            continue;
        }
        double s = 0.0;
        for (const auto& row : rows) {
            s += row[j];
        }
        merged[j] = s * scale / static_cast<double>(n);
    }
    return from_deltas(xs.front().shape(), std::move(merged), base);
}

Tensor k_dare_ties(std::span<const Tensor> xs, const StrategyParams& params,
                   std::uint64_t seed) {
    const Tensor* base = base_of(params);
    auto rows = deltas(xs, base);
    const std::size_t p = rows.front().size();
    SplitMix64 gen(seed);
    const double keep_p = 1.0 - params.drop_p;
    std::vector<char> mask(p);
    for (std::size_t j = 0; j < p; ++j) {
        mask[j] = gen.next_bernoulli(keep_p) ? 1 : 0;
    }
    const double scale = 1.0 / keep_p;
    for (auto& row : rows) {
        for (std::size_t j = 0; j < p; ++j) {
            row[j] = mask[j] ? row[j] * scale : 0.0;
        }
        row = trim_small(row, params.keep_frac);
    }
    return from_deltas(xs.front().shape(), elect_and_average(rows), base);
}

Tensor k_slerp_pair(const Tensor& A, const Tensor& B, const StrategyParams& params,
                    std::uint64_t) {
    const double t = params.t;
    const auto a = A.values();
    const auto b = B.values();
    const std::size_t p = a.size();
    std::vector<double> out(p);

    const auto linear_mix = [&] {
        for (std::size_t j = 0; j < p; ++j) {
            out[j] = (1.0 - t) * a[j] + t * b[j];
        }
    };

    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        linear_mix();
        return Tensor(A.shape(), std::move(out));
    }
    std::vector<double> ua(p);
    std::vector<double> ub(p);
    double dot = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        ua[j] = a[j] / na;
        ub[j] = b[j] / nb;
    }
    for (std::size_t j = 0; j < p; ++j) {
        dot += ua[j] * ub[j];
    }
    dot = std::clamp(dot, -1.0, 1.0);
    const double omega = std::acos(dot);

    // (nearly) parallel or antipodal directions have no unique great
    // circle; interpolate linearly there
    constexpr double kAngleEps = 1e-7;
    if (omega < kAngleEps || omega > std::numbers::pi - kAngleEps) {
        linear_mix();
        return Tensor(A.shape(), std::move(out));
    }
    const double s = std::sin(omega);
    const double ca = std::sin((1.0 - t) * omega) / s;
    const double cb = std::sin(t * omega) / s;
    const double norm = (1.0 - t) * na + t * nb;
    for (std::size_t j = 0; j < p; ++j) {
        out[j] = norm * (ca * ua[j] + cb * ub[j]);
    }
    return Tensor(A.shape(), std::move(out));
}

Tensor k_fisher(std::span<const Tensor> xs, const StrategyParams&, std::uint64_t) {
    // diagonal curvature proxy: squared value plus a tiny floor so the
    // denominator never vanishes
    constexpr double kCurvatureFloor = 1e-12;
    const std::size_t n = xs.size();
    const std::size_t p = xs.front().size();
    std::vector<std::span<const double>> vs;
    vs.reserve(n);
    for (const auto& x : xs) {
        vs.push_back(x.values());
    }
    std::vector<double> out(p);
    for (std::size_t j = 0; j < p; ++j) {
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = vs[i][j];
            const double f = v * v + kCurvatureFloor;
            num += f * v;
            den += f;
        }
        out[j] = num / den;
    }
    return Tensor(xs.front().shape(), std::move(out));
}

Tensor k_breadcrumbs(std::span<const Tensor> xs, const StrategyParams& params, std::uint64_t) {
    // drops both tails of each input's magnitude distribution: the largest
    // kOutlierFrac of entries and the smallest (1 - keep_frac)
    constexpr double kOutlierFrac = 0.1;
    const Tensor* base = base_of(params);
    const auto rows = deltas(xs, base);
    const std::size_t n = rows.size();
    const std::size_t p = rows.front().size();
    const std::size_t drop = trim_drop_count(p, params.keep_frac);
    auto outliers =
        static_cast<std::size_t>(std::ceil(kOutlierFrac * static_cast<double>(p)));
    if (outliers + drop >= p) {
        outliers = p - drop - 1;
    }
    std::vector<double> merged(p, 0.0);
    for (const auto& row : rows) {
        const auto idx = magnitude_ranking(row);
        std::vector<char> keep(p, 1);
        for (std::size_t r = 0; r < outliers; ++r) {
            keep[idx[r]] = 0;
        }
        for (std::size_t r = p - drop; r < p; ++r) {
            keep[idx[r]] = 0;
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (keep[j]) {
                merged[j] += row[j];
            }
        }
    }
    for (auto& v : merged) {
        v /= static_cast<double>(n);
    }
    return from_deltas(xs.front().shape(), std::move(merged), base);
}

Tensor k_evolutionary(std::span<const Tensor> xs, const StrategyParams& params,
                      std::uint64_t seed) {
    if (xs.size() == 1) {
        return xs.front();  // nothing to search over
    }
    const std::size_t n = xs.size();
    const std::size_t p = xs.front().size();
    std::vector<std::span<const double>> vs;
    vs.reserve(n);
    for (const auto& x : xs) {
        vs.push_back(x.values());
    }

    // target: the elementwise median of the inputs
    std::vector<double> target(p);
    std::vector<double> column(n);
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = vs[i][j];
        }
        std::sort(column.begin(), column.end());
        target[j] = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }

    // random search over scaled convex combinations, keeping the candidate
    // closest to the target
    SplitMix64 gen(seed);
    std::vector<double> weights(n);
    std::vector<double> candidate(p);
    std::vector<double> best;
    double best_fitness = -std::numeric_limits<double>::infinity();
    for (int g = 0; g < params.generations; ++g) {
        for (int m = 0; m < params.pop_size; ++m) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                weights[i] = gen.next_uniform();
                sum += weights[i];
            }
            if (sum == 0.0) {
                std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
            } else {
                for (auto& w : weights) {
                    w /= sum;
                }
            }
            const double scale = 0.5 + gen.next_uniform();
            for (std::size_t j = 0; j < p; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += weights[i] * vs[i][j];
                }
                candidate[j] = scale * acc;
            }
            double dist2 = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = candidate[j] - target[j];
                dist2 += d * d;
            }
            const double fitness = -std::sqrt(dist2);
            if (fitness > best_fitness) {
                best_fitness = fitness;
                best = candidate;
            }
        }
    }
    return Tensor(xs.front().shape(), std::move(best));
}

void check_homogeneous(const StrategySpec& spec, std::span<const Tensor> ordered) {
    if (ordered.empty()) {
        throw ValueError("strategy: empty input list");
    }
    for (const auto& t : ordered) {
        if (!t.same_shape(ordered.front())) {
            throw ShapeError("strategy: mixed input shapes");
        }
    }
    if (spec.params.base && !spec.params.base->same_shape(ordered.front())) {
        throw ShapeError("strategy: base shape does not match inputs");
    }
}

Tensor invoke_pair(const StrategyKernel& k, const StrategySpec& spec, const Tensor& a,
                   const Tensor& b, std::uint64_t seed) {
    if (k.pair) {
        return k.pair(a, b, spec.params, seed);
    }
    const std::vector<Tensor> two{a, b};
    return k.n_ary(two, spec.params, seed);
}

} // namespace

StrategyRegistry::StrategyRegistry() {
    kernels_["weight_average"] = {Arity::n_ary, false, k_weight_average, nullptr};
    kernels_["linear"] = {Arity::n_ary, false, k_weight_average, k_linear_pair};
    kernels_["task_arithmetic"] = {Arity::n_ary, false, k_task_arithmetic, nullptr};
    kernels_["ties"] = {Arity::n_ary, false, k_ties, nullptr};
    kernels_["dare"] = {Arity::n_ary, true, k_dare, nullptr};
    kernels_["dare_ties"] = {Arity::n_ary, true, k_dare_ties, nullptr};
    kernels_["slerp"] = {Arity::binary_fold, false, nullptr, k_slerp_pair};
    kernels_["fisher_merge"] = {Arity::n_ary, false, k_fisher, nullptr};
    kernels_["model_breadcrumbs"] = {Arity::n_ary, false, k_breadcrumbs, nullptr};
    kernels_["evolutionary_merge"] = {Arity::n_ary, true, k_evolutionary, nullptr};
}

StrategyRegistry& StrategyRegistry::instance() {
    static StrategyRegistry registry;
    return registry;
}

void StrategyRegistry::register_kernel(const std::string& id, StrategyKernel kernel) {
    if (kernels_.contains(id)) {
        throw StrategyError("strategy id already registered: " + id);
    }
    if (!kernel.n_ary && !kernel.pair) {
        throw StrategyError("strategy kernel needs a callable form: " + id);
    }
    kernels_.emplace(id, std::move(kernel));
}

bool StrategyRegistry::contains(const std::string& id) const {
    return kernels_.contains(id);
}

const StrategyKernel& StrategyRegistry::get(const std::string& id) const {
    const auto it = kernels_.find(id);
    if (it == kernels_.end()) {
        throw StrategyError("unknown strategy: " + id);
    }
    return it->second;
}

std::vector<std::string> StrategyRegistry::ids() const {
    std::vector<std::string> out;
    out.reserve(kernels_.size());
    for (const auto& [id, kernel] : kernels_) {
        out.push_back(id);
    }
    return out;  // map iteration is already sorted
}

void validate(const StrategySpec& spec) {
    (void)StrategyRegistry::instance().get(spec.id);
    const auto& p = spec.params;
    if (!std::isfinite(p.lambda)) throw StrategyError("lambda must be finite");
    if (!(p.t >= 0.0 && p.t <= 1.0)) throw StrategyError("t must lie in [0, 1]");
    if (!(p.drop_p >= 0.0 && p.drop_p < 1.0)) throw StrategyError("drop_p must lie in [0, 1)");
    if (!(p.keep_frac > 0.0 && p.keep_frac <= 1.0)) {
        throw StrategyError("keep_frac must lie in (0, 1]");
    }
    if (!(p.linear_w >= 0.0 && p.linear_w <= 1.0)) {
        throw StrategyError("linear_w must lie in [0, 1]");
    }
    if (p.pop_size < 1) throw StrategyError("pop_size must be positive");
    if (p.generations < 1) throw StrategyError("generations must be positive");
}

Tensor apply_n(const StrategySpec& spec, std::span<const Tensor> ordered, std::uint64_t seed) {
    validate(spec);
    check_homogeneous(spec, ordered);
    const auto& k = StrategyRegistry::instance().get(spec.id);
    if (k.arity == Arity::binary_fold || !k.n_ary) {
        return apply_fold(spec, ordered, seed);
    }
    return k.n_ary(ordered, spec.params, seed);
}

Tensor apply_pair_raw(const StrategySpec& spec, const Tensor& a, const Tensor& b,
                      const RngMode& mode) {
    validate(spec);
    if (!a.same_shape(b)) {
        throw ShapeError("strategy: mixed input shapes");
    }
    if (spec.params.base && !spec.params.base->same_shape(a)) {
        throw ShapeError("strategy: base shape does not match inputs");
    }
    const auto& k = StrategyRegistry::instance().get(spec.id);
    const std::uint64_t seed = (k.stochastic && !mode.seeded) ? entropy_seed() : mode.seed;
    return invoke_pair(k, spec, a, b, seed);
}

Tensor apply_fold(const StrategySpec& spec, std::span<const Tensor> ordered,
                  std::uint64_t seed) {
    validate(spec);
    check_homogeneous(spec, ordered);
    const auto& k = StrategyRegistry::instance().get(spec.id);
    Tensor acc = ordered.front();
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        acc = invoke_pair(k, spec, acc, ordered[i], fold_subseed(seed, i));
    }
    return acc;
}

std::uint64_t fold_subseed(std::uint64_t seed, std::uint64_t step) {
    std::array<std::uint8_t, 16> buf{};
    for (int i = 0; i < 8; ++i) {
        buf[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(seed >> (8 * (7 - i)));
        buf[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(step >> (8 * (7 - i)));
    }
    return derive_seed(sha256(buf));
}

} // namespace crdtmerge
