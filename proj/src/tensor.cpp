#include "crdtmerge/tensor.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "crdtmerge/errors.hpp"
#include "wire.hpp"

namespace crdtmerge {

namespace {

std::atomic<std::uint64_t> g_payload_bytes_read{0};

std::size_t checked_element_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
        throw ShapeError("tensor shape must have at least one dimension");
    }
    std::size_t total = 1;
    for (std::size_t dim : shape) {
        if (dim == 0) {
            throw ShapeError("tensor dimensions must be positive");
        }
        if (total > std::numeric_limits<std::size_t>::max() / dim) {
            throw ShapeError("tensor element count overflows");
        }
        total *= dim;
    }
    return total;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    const std::size_t expected = checked_element_count(shape_);
    if (values_.size() != expected) {
        throw ShapeError("tensor value count does not match shape");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw ValueError("tensor values must be finite");
        }
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    const std::size_t count = checked_element_count(shape);
    return Tensor(std::move(shape), std::vector<double>(count, 0.0));
}

std::span<const double> Tensor::values() const noexcept {
    g_payload_bytes_read.fetch_add(values_.size() * sizeof(double),
                                   std::memory_order_relaxed);
    return values_;
}

bool Tensor::operator==(const Tensor& other) const noexcept {
    if (shape_ != other.shape_) {
        return false;
    }
    const auto a = values();
    const auto b = other.values();
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string Tensor::describe() const {
    std::string out = "tensor[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i > 0) {
            out += 'x';
        }
        out += std::to_string(shape_[i]);
    }
    out += ']';
    return out;
}

std::uint64_t Tensor::payload_bytes_read() noexcept {
    return g_payload_bytes_read.load(std::memory_order_relaxed);
}

std::vector<std::uint8_t> canonical_bytes(const Tensor& t) {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 4 + 8 * t.shape().size() + 8 * t.size());
    static constexpr std::uint8_t kMagic[4] = {'C', 'M', 'T', '1'};
    wire::put_bytes(out, kMagic);
    wire::put_u32le(out, static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t dim : t.shape()) {
        wire::put_u64le(out, static_cast<std::uint64_t>(dim));
    }
    for (double v : t.values()) {
        wire::put_f64le(out, v);
    }
    return out;
}

Tensor tensor_from_bytes(std::span<const std::uint8_t> bytes) {
    wire::Reader r(bytes, "tensor");
    r.expect_magic("CMT1");
    const std::uint32_t rank = r.u32le();
    if (rank == 0) {
        throw FormatError("tensor: rank must be positive");
    }
    std::vector<std::size_t> shape;
    shape.reserve(rank);
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint64_t dim = r.u64le();
        if (dim == 0) {
            throw FormatError("tensor: dimensions must be positive");
        }
        if (dim > std::numeric_limits<std::size_t>::max()) {
            throw FormatError("tensor: dimension too large");
        }
        shape.push_back(static_cast<std::size_t>(dim));
    }
    std::size_t count = 1;
    for (std::size_t dim : shape) {
        if (count > std::numeric_limits<std::size_t>::max() / dim) {
            throw FormatError("tensor: element count overflows");
        }
        count *= dim;
    }
    if (r.remaining() != count * 8) {
        throw FormatError(r.remaining() < count * 8 ? "tensor: truncated input"
                                                    : "tensor: trailing bytes after payload");
    }
    std::vector<double> values;
    values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        values.push_back(r.f64le());
    }
    return Tensor(std::move(shape), std::move(values));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("max_abs_diff: shapes differ");
    }
    const auto va = a.values();
    const auto vb = b.values();
    double worst = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        worst = std::max(worst, std::fabs(va[i] - vb[i]));
    }
    return worst;
}

bool allclose(const Tensor& a, const Tensor& b, double atol) {
    return max_abs_diff(a, b) <= atol;
}

} // namespace crdtmerge
