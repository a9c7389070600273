#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crdtmerge {

/// Dense row-major tensor of IEEE-754 binary64 values. Immutable after
/// construction. Construction rejects empty shapes, zero-sized dimensions,
/// element-count mismatches and non-finite values.
class Tensor {
public:
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> shape);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }

    /// Read access to the payload. Every call adds the payload's byte count
    /// to a process-wide counter; the replication layer uses that counter to
    /// demonstrate that merging metadata never touches tensor contents.
    std::span<const double> values() const noexcept;

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

    /// Bitwise equality: identical shape and identical bit patterns for
    /// every element (distinguishes -0.0 from 0.0).
    bool operator==(const Tensor& other) const noexcept;

    /// Short human-readable summary, e.g. "tensor[4x4]".
    std::string describe() const;

    /// Process-wide count of payload bytes handed out through values().
    static std::uint64_t payload_bytes_read() noexcept;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

/// Canonical wire encoding: magic "CMT1", u32 LE rank, u64 LE dimensions,
/// then each element's binary64 bit pattern as u64 LE in row-major order.
std::vector<std::uint8_t> canonical_bytes(const Tensor& t);

/// Inverse of canonical_bytes. Throws FormatError for structural problems
/// (bad magic, truncation, trailing bytes, zero rank or dimension) and
/// ValueError when the payload contains non-finite values.
Tensor tensor_from_bytes(std::span<const std::uint8_t> bytes);

/// Largest elementwise absolute difference. Throws ShapeError when shapes
/// differ. Compares numerically, so 0.0 and -0.0 are equal.
double max_abs_diff(const Tensor& a, const Tensor& b);

/// True when max_abs_diff(a, b) <= atol.
bool allclose(const Tensor& a, const Tensor& b, double atol);

} // namespace crdtmerge
