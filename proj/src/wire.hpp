#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "crdtmerge/errors.hpp"

// Little-endian primitive encoding shared by the tensor and state wire
// formats, plus a bounds-checked reader.

namespace crdtmerge::wire {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

inline void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

inline void put_f64le(std::vector<std::uint8_t>& out, double d) {
    put_u64le(out, std::bit_cast<std::uint64_t>(d));
}

inline void put_bytes(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> bytes) {
    out.insert(out.end(), bytes.begin(), bytes.end());
}

inline void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32le(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::string context)
        : bytes_(bytes), context_(std::move(context)) {}

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    bool done() const noexcept { return pos_ == bytes_.size(); }

    std::span<const std::uint8_t> take(std::size_t n) {
        if (remaining() < n) {
            throw FormatError(context_ + ": truncated input");
        }
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::uint32_t u32le() {
        auto b = take(4);
        return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
               static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
    }

    std::uint64_t u64le() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) {
            v = v << 8 | b[static_cast<std::size_t>(i)];
        }
        return v;
    }

    double f64le() { return std::bit_cast<double>(u64le()); }

    std::string string32() {
        const std::uint32_t len = u32le();
        auto b = take(len);
        return std::string(b.begin(), b.end());
    }

    void expect_magic(const char (&magic)[5]) {
        auto b = take(4);
        for (int i = 0; i < 4; ++i) {
            if (b[static_cast<std::size_t>(i)] != static_cast<std::uint8_t>(magic[i])) {
                throw FormatError(context_ + ": bad magic");
            }
        }
    }

    void expect_done() {
        if (!done()) {
            throw FormatError(context_ + ": trailing bytes after payload");
        }
    }

    const std::string& context() const noexcept { return context_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::string context_;
    std::size_t pos_ = 0;
};

} // namespace crdtmerge::wire
