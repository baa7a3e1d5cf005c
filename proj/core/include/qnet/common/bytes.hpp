#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qnet/common/error.hpp"

namespace qnet {

using Bytes = std::vector<std::uint8_t>;

/// Appends big-endian fields to a growing buffer.
class ByteWriter {
public:
    ByteWriter() = default;
    explicit ByteWriter(Bytes initial) : buf_(std::move(initial)) {}

    ByteWriter& u8(std::uint8_t v) {
        buf_.push_back(v);
        return *this;
    }
    ByteWriter& u16(std::uint16_t v) { return be(v, 2); }
    ByteWriter& u32(std::uint32_t v) { return be(v, 4); }
    ByteWriter& u64(std::uint64_t v) { return be(v, 8); }
    ByteWriter& f64(double v);
    ByteWriter& str(std::string_view s);  // u16 length prefix
    ByteWriter& raw(std::span<const std::uint8_t> data) {
        buf_.insert(buf_.end(), data.begin(), data.end());
        return *this;
    }

    std::size_t size() const { return buf_.size(); }
    Bytes& bytes() { return buf_; }
    Bytes take() { return std::move(buf_); }

    /// Overwrites a previously reserved big-endian u32 at `offset`.
    void patch_u32(std::size_t offset, std::uint32_t v);

private:
    ByteWriter& be(std::uint64_t v, int width) {
        for (int i = width - 1; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        return *this;
    }

    Bytes buf_;
};

/// Bounds-checked big-endian reader; overruns throw ErrorCode::Protocol.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
    std::uint64_t u64() { return be(8); }
    double f64();
    std::string str();
    std::span<const std::uint8_t> raw(std::size_t n);

    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t position() const { return pos_; }
    bool done() const { return pos_ == data_.size(); }
    void expect_done(std::string_view what) const;

private:
    std::uint64_t be(std::size_t width);
    void need(std::size_t n) const;

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);  // whitespace tolerant

}  // namespace qnet
