#include "qnet/common/bytes.hpp"

#include <bit>
#include <cctype>

namespace qnet {

ByteWriter& ByteWriter::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

ByteWriter& ByteWriter::str(std::string_view s) {
    if (s.size() > 0xFFFF) fail(ErrorCode::Protocol, "string too long for u16 length prefix");
    u16(static_cast<std::uint16_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
    return *this;
}

void ByteWriter::patch_u32(std::size_t offset, std::uint32_t v) {
    if (offset + 4 > buf_.size()) fail(ErrorCode::Internal, "patch_u32 out of range");
    for (int i = 0; i < 4; ++i) buf_[offset + i] = static_cast<std::uint8_t>(v >> (8 * (3 - i)));
}

void ByteReader::need(std::size_t n) const {
    if (n > remaining()) {
        fail(ErrorCode::Protocol, "truncated input: need " + std::to_string(n) + " bytes, have " +
                                      std::to_string(remaining()));
    }
}

std::uint64_t ByteReader::be(std::size_t width) {
    need(width);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | data_[pos_ + i];
    pos_ += width;
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
    auto n = u16();
    auto bytes = raw(n);
    return {bytes.begin(), bytes.end()};
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

void ByteReader::expect_done(std::string_view what) const {
    if (!done()) {
        fail(ErrorCode::Protocol, std::string(what) + ": " + std::to_string(remaining()) + " trailing bytes");
    }
}

std::string to_hex(std::span<const std::uint8_t> data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    Bytes out;
    int hi = -1;
    for (char c : hex) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else fail(ErrorCode::Config, std::string("bad hex digit '") + c + "'");
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
            hi = -1;
        }
    }
    if (hi >= 0) fail(ErrorCode::Config, "odd number of hex digits");
    return out;
}

}  // namespace qnet
