#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "qnet/common/bytes.hpp"

namespace qnet::peerlink {

enum class FrameKind : std::uint8_t { Request = 0, Response = 1 };

enum class PeerOp : std::uint8_t {
    Hello = 0,
    ApplyGate = 1,
    ApplyTwo = 2,
    Measure = 3,
    Remove = 4,
    MergePull = 5,
    XferQubit = 6,
    EprOffer = 7,
    LockAcq = 8,
    LockRel = 9,
    GetTime = 10,
    NodeStateDump = 11,
    Remap = 12,
};
inline constexpr std::uint8_t kMaxPeerOp = 12;

std::string_view to_string(PeerOp op);

struct PeerMessage {
    std::uint64_t request_id = 0;
    FrameKind kind = FrameKind::Request;
    PeerOp op = PeerOp::Hello;
    Bytes body;

    friend bool operator==(const PeerMessage&, const PeerMessage&) = default;
};

/// Bytes covered by the length prefix: request_id(8) + kind(1) + op(1).
inline constexpr std::size_t kFrameHeaderSize = 10;
inline constexpr std::size_t kFramePrefixSize = 4;
inline constexpr std::uint32_t kMaxFrameLength = 64u << 20;

/// [u32 BE length][u64 request_id][u8 kind][u8 op][body]; length counts everything after itself.
Bytes frame_encode(const PeerMessage& msg);
/// Decodes exactly one whole frame. Throws ErrorCode::Protocol on truncation,
/// overlong input, or unknown kind/op.
PeerMessage frame_decode(std::span<const std::uint8_t> frame);

/// Incremental decoder for a byte stream carrying back-to-back frames.
class FrameAssembler {
public:
    void feed(std::span<const std::uint8_t> data);
    /// Next complete frame, if any. Throws ErrorCode::Protocol on a bad header.
    std::optional<PeerMessage> next();
    std::size_t buffered() const { return buf_.size() - start_; }

private:
    Bytes buf_;
    std::size_t start_ = 0;
};

}  // namespace qnet::peerlink
