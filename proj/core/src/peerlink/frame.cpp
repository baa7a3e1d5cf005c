#include "qnet/peerlink/frame.hpp"

#include "qnet/common/error.hpp"

namespace qnet::peerlink {

std::string_view to_string(PeerOp op) {
    switch (op) {
        case PeerOp::Hello: return "HELLO";
        case PeerOp::ApplyGate: return "APPLY_GATE";
        case PeerOp::ApplyTwo: return "APPLY_TWO";
        case PeerOp::Measure: return "MEASURE";
        case PeerOp::Remove: return "REMOVE";
        case PeerOp::MergePull: return "MERGE_PULL";
        case PeerOp::XferQubit: return "XFER_QUBIT";
        case PeerOp::EprOffer: return "EPR_OFFER";
        case PeerOp::LockAcq: return "LOCK_ACQ";
        case PeerOp::LockRel: return "LOCK_REL";
        case PeerOp::GetTime: return "GET_TIME";
        case PeerOp::NodeStateDump: return "NODE_STATE_DUMP";
        case PeerOp::Remap: return "REMAP";
    }
    return "?";
}

namespace {

PeerMessage decode_header_and_body(ByteReader& r, std::size_t body_len) {
    PeerMessage msg;
    msg.request_id = r.u64();
    auto kind = r.u8();
    auto op = r.u8();
    if (kind > 1) fail(ErrorCode::Protocol, "unknown frame kind " + std::to_string(kind));
    if (op > kMaxPeerOp) fail(ErrorCode::Protocol, "unknown peer op " + std::to_string(op));
    msg.kind = static_cast<FrameKind>(kind);
    msg.op = static_cast<PeerOp>(op);
    auto body = r.raw(body_len);
    msg.body.assign(body.begin(), body.end());
    return msg;
}

std::uint32_t checked_length(std::uint32_t len) {
    if (len < kFrameHeaderSize) fail(ErrorCode::Protocol, "frame length " + std::to_string(len) + " below header size");
    if (len > kMaxFrameLength) fail(ErrorCode::Protocol, "frame length " + std::to_string(len) + " exceeds limit");
    return len;
}

}  // namespace

Bytes frame_encode(const PeerMessage& msg) {
    if (msg.body.size() + kFrameHeaderSize > kMaxFrameLength) fail(ErrorCode::Protocol, "frame body too large");
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(kFrameHeaderSize + msg.body.size()))
        .u64(msg.request_id)
        .u8(static_cast<std::uint8_t>(msg.kind))
        .u8(static_cast<std::uint8_t>(msg.op))
        .raw(msg.body);
    return w.take();
}

PeerMessage frame_decode(std::span<const std::uint8_t> frame) {
    ByteReader r(frame);
    auto len = checked_length(r.u32());
    if (r.remaining() != len) {
        fail(ErrorCode::Protocol, "declared frame length " + std::to_string(len) + " but " +
                                      std::to_string(r.remaining()) + " bytes follow");
    }
    return decode_header_and_body(r, len - kFrameHeaderSize);
}

void FrameAssembler::feed(std::span<const std::uint8_t> data) {
    if (start_ > 0 && start_ >= buf_.size() / 2) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(start_));
        start_ = 0;
    }
    buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<PeerMessage> FrameAssembler::next() {
    if (buffered() < kFramePrefixSize) return std::nullopt;
    std::span<const std::uint8_t> view(buf_.data() + start_, buffered());
    ByteReader r(view);
    auto len = checked_length(r.u32());
    if (r.remaining() < len) return std::nullopt;
    auto msg = decode_header_and_body(r, len - kFrameHeaderSize);
    start_ += kFramePrefixSize + len;
    return msg;
}

}  // namespace qnet::peerlink
