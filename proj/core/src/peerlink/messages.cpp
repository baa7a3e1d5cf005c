#include "qnet/peerlink/messages.hpp"

#include <cmath>

#include "qnet/engine/state_register.hpp"

namespace qnet::peerlink {
namespace {

engine::GateCode read_gate(ByteReader& r) {
    auto v = r.u8();
    if (v > static_cast<std::uint8_t>(engine::GateCode::CPhase)) {
        fail(ErrorCode::Protocol, "unknown gate code " + std::to_string(v));
    }
    return static_cast<engine::GateCode>(v);
}

void write_moved(ByteWriter& w, const MovedTo& m) { w.str(m.old_host).u64(m.old_sim).str(m.new_host).u64(m.new_sim); }

MovedTo read_moved(ByteReader& r) {
    MovedTo m;
    m.old_host = r.str();
    m.old_sim = r.u64();
    m.new_host = r.str();
    m.new_sim = r.u64();
    return m;
}

}  // namespace

Bytes PeerReply::encode() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(status));
    switch (status) {
        case ReplyStatus::Ok: w.raw(payload); break;
        case ReplyStatus::Moved: write_moved(w, moved); break;
        case ReplyStatus::Error: w.u8(static_cast<std::uint8_t>(error)).str(message.substr(0, 4096)); break;
    }
    return w.take();
}

PeerReply PeerReply::decode(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    auto status = r.u8();
    switch (status) {
        case 0: {
            auto rest = r.raw(r.remaining());
            return ok(Bytes(rest.begin(), rest.end()));
        }
        case 1: {
            auto m = read_moved(r);
            r.expect_done("moved reply");
            return forward(std::move(m));
        }
        case 2: {
            auto code = r.u8();
            if (code > static_cast<std::uint8_t>(ErrorCode::Internal)) fail(ErrorCode::Protocol, "unknown error code");
            auto msg = r.str();
            r.expect_done("error reply");
            return err(static_cast<ErrorCode>(code), std::move(msg));
        }
        default: fail(ErrorCode::Protocol, "unknown reply status " + std::to_string(status));
    }
}

void PeerReply::raise_if_error() const {
    if (status == ReplyStatus::Error) throw Error(error, message);
}

void write_entanglement(ByteWriter& w, const EntanglementId& e) {
    w.str(e.node_a).str(e.node_b).u32(e.sequence).u64(e.created_at);
}

EntanglementId read_entanglement(ByteReader& r) {
    EntanglementId e;
    e.node_a = r.str();
    e.node_b = r.str();
    e.sequence = r.u32();
    e.created_at = r.u64();
    return e;
}

Bytes encode(const ApplyGateReq& m) {
    return ByteWriter().u64(m.sim).u8(static_cast<std::uint8_t>(m.code)).u8(m.step).take();
}
Bytes encode(const ApplyTwoReq& m) {
    return ByteWriter().u64(m.control_sim).str(m.target_host).u64(m.target_sim).u8(static_cast<std::uint8_t>(m.code)).take();
}
Bytes encode(const MeasureReq& m) { return ByteWriter().u64(m.sim).u8(m.inplace ? 1 : 0).take(); }
Bytes encode(const MeasureResp& m) { return ByteWriter().u8(static_cast<std::uint8_t>(m.bit)).f64(m.probability).take(); }
Bytes encode(const SimReq& m) { return ByteWriter().u64(m.sim).take(); }
Bytes encode(const MergePullReq& m) { return ByteWriter().u64(m.txn).u64(m.sim).u64(m.new_base).take(); }
Bytes encode(const RegisterPayload& m) {
    ByteWriter w;
    w.u16(m.num_qubits);
    for (const auto& a : m.amplitudes) w.f64(a.real()).f64(a.imag());
    w.u16(static_cast<std::uint16_t>(m.qubits.size()));
    for (const auto& q : m.qubits) w.u64(q.sim).u16(q.position).u64(q.created_at);
    return w.take();
}
Bytes encode(const XferReq& m) {
    ByteWriter w;
    w.u16(m.dest_app).str(m.sim_host).u64(m.sim).u8(m.epr ? 1 : 0);
    if (m.epr) write_entanglement(w, m.entanglement);
    return w.take();
}
Bytes encode(const LockAcqReq& m) { return ByteWriter().u64(m.txn).u64(m.sim).take(); }
Bytes encode(const LockAcqResp& m) { return ByteWriter().u8(m.granted ? 1 : 0).u16(m.register_qubits).take(); }
Bytes encode(const LockRelReq& m) { return ByteWriter().u64(m.txn).take(); }
Bytes encode(const RemapReq& m) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(m.moves.size()));
    for (const auto& mv : m.moves) write_moved(w, mv);
    return w.take();
}

template <>
ApplyGateReq decode<ApplyGateReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    ApplyGateReq m;
    m.sim = r.u64();
    m.code = read_gate(r);
    m.step = r.u8();
    r.expect_done("APPLY_GATE");
    return m;
}

template <>
ApplyTwoReq decode<ApplyTwoReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    ApplyTwoReq m;
    m.control_sim = r.u64();
    m.target_host = r.str();
    m.target_sim = r.u64();
    m.code = read_gate(r);
    r.expect_done("APPLY_TWO");
    return m;
}

template <>
MeasureReq decode<MeasureReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    MeasureReq m;
    m.sim = r.u64();
    m.inplace = r.u8() != 0;
    r.expect_done("MEASURE");
    return m;
}

template <>
MeasureResp decode<MeasureResp>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    MeasureResp m;
    m.bit = r.u8();
    m.probability = r.f64();
    r.expect_done("MEASURE response");
    return m;
}

template <>
SimReq decode<SimReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    SimReq m{r.u64()};
    r.expect_done("sim request");
    return m;
}

template <>
MergePullReq decode<MergePullReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    MergePullReq m;
    m.txn = r.u64();
    m.sim = r.u64();
    m.new_base = r.u64();
    r.expect_done("MERGE_PULL");
    return m;
}

template <>
RegisterPayload decode<RegisterPayload>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    RegisterPayload m;
    m.num_qubits = r.u16();
    if (m.num_qubits > 40) fail(ErrorCode::Protocol, "register payload claims " + std::to_string(m.num_qubits) + " qubits");
    const std::size_t dim = std::size_t{1} << m.num_qubits;
    if (r.remaining() < dim * 16) fail(ErrorCode::Protocol, "register payload truncated");
    m.amplitudes.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        double re = r.f64();
        double im = r.f64();
        m.amplitudes.emplace_back(re, im);
    }
    double norm = 0;
    for (const auto& a : m.amplitudes) norm += std::norm(a);
    if (!(std::abs(norm - 1.0) <= engine::kNormTolerance)) fail(ErrorCode::Protocol, "register payload is not normalized");
    auto count = r.u16();
    for (std::uint16_t i = 0; i < count; ++i) {
        ShippedQubit q;
        q.sim = r.u64();
        q.position = r.u16();
        q.created_at = r.u64();
        m.qubits.push_back(q);
    }
    r.expect_done("register payload");
    return m;
}

template <>
XferReq decode<XferReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    XferReq m;
    m.dest_app = r.u16();
    m.sim_host = r.str();
    m.sim = r.u64();
    m.epr = r.u8() != 0;
    if (m.epr) m.entanglement = read_entanglement(r);
    r.expect_done("XFER_QUBIT");
    return m;
}

template <>
LockAcqReq decode<LockAcqReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    LockAcqReq m;
    m.txn = r.u64();
    m.sim = r.u64();
    r.expect_done("LOCK_ACQ");
    return m;
}

template <>
LockAcqResp decode<LockAcqResp>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    LockAcqResp m;
    m.granted = r.u8() != 0;
    m.register_qubits = r.u16();
    r.expect_done("LOCK_ACQ response");
    return m;
}

template <>
LockRelReq decode<LockRelReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    LockRelReq m{r.u64()};
    r.expect_done("LOCK_REL");
    return m;
}

template <>
RemapReq decode<RemapReq>(std::span<const std::uint8_t> body) {
    ByteReader r(body);
    RemapReq m;
    auto n = r.u32();
    if (n > r.remaining()) fail(ErrorCode::Protocol, "remap count exceeds body");
    for (std::uint32_t i = 0; i < n; ++i) m.moves.push_back(read_moved(r));
    r.expect_done("REMAP");
    return m;
}

}  // namespace qnet::peerlink
