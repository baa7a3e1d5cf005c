#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "qnet/common/bytes.hpp"
#include "qnet/common/error.hpp"
#include "qnet/common/ids.hpp"
#include "qnet/engine/gate.hpp"

namespace qnet::peerlink {

/// Leading byte of every response body.
enum class ReplyStatus : std::uint8_t { Ok = 0, Moved = 1, Error = 2 };

/// A simulated qubit that has been shipped elsewhere by a register merge.
struct MovedTo {
    std::string old_host;
    SimId old_sim = 0;
    std::string new_host;
    SimId new_sim = 0;

    friend bool operator==(const MovedTo&, const MovedTo&) = default;
};

/// Decoded response: payload for Ok, a forwarding pointer, or a typed error.
struct PeerReply {
    ReplyStatus status = ReplyStatus::Ok;
    Bytes payload;  // Ok only
    MovedTo moved;  // Moved only
    ErrorCode error = ErrorCode::General;
    std::string message;

    static PeerReply ok(Bytes payload = {}) { return {ReplyStatus::Ok, std::move(payload), {}, {}, {}}; }
    static PeerReply forward(MovedTo m) { return {ReplyStatus::Moved, {}, std::move(m), {}, {}}; }
    static PeerReply err(ErrorCode code, std::string msg) { return {ReplyStatus::Error, {}, {}, code, std::move(msg)}; }

    Bytes encode() const;
    static PeerReply decode(std::span<const std::uint8_t> body);
    /// Throws the carried error; no-op otherwise.
    void raise_if_error() const;
};

struct ApplyGateReq {
    SimId sim = 0;
    engine::GateCode code = engine::GateCode::I;
    std::uint8_t step = 0;
};
struct ApplyTwoReq {
    SimId control_sim = 0;
    std::string target_host;
    SimId target_sim = 0;
    engine::GateCode code = engine::GateCode::CNot;
};
struct MeasureReq {
    SimId sim = 0;
    bool inplace = false;
};
struct MeasureResp {
    int bit = 0;
    double probability = 0;
};
struct SimReq {  // Remove, GetTime
    SimId sim = 0;
};
struct MergePullReq {
    std::uint64_t txn = 0;
    SimId sim = 0;        // any qubit of the register to ship
    SimId new_base = 0;   // requester's fresh sim ids: new_base + position
};
struct ShippedQubit {
    SimId sim = 0;
    std::uint16_t position = 0;
    std::uint64_t created_at = 0;

    friend bool operator==(const ShippedQubit&, const ShippedQubit&) = default;
};
struct RegisterPayload {
    std::uint16_t num_qubits = 0;
    std::vector<engine::Complex> amplitudes;
    std::vector<ShippedQubit> qubits;

    friend bool operator==(const RegisterPayload&, const RegisterPayload&) = default;
};
struct XferReq {
    AppId dest_app = 0;
    std::string sim_host;
    SimId sim = 0;
    bool epr = false;
    EntanglementId entanglement;  // epr only
};
struct LockAcqReq {
    std::uint64_t txn = 0;
    SimId sim = 0;
};
struct LockAcqResp {
    bool granted = false;
    std::uint16_t register_qubits = 0;
};
struct LockRelReq {
    std::uint64_t txn = 0;
};
struct RemapReq {
    std::vector<MovedTo> moves;
};

Bytes encode(const ApplyGateReq&);
Bytes encode(const ApplyTwoReq&);
Bytes encode(const MeasureReq&);
Bytes encode(const MeasureResp&);
Bytes encode(const SimReq&);
Bytes encode(const MergePullReq&);
Bytes encode(const RegisterPayload&);
Bytes encode(const XferReq&);
Bytes encode(const LockAcqReq&);
Bytes encode(const LockAcqResp&);
Bytes encode(const LockRelReq&);
Bytes encode(const RemapReq&);

template <class T>
T decode(std::span<const std::uint8_t> body);

void write_entanglement(ByteWriter& w, const EntanglementId& e);
EntanglementId read_entanglement(ByteReader& r);

}  // namespace qnet::peerlink
