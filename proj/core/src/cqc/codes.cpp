#include "qnet/cqc/codes.hpp"

namespace qnet::cqc {

std::optional<MsgType> msg_type_from(std::uint8_t raw) {
    switch (raw) {
        case 0: case 1: case 2: case 3: case 4: case 5: case 6: case 7: case 8: case 9: case 10:
        case 20: case 21: case 22: case 23: case 25: case 26: case 27: case 28:
            return static_cast<MsgType>(raw);
        default:
            return std::nullopt;
    }
}

std::optional<Instr> instr_from(std::uint8_t raw) {
    if (raw <= 8 || (raw >= 10 && raw <= 23)) return static_cast<Instr>(raw);
    return std::nullopt;
}

std::string_view to_string(MsgType t) {
    switch (t) {
        case MsgType::Hello: return "TP_HELLO";
        case MsgType::Command: return "TP_COMMAND";
        case MsgType::Factory: return "TP_FACTORY";
        case MsgType::GetTime: return "TP_GET_TIME";
        case MsgType::Expire: return "TP_EXPIRE";
        case MsgType::Done: return "TP_DONE";
        case MsgType::Recv: return "TP_RECV";
        case MsgType::EprOk: return "TP_EPR_OK";
        case MsgType::MeasOut: return "TP_MEASOUT";
        case MsgType::InfTime: return "TP_INF_TIME";
        case MsgType::NewOk: return "TP_NEW_OK";
        case MsgType::ErrGeneral: return "ERR_GENERAL";
        case MsgType::ErrNoQubit: return "ERR_NOQUBIT";
        case MsgType::ErrUnsupp: return "ERR_UNSUPP";
        case MsgType::ErrTimeout: return "ERR_TIMEOUT";
        case MsgType::ErrUnknown: return "ERR_UNKNOWN";
        case MsgType::ErrUnavailable: return "ERR_UNAVAILABLE";
        case MsgType::ErrDenied: return "ERR_DENIED";
        case MsgType::ErrVersion: return "ERR_VERSION";
    }
    return "?";
}

std::string_view to_string(Instr i) {
    switch (i) {
        case Instr::I: return "CMD_I";
        case Instr::New: return "CMD_NEW";
        case Instr::Measure: return "CMD_MEASURE";
        case Instr::MeasureInplace: return "CMD_MEASURE_INPLACE";
        case Instr::Reset: return "CMD_RESET";
        case Instr::Send: return "CMD_SEND";
        case Instr::Recv: return "CMD_RECV";
        case Instr::Epr: return "CMD_EPR";
        case Instr::RecvEpr: return "CMD_RECV_EPR";
        case Instr::X: return "CMD_X";
        case Instr::Z: return "CMD_Z";
        case Instr::Y: return "CMD_Y";
        case Instr::T: return "CMD_T";
        case Instr::RotX: return "CMD_ROT_X";
        case Instr::RotY: return "CMD_ROT_Y";
        case Instr::RotZ: return "CMD_ROT_Z";
        case Instr::H: return "CMD_H";
        case Instr::K: return "CMD_K";
        case Instr::Swap: return "CMD_SWAP";
        case Instr::CNot: return "CMD_CNOT";
        case Instr::CPhase: return "CMD_CPHASE";
        case Instr::Allocate: return "CMD_ALLOCATE";
        case Instr::Release: return "CMD_RELEASE";
    }
    return "?";
}

bool is_error(MsgType t) { return static_cast<std::uint8_t>(t) >= 20; }

bool is_request(MsgType t) {
    return t == MsgType::Hello || t == MsgType::Command || t == MsgType::Factory || t == MsgType::GetTime;
}

bool is_measurement(Instr i) { return i == Instr::Measure || i == Instr::MeasureInplace; }

bool needs_extra(MsgType type, Instr instr, std::uint8_t options) {
    if (type == MsgType::Factory) return true;
    if (options & (opt::Action | opt::IfThen)) return true;
    switch (instr) {
        case Instr::Send:
        case Instr::Recv:
        case Instr::Epr:
        case Instr::RecvEpr:
        case Instr::RotX:
        case Instr::RotY:
        case Instr::RotZ:
        case Instr::CNot:
        case Instr::CPhase:
        case Instr::Swap:
        case Instr::Allocate:
            return true;
        default:
            return false;
    }
}

}  // namespace qnet::cqc
