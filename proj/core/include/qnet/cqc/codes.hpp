#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace qnet::cqc {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 8;
inline constexpr std::size_t kCommandHeaderSize = 4;
inline constexpr std::size_t kExtraHeaderSize = 16;

enum class MsgType : std::uint8_t {
    // application -> node
    Hello = 0,
    Command = 1,
    Factory = 2,
    GetTime = 8,
    // node -> application
    Expire = 3,
    Done = 4,
    Recv = 5,
    EprOk = 6,
    MeasOut = 7,
    InfTime = 9,
    NewOk = 10,
    ErrGeneral = 20,
    ErrNoQubit = 21,
    ErrUnsupp = 22,
    ErrTimeout = 23,
    ErrUnknown = 25,
    ErrUnavailable = 26,
    ErrDenied = 27,
    ErrVersion = 28,
};

enum class Instr : std::uint8_t {
    I = 0,
    New = 1,
    Measure = 2,
    MeasureInplace = 3,
    Reset = 4,
    Send = 5,
    Recv = 6,
    Epr = 7,
    RecvEpr = 8,
    X = 10,
    Z = 11,
    Y = 12,
    T = 13,
    RotX = 14,
    RotY = 15,
    RotZ = 16,
    H = 17,
    K = 18,
    Swap = 19,
    CNot = 20,
    CPhase = 21,
    Allocate = 22,
    Release = 23,
};

namespace opt {
inline constexpr std::uint8_t Notify = 0x01;
inline constexpr std::uint8_t Action = 0x02;
inline constexpr std::uint8_t Block = 0x04;
inline constexpr std::uint8_t IfThen = 0x08;
inline constexpr std::uint8_t All = 0x0F;
}  // namespace opt

std::optional<MsgType> msg_type_from(std::uint8_t raw);
std::optional<Instr> instr_from(std::uint8_t raw);
std::string_view to_string(MsgType t);
std::string_view to_string(Instr i);

bool is_error(MsgType t);
/// Types an application may send.
bool is_request(MsgType t);
bool is_measurement(Instr i);

/// Whether a command carries the 16-byte extra header.
bool needs_extra(MsgType type, Instr instr, std::uint8_t options);

}  // namespace qnet::cqc
