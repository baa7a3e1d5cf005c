#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qnet/common/bytes.hpp"
#include "qnet/common/ids.hpp"
#include "qnet/cqc/codes.hpp"

namespace qnet::cqc {

/// Upper bound on payload_length accepted from a peer.
inline constexpr std::uint32_t kMaxPayload = 16u << 20;
/// Nesting limit for ACTION/IFTHEN blocks.
inline constexpr int kMaxBlockDepth = 16;

struct Header {
    std::uint8_t version = kVersion;
    std::uint8_t type = 0;  // raw; see MsgType
    AppId app_id = 0;
    std::uint32_t payload_length = 0;

    friend bool operator==(const Header&, const Header&) = default;
};

struct ExtraHeader {
    QubitId extra_qubit_id = 0;
    AppId remote_app_id = 0;
    std::uint32_t remote_node = 0;  // IPv4, host byte order
    std::uint16_t remote_port = 0;  // CQC port of the remote node
    std::uint32_t action_length = 0;  // set by the encoder from the block size
    std::uint8_t step = 0;

    friend bool operator==(const ExtraHeader&, const ExtraHeader&) = default;
};

struct Command {
    QubitId qubit_id = 0;
    Instr instr = Instr::I;
    std::uint8_t options = 0;
    std::optional<ExtraHeader> extra;
    std::vector<Command> block;  // ACTION / IFTHEN commands

    friend bool operator==(const Command&, const Command&) = default;
};

struct Message {
    MsgType type = MsgType::Hello;
    AppId app_id = 0;
    std::vector<Command> commands;

    friend bool operator==(const Message&, const Message&) = default;
};

Bytes encode_header(const Header& h);
Header decode_header(std::span<const std::uint8_t> bytes);  // exactly 8 bytes; no validation

/// Serializes a message, filling in payload_length and every action_length.
/// Throws InvalidOperation when a command's extra header presence is wrong.
Bytes encode_message(const Message& m);

/// Parses the payload of a request whose header has already been read.
/// Throws Version (bad version byte), Unsupported (unknown type or
/// instruction) or Protocol (lengths disagree; the stream is unusable).
std::vector<Command> decode_commands(const Header& h, std::span<const std::uint8_t> payload);
/// Whole message: header + payload. Trailing or missing bytes are a Protocol error.
Message decode_message(std::span<const std::uint8_t> bytes);

/// Entanglement information carried by TP_EPR_OK.
struct EntInfo {
    std::uint32_t node_a = 0;  // directory index of the creator
    std::uint32_t node_b = 0;  // directory index of the receiver
    std::uint32_t sequence = 0;
    std::uint64_t created_at = 0;

    friend bool operator==(const EntInfo&, const EntInfo&) = default;
};

/// Node -> application message. Which fields are on the wire depends on type:
///   NEW_OK, RECV, EXPIRE: qubit_id          EPR_OK: qubit_id + ent
///   MEASOUT: outcome                        INF_TIME: time
///   HELLO: max_qubits + node_name           DONE, errors: empty
struct Reply {
    MsgType type = MsgType::Done;
    AppId app_id = 0;
    QubitId qubit_id = 0;
    std::uint8_t outcome = 0;
    EntInfo ent{};
    std::uint64_t time = 0;
    std::uint16_t max_qubits = 0;
    std::string node_name{};

    friend bool operator==(const Reply&, const Reply&) = default;
};

Bytes encode_reply(const Reply& r);
/// `body` is the payload following `h`. Throws Protocol on malformed bodies.
Reply decode_reply(const Header& h, std::span<const std::uint8_t> body);

}  // namespace qnet::cqc
