#include "qnet/cqc/codec.hpp"

namespace qnet::cqc {

namespace {

void write_command(ByteWriter& w, MsgType type, const Command& c) {
    const bool want = needs_extra(type, c.instr, c.options);
    if (want != c.extra.has_value()) {
        fail(ErrorCode::InvalidOperation,
             std::string(to_string(c.instr)) + (want ? " requires" : " must not carry") + " an extra header");
    }
    if (!c.block.empty() && !(c.options & (opt::Action | opt::IfThen))) {
        fail(ErrorCode::InvalidOperation, "command block without ACTION or IFTHEN");
    }
    w.u16(c.qubit_id).u8(static_cast<std::uint8_t>(c.instr)).u8(c.options);
    if (!c.extra) return;
    const auto& e = *c.extra;
    w.u16(e.extra_qubit_id).u16(e.remote_app_id).u32(e.remote_node).u16(e.remote_port);
    const auto len_at = w.size();
    w.u32(0).u8(e.step).u8(0);
    const auto block_start = w.size();
    for (const auto& sub : c.block) write_command(w, MsgType::Command, sub);
    w.patch_u32(len_at, static_cast<std::uint32_t>(w.size() - block_start));
}

Command read_command(ByteReader& r, MsgType type, int depth) {
    Command c;
    c.qubit_id = r.u16();
    const auto raw_instr = r.u8();
    c.options = r.u8();
    auto instr = instr_from(raw_instr);
    if (!instr) fail(ErrorCode::Unsupported, "unknown instruction " + std::to_string(raw_instr));
    c.instr = *instr;
    if (!needs_extra(type, c.instr, c.options)) return c;

    ExtraHeader e;
    e.extra_qubit_id = r.u16();
    e.remote_app_id = r.u16();
    e.remote_node = r.u32();
    e.remote_port = r.u16();
    e.action_length = r.u32();
    e.step = r.u8();
    r.u8();  // padding
    c.extra = e;
    if (e.action_length == 0) return c;
    if (!(c.options & (opt::Action | opt::IfThen))) {
        fail(ErrorCode::Protocol, "action_length set without ACTION or IFTHEN");
    }
    if (depth >= kMaxBlockDepth) fail(ErrorCode::Protocol, "command blocks nested too deeply");
    ByteReader block(r.raw(e.action_length));
    while (!block.done()) c.block.push_back(read_command(block, MsgType::Command, depth + 1));
    return c;
}

}  // namespace

Bytes encode_header(const Header& h) {
    return ByteWriter().u8(h.version).u8(h.type).u16(h.app_id).u32(h.payload_length).take();
}

Header decode_header(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    Header h;
    h.version = r.u8();
    h.type = r.u8();
    h.app_id = r.u16();
    h.payload_length = r.u32();
    r.expect_done("CQC header");
    return h;
}

Bytes encode_message(const Message& m) {
    if (m.type == MsgType::Factory && m.commands.size() != 1) {
        fail(ErrorCode::InvalidOperation, "a FACTORY message carries exactly one command");
    }
    ByteWriter w;
    w.u8(kVersion).u8(static_cast<std::uint8_t>(m.type)).u16(m.app_id).u32(0);
    for (const auto& c : m.commands) write_command(w, m.type, c);
    w.patch_u32(4, static_cast<std::uint32_t>(w.size() - kHeaderSize));
    return w.take();
}

std::vector<Command> decode_commands(const Header& h, std::span<const std::uint8_t> payload) {
    if (h.version != kVersion) fail(ErrorCode::Version, "CQC version " + std::to_string(h.version) + " not supported");
    auto type = msg_type_from(h.type);
    if (!type || !is_request(*type)) fail(ErrorCode::Unsupported, "unsupported message type " + std::to_string(h.type));
    if (payload.size() != h.payload_length) fail(ErrorCode::Protocol, "payload length does not match header");

    std::vector<Command> out;
    ByteReader r(payload);
    if (*type == MsgType::Hello) {
        r.expect_done("HELLO payload");
        return out;
    }
    while (!r.done()) out.push_back(read_command(r, *type, 0));
    if (*type == MsgType::Factory && out.size() != 1) {
        fail(ErrorCode::Protocol, "a FACTORY message carries exactly one command");
    }
    return out;
}

Message decode_message(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) fail(ErrorCode::Protocol, "message shorter than the CQC header");
    auto h = decode_header(bytes.first(kHeaderSize));
    auto payload = bytes.subspan(kHeaderSize);
    if (h.version == kVersion && payload.size() != h.payload_length) {
        fail(ErrorCode::Protocol, "payload length does not match header");
    }
    Message m;
    m.commands = decode_commands(h, payload);
    m.type = static_cast<MsgType>(h.type);
    m.app_id = h.app_id;
    return m;
}

Bytes encode_reply(const Reply& r) {
    ByteWriter w;
    w.u8(kVersion).u8(static_cast<std::uint8_t>(r.type)).u16(r.app_id).u32(0);
    switch (r.type) {
        case MsgType::NewOk:
        case MsgType::Recv:
        case MsgType::Expire:
            w.u16(r.qubit_id);
            break;
        case MsgType::EprOk:
            w.u16(r.qubit_id).u32(r.ent.node_a).u32(r.ent.node_b).u32(r.ent.sequence).u64(r.ent.created_at);
            break;
        case MsgType::MeasOut:
            w.u8(r.outcome);
            break;
        case MsgType::InfTime:
            w.u64(r.time);
            break;
        case MsgType::Hello:
            if (r.node_name.size() > 255) fail(ErrorCode::InvalidOperation, "node name longer than 255 bytes");
            w.u16(r.max_qubits).u8(static_cast<std::uint8_t>(r.node_name.size()));
            w.raw({reinterpret_cast<const std::uint8_t*>(r.node_name.data()), r.node_name.size()});
            break;
        default:
            break;
    }
    w.patch_u32(4, static_cast<std::uint32_t>(w.size() - kHeaderSize));
    return w.take();
}

Reply decode_reply(const Header& h, std::span<const std::uint8_t> body) {
    if (h.version != kVersion) fail(ErrorCode::Version, "CQC version " + std::to_string(h.version) + " not supported");
    auto type = msg_type_from(h.type);
    if (!type || (is_request(*type) && *type != MsgType::Hello)) {
        fail(ErrorCode::Protocol, "not a reply type: " + std::to_string(h.type));
    }
    Reply out;
    out.type = *type;
    out.app_id = h.app_id;
    ByteReader r(body);
    switch (*type) {
        case MsgType::NewOk:
        case MsgType::Recv:
        case MsgType::Expire:
            out.qubit_id = r.u16();
            break;
        case MsgType::EprOk:
            out.qubit_id = r.u16();
            out.ent.node_a = r.u32();
            out.ent.node_b = r.u32();
            out.ent.sequence = r.u32();
            out.ent.created_at = r.u64();
            break;
        case MsgType::MeasOut:
            out.outcome = r.u8();
            break;
        case MsgType::InfTime:
            out.time = r.u64();
            break;
        case MsgType::Hello: {
            out.max_qubits = r.u16();
            auto n = r.u8();
            auto name = r.raw(n);
            out.node_name.assign(name.begin(), name.end());
            break;
        }
        default:
            break;
    }
    r.expect_done(to_string(*type));
    return out;
}

}  // namespace qnet::cqc
