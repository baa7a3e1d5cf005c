#include "qnet/cqc/client.hpp"

#include <array>

namespace qnet::cqc {

namespace {

ErrorCode code_for(MsgType t) {
    switch (t) {
        case MsgType::ErrNoQubit: return ErrorCode::NoQubit;
        case MsgType::ErrUnknown: return ErrorCode::UnknownId;
        case MsgType::ErrDenied: return ErrorCode::Denied;
        case MsgType::ErrTimeout: return ErrorCode::Timeout;
        case MsgType::ErrUnavailable: return ErrorCode::Unavailable;
        case MsgType::ErrUnsupp: return ErrorCode::Unsupported;
        case MsgType::ErrVersion: return ErrorCode::Version;
        case MsgType::Expire: return ErrorCode::Expired;
        default: return ErrorCode::General;
    }
}

}  // namespace

CqcError::CqcError(MsgType reply, std::string message) : Error(code_for(reply), std::move(message)), reply_(reply) {}

CqcClient::CqcClient(const std::string& host, std::uint16_t port, AppId app_id)
    : stream_(net::TcpStream::connect(host, port)), app_(app_id) {}

Reply CqcClient::read_reply() {
    std::array<std::uint8_t, kHeaderSize> head{};
    if (!stream_.read_exact(head)) fail(ErrorCode::Unavailable, "CQC connection closed");
    auto h = decode_header(head);
    if (h.payload_length > kMaxPayload) fail(ErrorCode::Protocol, "oversized CQC reply");
    Bytes body(h.payload_length);
    if (!body.empty() && !stream_.read_exact(body)) fail(ErrorCode::Unavailable, "CQC connection closed");
    return decode_reply(h, body);
}

Reply CqcClient::hello() {
    stream_.write_all(encode_message(Message{MsgType::Hello, app_, {}}));
    return read_reply();
}

Reply CqcClient::roundtrip_raw(std::span<const std::uint8_t> bytes) {
    stream_.write_all(bytes);
    return read_reply();
}

std::vector<Reply> CqcClient::execute(const Message& m) {
    stream_.write_all(encode_message(m));
    std::vector<Reply> out;
    while (true) {
        auto r = read_reply();
        if (r.type == MsgType::Done) return out;
        if (is_error(r.type) || r.type == MsgType::Expire) {
            throw CqcError(r.type, std::string(to_string(r.type)) + " from node");
        }
        out.push_back(r);
    }
}

Command CqcClient::command(QubitId q, Instr instr, std::uint8_t options) {
    Command c{q, instr, options, std::nullopt, {}};
    if (needs_extra(MsgType::Command, instr, options)) c.extra = ExtraHeader{};
    return c;
}

namespace {

Reply expect_one(const std::vector<Reply>& replies, MsgType type) {
    if (replies.size() != 1 || replies.front().type != type) {
        fail(ErrorCode::Protocol, "expected a single " + std::string(to_string(type)) + " reply");
    }
    return replies.front();
}

}  // namespace

QubitId CqcClient::new_qubit() {
    return expect_one(execute({MsgType::Command, app_, {command(0, Instr::New)}}), MsgType::NewOk).qubit_id;
}

std::vector<QubitId> CqcClient::allocate(std::uint8_t count) {
    auto c = command(0, Instr::Allocate);
    c.extra->step = count;
    std::vector<QubitId> ids;
    for (const auto& r : execute({MsgType::Command, app_, {c}})) ids.push_back(r.qubit_id);
    return ids;
}

void CqcClient::apply(QubitId q, Instr gate, std::uint8_t step) {
    auto c = command(q, gate);
    if (c.extra) c.extra->step = step;
    execute({MsgType::Command, app_, {c}});
}

void CqcClient::apply_two(QubitId control, QubitId target, Instr gate) {
    auto c = command(control, gate);
    c.extra->extra_qubit_id = target;
    execute({MsgType::Command, app_, {c}});
}

int CqcClient::measure(QubitId q, bool inplace) {
    auto replies = execute({MsgType::Command, app_, {command(q, inplace ? Instr::MeasureInplace : Instr::Measure)}});
    return expect_one(replies, MsgType::MeasOut).outcome;
}

void CqcClient::reset(QubitId q) { execute({MsgType::Command, app_, {command(q, Instr::Reset)}}); }

void CqcClient::release(QubitId q) { execute({MsgType::Command, app_, {command(q, Instr::Release)}}); }

void CqcClient::send(QubitId q, const CqcAddress& to, AppId remote_app) {
    auto c = command(q, Instr::Send);
    c.extra->remote_app_id = remote_app;
    c.extra->remote_node = to.ipv4;
    c.extra->remote_port = to.port;
    execute({MsgType::Command, app_, {c}});
}

QubitId CqcClient::recv() {
    return expect_one(execute({MsgType::Command, app_, {command(0, Instr::Recv)}}), MsgType::Recv).qubit_id;
}

std::pair<QubitId, EntInfo> CqcClient::epr(const CqcAddress& to, AppId remote_app) {
    auto c = command(0, Instr::Epr);
    c.extra->remote_app_id = remote_app;
    c.extra->remote_node = to.ipv4;
    c.extra->remote_port = to.port;
    const auto r = expect_one(execute({MsgType::Command, app_, {c}}), MsgType::EprOk);
    return {r.qubit_id, r.ent};
}

std::pair<QubitId, EntInfo> CqcClient::recv_epr() {
    const auto r = expect_one(execute({MsgType::Command, app_, {command(0, Instr::RecvEpr)}}), MsgType::EprOk);
    return {r.qubit_id, r.ent};
}

std::uint64_t CqcClient::get_time(QubitId q) {
    stream_.write_all(encode_message(Message{MsgType::GetTime, app_, {Command{q, Instr::I, 0, std::nullopt, {}}}}));
    auto r = read_reply();
    if (r.type != MsgType::InfTime) throw CqcError(r.type, std::string(to_string(r.type)) + " from node");
    return r.time;
}

}  // namespace qnet::cqc
