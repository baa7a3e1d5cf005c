#include "qnet/cqc/server.hpp"

#include <spdlog/spdlog.h>

#include <sys/socket.h>

namespace qnet::cqc {

using engine::GateCode;

MsgType reply_type_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::NoQubit: return MsgType::ErrNoQubit;
        case ErrorCode::UnknownId: return MsgType::ErrUnknown;
        case ErrorCode::Denied: return MsgType::ErrDenied;
        case ErrorCode::Timeout: return MsgType::ErrTimeout;
        case ErrorCode::Unavailable:
        case ErrorCode::Resource: return MsgType::ErrUnavailable;
        case ErrorCode::Unsupported: return MsgType::ErrUnsupp;
        case ErrorCode::Version: return MsgType::ErrVersion;
        case ErrorCode::Expired: return MsgType::Expire;
        default: return MsgType::ErrGeneral;
    }
}

namespace {

GateCode single_gate(Instr i) {
    switch (i) {
        case Instr::I: return GateCode::I;
        case Instr::X: return GateCode::X;
        case Instr::Y: return GateCode::Y;
        case Instr::Z: return GateCode::Z;
        case Instr::H: return GateCode::H;
        case Instr::K: return GateCode::K;
        case Instr::T: return GateCode::T;
        case Instr::RotX: return GateCode::RotX;
        case Instr::RotY: return GateCode::RotY;
        case Instr::RotZ: return GateCode::RotZ;
        case Instr::CNot: return GateCode::CNot;
        case Instr::CPhase: return GateCode::CPhase;
        default: fail(ErrorCode::Internal, "not a gate instruction");
    }
}

bool contains_notify(const std::vector<Command>& cmds) {
    for (const auto& c : cmds) {
        if ((c.options & opt::Notify) || contains_notify(c.block)) return true;
    }
    return false;
}

}  // namespace

std::string Dispatcher::node_at(const ExtraHeader& e) const {
    const auto* entry = node_.directory().find_by_cqc_address(e.remote_node, e.remote_port);
    if (entry == nullptr) {
        fail(ErrorCode::General, "no node listens for CQC at " + std::to_string(e.remote_node) + ":" +
                                     std::to_string(e.remote_port));
    }
    return entry->name;
}

EntInfo Dispatcher::ent_info(const EntanglementId& e) const {
    const auto& dir = node_.directory();
    return EntInfo{static_cast<std::uint32_t>(dir.index_of(e.node_a).value_or(0xFFFFFFFF)),
                   static_cast<std::uint32_t>(dir.index_of(e.node_b).value_or(0xFFFFFFFF)), e.sequence, e.created_at};
}

void Dispatcher::run_command(AppId app, const Command& c, const Emit& emit, QubitId& current) {
    current = c.qubit_id;
    if ((c.options & opt::IfThen) && !is_measurement(c.instr)) {
        fail(ErrorCode::Unsupported, "IFTHEN needs a measurement command");
    }
    const ExtraHeader extra = c.extra.value_or(ExtraHeader{});
    int outcome = -1;
    switch (c.instr) {
        case Instr::I:
        case Instr::X:
        case Instr::Y:
        case Instr::Z:
        case Instr::H:
        case Instr::K:
        case Instr::T:
        case Instr::RotX:
        case Instr::RotY:
        case Instr::RotZ:
            node_.apply_gate(app, c.qubit_id, single_gate(c.instr), extra.step);
            break;
        case Instr::CNot:
        case Instr::CPhase:
            node_.apply_two_qubit(app, c.qubit_id, extra.extra_qubit_id, single_gate(c.instr));
            break;
        case Instr::New:
            emit(Reply{.type = MsgType::NewOk, .app_id = app, .qubit_id = node_.create_qubit(app)});
            break;
        case Instr::Allocate:
            if (extra.step == 0) fail(ErrorCode::General, "ALLOCATE of zero qubits");
            for (int i = 0; i < extra.step; ++i) {
                emit(Reply{.type = MsgType::NewOk, .app_id = app, .qubit_id = node_.create_qubit(app)});
            }
            break;
        case Instr::Measure:
        case Instr::MeasureInplace:
            outcome = node_.measure_qubit(app, c.qubit_id, c.instr == Instr::MeasureInplace);
            emit(Reply{.type = MsgType::MeasOut, .app_id = app, .outcome = static_cast<std::uint8_t>(outcome)});
            break;
        case Instr::Reset:
            node_.reset_qubit(app, c.qubit_id);
            break;
        case Instr::Release:
            node_.release_qubit(app, c.qubit_id);
            break;
        case Instr::Send:
            node_.send_qubit(app, c.qubit_id, node_at(extra), extra.remote_app_id);
            break;
        case Instr::Recv:
            emit(Reply{.type = MsgType::Recv, .app_id = app, .qubit_id = node_.recv_qubit(app)});
            break;
        case Instr::Epr: {
            auto [q, ent] = node_.create_epr(app, node_at(extra), extra.remote_app_id);
            emit(Reply{.type = MsgType::EprOk, .app_id = app, .qubit_id = q, .ent = ent_info(ent)});
            break;
        }
        case Instr::RecvEpr: {
            auto [q, ent] = node_.recv_epr(app);
            emit(Reply{.type = MsgType::EprOk, .app_id = app, .qubit_id = q, .ent = ent_info(ent)});
            break;
        }
        case Instr::Swap: {
            auto [a, b] = node_.entanglement_swap(app, c.qubit_id, extra.extra_qubit_id);
            emit(Reply{.type = MsgType::MeasOut, .app_id = app, .outcome = static_cast<std::uint8_t>(a)});
            emit(Reply{.type = MsgType::MeasOut, .app_id = app, .outcome = static_cast<std::uint8_t>(b)});
            break;
        }
    }
    if (c.options & opt::IfThen) {
        if (outcome == 1) run_sequence(app, c.block, emit, current);
    } else if (c.options & opt::Action) {
        run_sequence(app, c.block, emit, current);
    }
}

void Dispatcher::run_sequence(AppId app, const std::vector<Command>& cmds, const Emit& emit, QubitId& current) {
    for (const auto& c : cmds) run_command(app, c, emit, current);
}

bool Dispatcher::handle(const Header& h, std::span<const std::uint8_t> payload, const Emit& emit) {
    const AppId app = h.app_id;
    std::vector<Command> cmds;
    try {
        cmds = decode_commands(h, payload);
    } catch (const Error& e) {
        spdlog::debug("[{}] rejected CQC message: {}", node_.name(), e.what());
        if (e.code() == ErrorCode::Version) {
            emit(Reply{.type = MsgType::ErrVersion, .app_id = app});
            return true;
        }
        if (e.code() == ErrorCode::Unsupported) {
            emit(Reply{.type = MsgType::ErrUnsupp, .app_id = app});
            return true;
        }
        emit(Reply{.type = MsgType::ErrGeneral, .app_id = app});
        return false;
    }

    const auto type = static_cast<MsgType>(h.type);
    QubitId current = 0;
    try {
        switch (type) {
            case MsgType::Hello: {
                const auto cap = std::min<std::size_t>(node_.config().max_qubits, 0xFFFF);
                emit(Reply{.type = MsgType::Hello, .app_id = app, .max_qubits = static_cast<std::uint16_t>(cap),
                           .node_name = node_.name().substr(0, 255)});
                return true;
            }
            case MsgType::GetTime:
                for (const auto& c : cmds) {
                    current = c.qubit_id;
                    emit(Reply{.type = MsgType::InfTime, .app_id = app, .time = node_.get_time(app, c.qubit_id)});
                }
                break;
            case MsgType::Command:
                run_sequence(app, cmds, emit, current);
                break;
            case MsgType::Factory: {
                const auto& c = cmds.front();
                if (c.extra->step == 0) fail(ErrorCode::General, "FACTORY with a repetition count of zero");
                if (c.instr == Instr::RotX || c.instr == Instr::RotY || c.instr == Instr::RotZ ||
                    c.instr == Instr::Allocate) {
                    fail(ErrorCode::Unsupported, "the step byte of a FACTORY command is its repetition count");
                }
                for (int i = 0; i < c.extra->step; ++i) run_command(app, c, emit, current);
                break;
            }
            default:
                fail(ErrorCode::Internal, "unreachable message type");
        }
    } catch (const Error& e) {
        spdlog::debug("[{}] CQC app {} error: {}", node_.name(), app, e.what());
        const auto t = reply_type_for(e.code());
        emit(Reply{.type = t, .app_id = app, .qubit_id = t == MsgType::Expire ? current : QubitId{0}});
        return true;
    } catch (const std::exception& e) {
        spdlog::error("[{}] CQC app {} failed: {}", node_.name(), app, e.what());
        emit(Reply{.type = MsgType::ErrGeneral, .app_id = app});
        return true;
    }
    if (contains_notify(cmds)) emit(Reply{.type = MsgType::Done, .app_id = app});
    return true;
}

CqcServer::CqcServer(vnode::Node& node, net::TcpListener listener)
    : node_(node), listener_(std::move(listener)), dispatcher_(node) {}

CqcServer::~CqcServer() { stop(); }

void CqcServer::start() { accept_thread_ = std::thread([this] { accept_loop(); }); }

void CqcServer::stop() {
    if (stopping_.exchange(true)) return;
    listener_.shutdown();
    if (accept_thread_.joinable()) accept_thread_.join();
    std::list<std::unique_ptr<Session>> sessions;
    {
        std::lock_guard lk(mu_);
        sessions.swap(sessions_);
    }
    for (auto& s : sessions) s->stream.shutdown();
    for (auto& s : sessions) {
        if (s->thread.joinable()) s->thread.join();
    }
    listener_.close();
}

void CqcServer::reap_finished() {
    std::list<std::unique_ptr<Session>> done;
    {
        std::lock_guard lk(mu_);
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if ((*it)->finished.load()) {
                done.push_back(std::move(*it));
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (auto& s : done) s->thread.join();
}

void CqcServer::accept_loop() {
    while (!stopping_.load()) {
        auto stream = listener_.accept();
        if (!stream.valid()) break;
        reap_finished();
        auto session = std::make_unique<Session>();
        session->stream = std::move(stream);
        auto* raw = session.get();
        std::lock_guard lk(mu_);
        if (stopping_.load()) break;
        sessions_.push_back(std::move(session));
        raw->thread = std::thread([this, raw] { serve(*raw); });
    }
}

void CqcServer::serve(Session& s) {
    auto emit = [&](const Reply& r) { s.stream.write_all(encode_reply(r)); };
    try {
        std::array<std::uint8_t, kHeaderSize> head{};
        Bytes payload;
        while (s.stream.read_exact(head)) {
            const auto h = decode_header(head);
            if (h.payload_length > kMaxPayload) {
                emit(Reply{.type = MsgType::ErrGeneral, .app_id = h.app_id});
                break;
            }
            payload.resize(h.payload_length);
            if (!payload.empty() && !s.stream.read_exact(payload)) break;
            if (!dispatcher_.handle(h, payload, emit)) break;
        }
    } catch (const std::exception& e) {
        if (!stopping_.load()) spdlog::debug("[{}] CQC session ended: {}", node_.name(), e.what());
    }
    s.stream.shutdown();
    s.finished = true;
}

}  // namespace qnet::cqc
