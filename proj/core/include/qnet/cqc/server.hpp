#pragma once

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "qnet/common/socket.hpp"
#include "qnet/cqc/codec.hpp"
#include "qnet/vnode/node.hpp"

namespace qnet::cqc {

/// Reply type for an error raised while executing a command.
MsgType reply_type_for(ErrorCode code);

/// Executes decoded CQC requests against a node. Socket-free so it can be
/// driven directly from tests.
class Dispatcher {
public:
    using Emit = std::function<void(const Reply&)>;

    explicit Dispatcher(vnode::Node& node) : node_(node) {}

    /// Handles one request. Returns false when the connection must be closed.
    bool handle(const Header& h, std::span<const std::uint8_t> payload, const Emit& emit);

private:
    void run_sequence(AppId app, const std::vector<Command>& cmds, const Emit& emit, QubitId& current);
    void run_command(AppId app, const Command& c, const Emit& emit, QubitId& current);
    std::string node_at(const ExtraHeader& e) const;
    EntInfo ent_info(const EntanglementId& e) const;

    vnode::Node& node_;
};

/// TCP front end: one thread per application session.
class CqcServer {
public:
    CqcServer(vnode::Node& node, net::TcpListener listener);
    ~CqcServer();
    CqcServer(const CqcServer&) = delete;
    CqcServer& operator=(const CqcServer&) = delete;

    void start();
    void stop();
    std::uint16_t port() const { return listener_.port(); }

private:
    struct Session {
        net::TcpStream stream;
        std::thread thread;
        std::atomic<bool> finished{false};
    };

    void accept_loop();
    void serve(Session& s);
    void reap_finished();

    vnode::Node& node_;
    net::TcpListener listener_;
    Dispatcher dispatcher_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex mu_;
    std::list<std::unique_ptr<Session>> sessions_;
};

}  // namespace qnet::cqc
