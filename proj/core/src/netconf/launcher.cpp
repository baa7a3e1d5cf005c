#include "qnet/netconf/launcher.hpp"

#include <sys/socket.h>

namespace qnet::netconf {

namespace {

const NodeEntry& entry_for(const NodeDirectory& dir, const std::string& name) {
    const auto* e = dir.find(name);
    if (e == nullptr) fail(ErrorCode::Config, "node '" + name + "' is not in the configuration");
    return *e;
}

}  // namespace

NodeServer::NodeServer(NodeDirectory directory, std::string name, vnode::NodeConfig config,
                       peerlink::MeshOptions mesh_options)
    : NodeServer(directory, name, config, mesh_options,
                 net::TcpListener(entry_for(directory, name).host, entry_for(directory, name).backend_port),
                 net::TcpListener(entry_for(directory, name).host, entry_for(directory, name).cqc_port)) {}

NodeServer::NodeServer(NodeDirectory directory, std::string name, vnode::NodeConfig config,
                       peerlink::MeshOptions mesh_options, net::TcpListener backend, net::TcpListener cqc)
    : directory_(std::move(directory)), entry_(entry_for(directory_, name)), backend_(std::move(backend)) {
    mesh_ = std::make_unique<peerlink::PeerMesh>(name, mesh_options);
    node_ = std::make_unique<vnode::Node>(name, directory_, config, mesh_.get());
    cqc_ = std::make_unique<cqc::CqcServer>(*node_, std::move(cqc));
}

NodeServer::~NodeServer() { stop(); }

void NodeServer::start() {
    std::vector<peerlink::PeerAddress> peers;
    for (const auto& e : directory_.entries()) peers.push_back({e.name, e.host, e.backend_port});
    auto* node = node_.get();
    mesh_->start(std::move(backend_), std::move(peers),
                 [node](const std::string& from, peerlink::PeerOp op, std::span<const std::uint8_t> body) {
                     return node->handle_peer(from, op, body);
                 });
    cqc_->start();
    started_ = true;
}

bool NodeServer::wait_ready(std::chrono::milliseconds timeout) { return mesh_->wait_ready(timeout); }

void NodeServer::stop() {
    if (stopped_) return;
    stopped_ = true;
    node_->shutdown();
    cqc_->stop();
    mesh_->stop();
}

peerlink::PeerReply query_backend(const std::string& host, std::uint16_t port, peerlink::PeerOp op, Bytes body,
                                  std::chrono::milliseconds timeout) {
    using namespace peerlink;
    auto stream = net::TcpStream::connect(host, port);
    timeval tv{static_cast<long>(timeout.count() / 1000), static_cast<long>(timeout.count() % 1000) * 1000};
    ::setsockopt(stream.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    stream.write_all(frame_encode(PeerMessage{0, FrameKind::Request, PeerOp::Hello, ByteWriter().str("").take()}));
    stream.write_all(frame_encode(PeerMessage{1, FrameKind::Request, op, std::move(body)}));
    FrameAssembler assembler;
    std::vector<std::uint8_t> buf(1 << 16);
    while (true) {
        while (auto msg = assembler.next()) {
            if (msg->kind == FrameKind::Response && msg->request_id == 1) return PeerReply::decode(msg->body);
        }
        std::size_t n = 0;
        try {
            n = stream.read_some(buf);
        } catch (const Error& e) {
            fail(ErrorCode::Timeout, std::string("no reply from backend: ") + e.what());
        }
        if (n == 0) fail(ErrorCode::Unavailable, "backend closed the connection");
        assembler.feed(std::span(buf).first(n));
    }
}

std::string fetch_dump(const NodeEntry& entry) {
    auto reply = query_backend(entry.host, entry.backend_port, peerlink::PeerOp::NodeStateDump, {});
    reply.raise_if_error();
    return std::string(reply.payload.begin(), reply.payload.end());
}

std::string fetch_status(const NodeEntry& entry) {
    auto reply = query_backend(entry.host, entry.backend_port, peerlink::PeerOp::NodeStateDump, Bytes{1});
    reply.raise_if_error();
    return std::string(reply.payload.begin(), reply.payload.end());
}

}  // namespace qnet::netconf
