#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "qnet/common/socket.hpp"
#include "qnet/cqc/server.hpp"
#include "qnet/netconf/directory.hpp"
#include "qnet/peerlink/mesh.hpp"
#include "qnet/vnode/node.hpp"

namespace qnet::netconf {

/// One simulated node: backend peer mesh, node state and CQC server in one process.
class NodeServer {
public:
    /// Binds both listeners from the directory entry for `name`.
    NodeServer(NodeDirectory directory, std::string name, vnode::NodeConfig config,
               peerlink::MeshOptions mesh_options = {});
    /// Uses listeners bound by the caller (ephemeral ports in tests).
    NodeServer(NodeDirectory directory, std::string name, vnode::NodeConfig config, peerlink::MeshOptions mesh_options,
               net::TcpListener backend, net::TcpListener cqc);
    ~NodeServer();
    NodeServer(const NodeServer&) = delete;
    NodeServer& operator=(const NodeServer&) = delete;

    /// Starts accepting and dialing peers; returns immediately.
    void start();
    /// True once every peer is connected.
    bool wait_ready(std::chrono::milliseconds timeout);
    void stop();

    vnode::Node& node() { return *node_; }
    peerlink::PeerMesh& mesh() { return *mesh_; }
    const NodeEntry& entry() const { return entry_; }

private:
    NodeDirectory directory_;
    NodeEntry entry_;
    std::unique_ptr<peerlink::PeerMesh> mesh_;
    std::unique_ptr<vnode::Node> node_;
    std::unique_ptr<cqc::CqcServer> cqc_;
    net::TcpListener backend_;
    bool started_ = false;
    bool stopped_ = false;
};

/// One-shot request over an anonymous backend connection (status tooling).
peerlink::PeerReply query_backend(const std::string& host, std::uint16_t port, peerlink::PeerOp op, Bytes body,
                                  std::chrono::milliseconds timeout = std::chrono::seconds(10));

/// A node's state dump (see vnode::parse_node_dump).
std::string fetch_dump(const NodeEntry& entry);
/// A node's status as key=value lines.
std::string fetch_status(const NodeEntry& entry);

}  // namespace qnet::netconf
