#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "qnet/cqc/client.hpp"
#include "qnet/netconf/launcher.hpp"

namespace qnet::bench {

/// A whole simulated network inside one process, on 127.0.0.1 with
/// ephemeral ports. Nodes still talk to each other and to clients over TCP.
class LocalNetwork {
public:
    /// Names default to n0, n1, ...
    LocalNetwork(std::vector<std::string> names, vnode::NodeConfig config = {}, peerlink::MeshOptions mesh = {});
    static std::vector<std::string> default_names(std::size_t n);
    ~LocalNetwork();
    LocalNetwork(const LocalNetwork&) = delete;
    LocalNetwork& operator=(const LocalNetwork&) = delete;

    const netconf::NodeDirectory& directory() const { return directory_; }
    std::size_t size() const { return servers_.size(); }
    const std::string& name(std::size_t i) const { return directory_.entries().at(i).name; }
    netconf::NodeServer& server(const std::string& name);
    vnode::Node& node(const std::string& name) { return server(name).node(); }
    cqc::CqcAddress cqc_address(const std::string& name) const;
    std::unique_ptr<cqc::CqcClient> connect(const std::string& name, AppId app) const;

    /// Largest register any node has held so far.
    std::size_t peak_register_qubits();
    void stop();

private:
    netconf::NodeDirectory directory_;
    std::vector<std::unique_ptr<netconf::NodeServer>> servers_;
};

}  // namespace qnet::bench
