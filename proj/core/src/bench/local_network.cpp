#include "qnet/bench/local_network.hpp"

#include <algorithm>

namespace qnet::bench {

namespace {
constexpr const char* kHost = "127.0.0.1";
}

std::vector<std::string> LocalNetwork::default_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
    return names;
}

LocalNetwork::LocalNetwork(std::vector<std::string> names, vnode::NodeConfig config, peerlink::MeshOptions mesh) {
    std::vector<net::TcpListener> backends, cqcs;
    std::vector<netconf::NodeEntry> entries;
    for (const auto& name : names) {
        backends.emplace_back(kHost, 0);
        cqcs.emplace_back(kHost, 0);
        entries.push_back({name, kHost, backends.back().port(), cqcs.back().port()});
    }
    directory_ = netconf::NodeDirectory(entries);
    for (std::size_t i = 0; i < names.size(); ++i) {
        servers_.push_back(std::make_unique<netconf::NodeServer>(directory_, names[i], config, mesh,
                                                                 std::move(backends[i]), std::move(cqcs[i])));
    }
    for (auto& s : servers_) s->start();
    for (auto& s : servers_) {
        if (!s->wait_ready(mesh.connect_window)) {
            fail(ErrorCode::Timeout, "node " + s->entry().name + " did not connect to all peers");
        }
    }
}

LocalNetwork::~LocalNetwork() { stop(); }

void LocalNetwork::stop() {
    for (auto& s : servers_) s->node().shutdown();
    for (auto& s : servers_) s->stop();
}

netconf::NodeServer& LocalNetwork::server(const std::string& name) {
    auto idx = directory_.index_of(name);
    if (!idx) fail(ErrorCode::Config, "no node named '" + name + "'");
    return *servers_[*idx];
}

cqc::CqcAddress LocalNetwork::cqc_address(const std::string& name) const {
    const auto& e = directory_.at(name);
    return {netconf::resolve_ipv4(e.host), e.cqc_port};
}

std::unique_ptr<cqc::CqcClient> LocalNetwork::connect(const std::string& name, AppId app) const {
    const auto& e = directory_.at(name);
    return std::make_unique<cqc::CqcClient>(e.host, e.cqc_port, app);
}

std::size_t LocalNetwork::peak_register_qubits() {
    std::size_t peak = 0;
    for (auto& s : servers_) peak = std::max(peak, s->node().status().peak_register_qubits);
    return peak;
}

}  // namespace qnet::bench
