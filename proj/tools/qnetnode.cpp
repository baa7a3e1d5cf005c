// qnetnode: runs one simulated network node, or queries a running one.

#include <csignal>
#include <iostream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "qnet/netconf/launcher.hpp"

namespace {

int run(const std::string& config_path, const std::string& name, std::size_t max_register, std::optional<std::uint64_t> seed) {
    auto dir = qnet::netconf::load_config(config_path);
    qnet::vnode::NodeConfig cfg;
    cfg.max_register_qubits = max_register;
    cfg.seed = seed;

    // Block the termination signals before any thread starts so only sigwait sees them.
    sigset_t sigs;
    sigemptyset(&sigs);
    sigaddset(&sigs, SIGINT);
    sigaddset(&sigs, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

    qnet::peerlink::MeshOptions mesh;
    qnet::netconf::NodeServer server(dir, name, cfg, mesh);
    server.start();
    if (!server.wait_ready(mesh.connect_window)) {
        spdlog::error("{}: peers did not all connect within {} ms", name, mesh.connect_window.count());
        server.stop();
        return 1;
    }
    const auto& e = server.entry();
    std::cout << "ready node=" << name << " backend=" << e.host << ':' << e.backend_port << " cqc=" << e.host << ':'
              << e.cqc_port << " peers=" << server.mesh().peer_count() << std::endl;

    int sig = 0;
    sigwait(&sigs, &sig);
    spdlog::info("{}: shutting down on signal {}", name, sig);
    server.stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum network simulator node"};
    app.require_subcommand(1);

    std::string config, name, log_level = "info";
    std::size_t max_register = qnet::engine::kDefaultMaxRegisterQubits;
    std::uint64_t seed = 0;

    auto* run_cmd = app.add_subcommand("run", "Start a node and serve until interrupted");
    run_cmd->add_option("--config", config, "Network configuration file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--name", name, "Name of this node in the configuration")->required();
    run_cmd->add_option("--max-register-qubits", max_register, "Largest register a merge may create")
        ->check(CLI::Range(1, 30));
    auto* seed_opt = run_cmd->add_option("--seed", seed, "Seed for measurement sampling");
    run_cmd->add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    auto* status_cmd = app.add_subcommand("status", "Print the status of a running node");
    status_cmd->add_option("--config", config, "Network configuration file")->required()->check(CLI::ExistingFile);
    status_cmd->add_option("--name", name, "Node to query")->required();
    auto* dump_flag = status_cmd->add_flag("--dump", "Print the full state dump instead");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*run_cmd) {
            return run(config, name, max_register, *seed_opt ? std::optional(seed) : std::nullopt);
        }
        const auto dir = qnet::netconf::load_config(config);
        const auto& entry = dir.at(name);
        std::cout << (*dump_flag ? qnet::netconf::fetch_dump(entry) : qnet::netconf::fetch_status(entry));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "qnetnode: " << e.what() << '\n';
        return 1;
    }
}
