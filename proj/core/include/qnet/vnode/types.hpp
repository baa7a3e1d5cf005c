#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnet/common/ids.hpp"
#include "qnet/dlock/lock_table.hpp"
#include "qnet/engine/state_register.hpp"

namespace qnet::vnode {

struct NodeConfig {
    std::size_t max_register_qubits = engine::kDefaultMaxRegisterQubits;
    /// Simulated qubits this node may host before NEW fails with no-qubit.
    std::size_t max_qubits = 4096;
    /// Per-application bound on received-but-unclaimed qubits (and EPR halves).
    std::size_t recv_queue_limit = 64;
    std::chrono::milliseconds recv_timeout{30000};
    dlock::BackoffPolicy backoff{};
    /// Seeds measurement sampling; nullopt draws from std::random_device.
    std::optional<std::uint64_t> seed;
    /// Forwarding hops followed before an operation gives up.
    int max_redirects = 64;
};

/// Node-local binding of a qubit to a position inside a local register.
struct SimulatedQubit {
    SimId id = 0;
    RegisterId register_id = 0;
    std::size_t position = 0;
    bool active = true;
    std::uint64_t created_at = 0;  // ms since epoch, stamped by the simulating node

    friend bool operator==(const SimulatedQubit&, const SimulatedQubit&) = default;
};

/// Application-visible qubit; the simulated qubit may live on another node.
struct VirtualQubit {
    QubitId id = 0;
    AppId owner = 0;
    std::string sim_host;
    SimId sim = 0;

    friend bool operator==(const VirtualQubit&, const VirtualQubit&) = default;
};

struct NodeStatus {
    std::string name;
    std::size_t peers = 0;
    std::size_t virtual_qubits = 0;
    std::size_t simulated_qubits = 0;
    std::size_t registers = 0;
    std::size_t peak_register_qubits = 0;
    std::uint64_t local_merges = 0;
    std::uint64_t remote_merges = 0;
    std::uint64_t remaps_applied = 0;
    dlock::LockMetrics locks;
};

/// key=value lines, one per field.
std::string render_status(const NodeStatus& s);

}  // namespace qnet::vnode
