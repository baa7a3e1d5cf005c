#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "qnet/engine/state_register.hpp"
#include "qnet/vnode/types.hpp"

namespace qnet::vnode {

/// Parsed form of Node::dump():
///
///   node <name> <peak_register_qubits>
///   register <id> <n> re,im ...          (engine debug dump)
///   sim <sim_id> <register_id> <position> <created_at>
///   virt <qubit_id> <app_id> <sim_host> <sim_id>
struct NodeSnapshot {
    std::string name;
    std::size_t peak_register_qubits = 0;
    std::vector<engine::RegisterDump> registers;
    std::vector<SimulatedQubit> sims;
    std::vector<VirtualQubit> virtuals;

    const engine::RegisterDump* find_register(RegisterId id) const;
    const SimulatedQubit* find_sim(SimId id) const;
    const VirtualQubit* find_virtual(QubitId id) const;
};

NodeSnapshot parse_node_dump(std::string_view text);

}  // namespace qnet::vnode
