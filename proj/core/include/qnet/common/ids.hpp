#pragma once

#include <cstdint>
#include <string>

namespace qnet {

using AppId = std::uint16_t;
using QubitId = std::uint16_t;  // application-facing virtual qubit id
using SimId = std::uint64_t;    // node-local simulated qubit id
using RegisterId = std::uint64_t;

/// Identifies one produced EPR pair between two named nodes.
struct EntanglementId {
    std::string node_a;  // creator
    std::string node_b;  // receiver
    std::uint32_t sequence = 0;
    std::uint64_t created_at = 0;  // ms since epoch

    friend bool operator==(const EntanglementId&, const EntanglementId&) = default;
};

}  // namespace qnet
