#include "qnet/vnode/node_dump.hpp"

#include <sstream>

#include "qnet/common/error.hpp"

namespace qnet::vnode {

const engine::RegisterDump* NodeSnapshot::find_register(RegisterId id) const {
    for (const auto& r : registers)
        if (r.register_id == id) return &r;
    return nullptr;
}

const SimulatedQubit* NodeSnapshot::find_sim(SimId id) const {
    for (const auto& s : sims)
        if (s.id == id) return &s;
    return nullptr;
}

const VirtualQubit* NodeSnapshot::find_virtual(QubitId id) const {
    for (const auto& v : virtuals)
        if (v.id == id) return &v;
    return nullptr;
}

NodeSnapshot parse_node_dump(std::string_view text) {
    NodeSnapshot snap;
    std::istringstream lines{std::string(text)};
    std::string line;
    bool header = false;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string tag;
        in >> tag;
        bool ok = true;
        if (tag == "node") {
            ok = static_cast<bool>(in >> snap.name >> snap.peak_register_qubits);
            header = true;
        } else if (tag == "register") {
            snap.registers.push_back(engine::parse_register_dump(line));
        } else if (tag == "sim") {
            SimulatedQubit s;
            ok = static_cast<bool>(in >> s.id >> s.register_id >> s.position >> s.created_at);
            snap.sims.push_back(s);
        } else if (tag == "virt") {
            VirtualQubit v;
            ok = static_cast<bool>(in >> v.id >> v.owner >> v.sim_host >> v.sim);
            snap.virtuals.push_back(std::move(v));
        } else {
            ok = false;
        }
        if (!ok) fail(ErrorCode::Protocol, "malformed node dump line: " + line);
    }
    if (!header) fail(ErrorCode::Protocol, "node dump has no header line");
    return snap;
}

}  // namespace qnet::vnode
