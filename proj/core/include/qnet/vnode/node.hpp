#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "qnet/dlock/lock_table.hpp"
#include "qnet/engine/state_register.hpp"
#include "qnet/netconf/directory.hpp"
#include "qnet/peerlink/mesh.hpp"
#include "qnet/vnode/types.hpp"

namespace qnet::vnode {

/// Thrown when an operation names a simulated qubit that a merge has moved.
struct MovedError : std::exception {
    explicit MovedError(peerlink::MovedTo m) : to(std::move(m)) {}
    const char* what() const noexcept override { return "simulated qubit moved"; }
    peerlink::MovedTo to;
};

/// Simulation state of one network node.
///
/// Applications address qubits by 16-bit ids owned by an application. Each
/// id maps to a simulated qubit, which may be hosted by any node; the host
/// owns the register and serializes work on it through its lock table.
/// Two-qubit gates across registers merge the target's register into the
/// control's, at the control's host, and broadcast the new locations.
class Node {
public:
    /// `mesh` may be null for a stand-alone node without peers.
    Node(std::string name, netconf::NodeDirectory directory, NodeConfig config, peerlink::PeerMesh* mesh);
    ~Node();
    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    const std::string& name() const { return name_; }
    const NodeConfig& config() const { return config_; }
    const netconf::NodeDirectory& directory() const { return directory_; }

    QubitId create_qubit(AppId app);
    void apply_gate(AppId app, QubitId q, engine::GateCode code, std::uint8_t step = 0);
    void apply_two_qubit(AppId app, QubitId control, QubitId target, engine::GateCode code);
    int measure_qubit(AppId app, QubitId q, bool inplace);
    void send_qubit(AppId app, QubitId q, const std::string& dest, AppId dest_app);
    QubitId recv_qubit(AppId app);
    QubitId recv_qubit(AppId app, std::chrono::milliseconds timeout);
    std::pair<QubitId, EntanglementId> create_epr(AppId app, const std::string& peer, AppId peer_app);
    std::pair<QubitId, EntanglementId> recv_epr(AppId app);
    std::pair<QubitId, EntanglementId> recv_epr(AppId app, std::chrono::milliseconds timeout);
    std::uint64_t get_time(AppId app, QubitId q);
    void reset_qubit(AppId app, QubitId q);
    void release_qubit(AppId app, QubitId q);
    /// Bell measurement of (q, partner): CNOT, H on q, then both measured (demolition).
    std::pair<int, int> entanglement_swap(AppId app, QubitId q, QubitId partner);

    /// Entry point for requests arriving over peerlink.
    peerlink::PeerReply handle_peer(const std::string& from, peerlink::PeerOp op, std::span<const std::uint8_t> body);

    std::string dump();
    NodeStatus status() const;
    std::optional<VirtualQubit> find_virtual(QubitId q) const;
    dlock::LockTable& lock_table() { return locks_; }
    /// Wakes blocked receivers; they fail with Unavailable.
    void shutdown();

private:
    struct RegisterEntry {
        explicit RegisterEntry(engine::StateRegister s) : state(std::move(s)) {}
        engine::StateRegister state;
        std::vector<SimId> qubits;  // index = position
    };
    class TxnGuard;
    struct LocalHold;

    // Resolution and bookkeeping; callers hold mu_.
    VirtualQubit lookup_locked(AppId app, QubitId q) const;
    [[noreturn]] void throw_missing_locked(SimId sim) const;
    /// Finds a local simulated qubit, waiting out an in-flight merge that reserved its id.
    SimulatedQubit& find_sim_locked(std::unique_lock<std::mutex>& lk, SimId sim);
    std::pair<std::string, SimId> follow_forwards_locked(std::string host, SimId sim) const;
    void apply_moves_locked(std::span<const peerlink::MovedTo> moves);
    QubitId allocate_qubit_id_locked();
    QubitId insert_virtual_locked(AppId app, std::string host, SimId sim);
    void note_register_size_locked(std::size_t n);
    void erase_from_register_locked(RegisterEntry& reg, SimId sim);

    dlock::TxnId new_txn();
    LocalHold hold_local(SimId sim);

    template <class F>
    auto with_virtual(AppId app, QubitId q, F&& f);
    peerlink::PeerReply call_peer(const std::string& peer, peerlink::PeerOp op, Bytes body);
    void absorb_moves(std::span<const peerlink::MovedTo> moves);
    void broadcast_moves(const std::vector<peerlink::MovedTo>& moves);
    QubitId deliver(const std::string& dest, const peerlink::XferReq& req);

    // Host-side work on locally simulated qubits.
    SimId host_create(std::uint64_t created_at);
    void host_apply_gate(SimId sim, engine::GateCode code, std::uint8_t step);
    void host_apply_two(SimId control, const std::string& target_host, SimId target, engine::GateCode code);
    void host_two_local(SimId control, SimId target, engine::GateCode code);
    void host_two_remote(SimId control, const std::string& target_host, SimId target, engine::GateCode code);
    peerlink::MeasureResp host_measure(SimId sim, bool inplace);
    void host_remove(SimId sim);
    std::uint64_t host_get_time(SimId sim);
    QubitId host_receive(const peerlink::XferReq& req);
    peerlink::LockAcqResp host_lock_acquire(const peerlink::LockAcqReq& req);
    peerlink::RegisterPayload host_merge_pull(const std::string& requester, const peerlink::MergePullReq& req);

    std::string name_;
    netconf::NodeDirectory directory_;
    NodeConfig config_;
    peerlink::PeerMesh* mesh_;
    std::uint64_t node_index_ = 0;

    mutable std::mutex mu_;
    std::unordered_map<QubitId, VirtualQubit> virtuals_;
    std::unordered_set<QubitId> released_;
    QubitId next_qubit_id_ = 0;
    std::unordered_map<SimId, SimulatedQubit> sims_;
    std::unordered_map<RegisterId, std::unique_ptr<RegisterEntry>> registers_;
    std::map<std::pair<std::string, SimId>, std::pair<std::string, SimId>> forwards_;
    SimId next_sim_ = 1;
    std::set<SimId> incoming_;  // reserved by a merge whose payload has not arrived
    std::condition_variable incoming_cv_;
    RegisterId next_register_ = 1;
    std::map<std::string, std::uint32_t> epr_sequence_;
    std::map<AppId, std::deque<QubitId>> recv_queue_;
    std::map<AppId, std::deque<std::pair<QubitId, EntanglementId>>> epr_queue_;
    std::condition_variable queue_cv_;
    bool shutting_down_ = false;
    std::size_t peak_register_qubits_ = 0;
    std::uint64_t local_merges_ = 0;
    std::uint64_t remote_merges_ = 0;
    std::uint64_t remaps_applied_ = 0;

    std::atomic<std::uint64_t> next_txn_{1};
    dlock::LockTable locks_;
    std::mutex rng_mu_;
    engine::Rng rng_;
};

}  // namespace qnet::vnode
