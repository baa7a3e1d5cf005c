#include "qnet/vnode/node.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <random>
#include <thread>

#include "qnet/common/clock.hpp"

namespace qnet::vnode {

using engine::GateCode;
using peerlink::MovedTo;
using peerlink::PeerOp;
using peerlink::PeerReply;

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

engine::Rng& backoff_rng() {
    thread_local engine::Rng rng{std::random_device{}()};
    return rng;
}

void sleep_backoff(const dlock::BackoffPolicy& policy) {
    std::uniform_int_distribution<long> pick(policy.min_backoff.count(),
                                             std::max(policy.min_backoff, policy.max_backoff).count());
    std::this_thread::sleep_for(std::chrono::milliseconds(pick(backoff_rng())));
}

}  // namespace

std::string render_status(const NodeStatus& s) {
    std::string out;
    auto kv = [&](std::string_view k, auto v) {
        out += k;
        out += '=';
        if constexpr (std::is_convertible_v<decltype(v), std::string_view>) out += v;
        else out += std::to_string(v);
        out += '\n';
    };
    kv("node", s.name);
    kv("peers", s.peers);
    kv("virtual_qubits", s.virtual_qubits);
    kv("simulated_qubits", s.simulated_qubits);
    kv("registers", s.registers);
    kv("peak_register_qubits", s.peak_register_qubits);
    kv("local_merges", s.local_merges);
    kv("remote_merges", s.remote_merges);
    kv("remaps_applied", s.remaps_applied);
    kv("lock_acquisitions", s.locks.acquisitions);
    kv("lock_conflicts", s.locks.conflicts);
    kv("lock_backoffs", s.locks.backoffs);
    kv("lock_timeouts", s.locks.timeouts);
    return out;
}

/// Releases whatever a transaction still holds on this node when it leaves scope.
class Node::TxnGuard {
public:
    TxnGuard(dlock::LockTable& table, dlock::TxnId txn) : table_(table), txn_(txn) {}
    ~TxnGuard() { table_.release_if_held(txn_); }
    TxnGuard(const TxnGuard&) = delete;
    TxnGuard& operator=(const TxnGuard&) = delete;

private:
    dlock::LockTable& table_;
    dlock::TxnId txn_;
};

/// Register and qubit lock for one local simulated qubit.
struct Node::LocalHold {
    dlock::LockTable* table = nullptr;
    dlock::TxnId txn = 0;
    RegisterEntry* reg = nullptr;

    LocalHold(dlock::LockTable& t, dlock::TxnId id, RegisterEntry* r) : table(&t), txn(id), reg(r) {}
    LocalHold(LocalHold&& o) noexcept : table(o.table), txn(o.txn), reg(o.reg) { o.table = nullptr; }
    LocalHold(const LocalHold&) = delete;
    ~LocalHold() {
        if (table) table->release_if_held(txn);
    }
};

Node::Node(std::string name, netconf::NodeDirectory directory, NodeConfig config, peerlink::PeerMesh* mesh)
    : name_(std::move(name)), directory_(std::move(directory)), config_(config), mesh_(mesh) {
    auto idx = directory_.index_of(name_);
    if (!idx) fail(ErrorCode::Config, "node '" + name_ + "' is not in the directory");
    node_index_ = *idx;
    rng_.seed(config_.seed ? (*config_.seed ^ fnv1a(name_)) : std::random_device{}());
}

Node::~Node() { shutdown(); }

void Node::shutdown() {
    {
        std::lock_guard lk(mu_);
        shutting_down_ = true;
    }
    queue_cv_.notify_all();
}

dlock::TxnId Node::new_txn() { return (node_index_ + 1) << 48 | next_txn_++; }

// ---------------------------------------------------------------------------
// Table bookkeeping (mu_ held)

VirtualQubit Node::lookup_locked(AppId app, QubitId q) const {
    auto it = virtuals_.find(q);
    if (it == virtuals_.end()) {
        if (released_.contains(q)) fail(ErrorCode::Expired, "qubit " + std::to_string(q) + " was released");
        fail(ErrorCode::UnknownId, "unknown qubit id " + std::to_string(q) + " at " + name_);
    }
    if (it->second.owner != app) {
        fail(ErrorCode::Denied, "qubit " + std::to_string(q) + " belongs to application " + std::to_string(it->second.owner));
    }
    return it->second;
}

void Node::throw_missing_locked(SimId sim) const {
    auto it = forwards_.find({name_, sim});
    if (it != forwards_.end()) throw MovedError(MovedTo{name_, sim, it->second.first, it->second.second});
    fail(ErrorCode::UnknownId, "no simulated qubit " + std::to_string(sim) + " at " + name_);
}

SimulatedQubit& Node::find_sim_locked(std::unique_lock<std::mutex>& lk, SimId sim) {
    incoming_cv_.wait(lk, [&] { return !incoming_.contains(sim); });
    auto it = sims_.find(sim);
    if (it == sims_.end()) throw_missing_locked(sim);
    return it->second;
}

std::pair<std::string, SimId> Node::follow_forwards_locked(std::string host, SimId sim) const {
    for (int hop = 0; hop < config_.max_redirects; ++hop) {
        auto it = forwards_.find({host, sim});
        if (it == forwards_.end()) break;
        host = it->second.first;
        sim = it->second.second;
    }
    return {std::move(host), sim};
}

void Node::apply_moves_locked(std::span<const MovedTo> moves) {
    for (const auto& m : moves) {
        forwards_[{m.old_host, m.old_sim}] = {m.new_host, m.new_sim};
    }
    for (auto& [id, v] : virtuals_) {
        auto [host, sim] = follow_forwards_locked(v.sim_host, v.sim);
        if (host != v.sim_host || sim != v.sim) {
            v.sim_host = std::move(host);
            v.sim = sim;
            ++remaps_applied_;
        }
    }
}

QubitId Node::allocate_qubit_id_locked() {
    for (std::uint32_t tries = 0; tries <= 0xFFFF; ++tries) {
        QubitId id = next_qubit_id_++;
        if (!virtuals_.contains(id)) {
            released_.erase(id);
            return id;
        }
    }
    fail(ErrorCode::NoQubit, "all 65536 qubit ids are in use at " + name_);
}

QubitId Node::insert_virtual_locked(AppId app, std::string host, SimId sim) {
    auto id = allocate_qubit_id_locked();
    auto [h, s] = follow_forwards_locked(std::move(host), sim);
    virtuals_[id] = VirtualQubit{id, app, std::move(h), s};
    return id;
}

void Node::note_register_size_locked(std::size_t n) { peak_register_qubits_ = std::max(peak_register_qubits_, n); }

void Node::erase_from_register_locked(RegisterEntry& reg, SimId sim) {
    auto pos = sims_.at(sim).position;
    reg.qubits.erase(reg.qubits.begin() + static_cast<std::ptrdiff_t>(pos));
    for (std::size_t p = pos; p < reg.qubits.size(); ++p) sims_.at(reg.qubits[p]).position = p;
    sims_.erase(sim);
    if (reg.qubits.empty()) registers_.erase(reg.state.id());
}

// ---------------------------------------------------------------------------
// Local locking

Node::LocalHold Node::hold_local(SimId sim) {
    const auto txn = new_txn();
    while (true) {
        RegisterId reg;
        {
            std::unique_lock lk(mu_);
            reg = find_sim_locked(lk, sim).register_id;
        }
        const dlock::LockId ids[] = {{name_, dlock::LockKind::Register, reg}, {name_, dlock::LockKind::Qubit, sim}};
        locks_.acquire_all(txn, ids, config_.backoff, backoff_rng());
        {
            std::lock_guard lk(mu_);
            auto it = sims_.find(sim);
            if (it != sims_.end() && it->second.register_id == reg) {
                return LocalHold(locks_, txn, registers_.at(reg).get());
            }
        }
        // Merged away between resolution and locking; resolve again.
        locks_.release_all(txn);
    }
}

// ---------------------------------------------------------------------------
// Host-side operations

SimId Node::host_create(std::uint64_t created_at) {
    // mu_ held by caller.
    const auto reg_id = next_register_++;
    auto entry = std::make_unique<RegisterEntry>(engine::StateRegister(reg_id, config_.max_register_qubits));
    entry->state.add_qubit();
    const auto sim = next_sim_++;
    entry->qubits.push_back(sim);
    registers_.emplace(reg_id, std::move(entry));
    sims_.emplace(sim, SimulatedQubit{sim, reg_id, 0, true, created_at});
    note_register_size_locked(1);
    return sim;
}

void Node::host_apply_gate(SimId sim, GateCode code, std::uint8_t step) {
    if (engine::is_two_qubit(code)) fail(ErrorCode::InvalidOperation, "two-qubit gate needs a target");
    const auto gate = engine::gate_from_command(code, step);
    auto hold = hold_local(sim);
    std::size_t pos;
    {
        std::lock_guard lk(mu_);
        pos = sims_.at(sim).position;
    }
    hold.reg->state.apply_single(pos, gate);
}

peerlink::MeasureResp Node::host_measure(SimId sim, bool inplace) {
    auto hold = hold_local(sim);
    std::size_t pos;
    {
        std::lock_guard lk(mu_);
        pos = sims_.at(sim).position;
    }
    engine::MeasurementOutcome out;
    {
        std::lock_guard rl(rng_mu_);
        out = hold.reg->state.measure(pos, !inplace, rng_);
    }
    if (!inplace) {
        std::lock_guard lk(mu_);
        erase_from_register_locked(*hold.reg, sim);
    }
    return {out.bit, out.probability};
}

void Node::host_remove(SimId sim) {
    auto hold = hold_local(sim);
    std::lock_guard lk(mu_);
    const auto pos = sims_.at(sim).position;
    {
        std::lock_guard rl(rng_mu_);
        hold.reg->state.remove_qubit(pos, rng_);
    }
    erase_from_register_locked(*hold.reg, sim);
}

std::uint64_t Node::host_get_time(SimId sim) {
    std::unique_lock lk(mu_);
    return find_sim_locked(lk, sim).created_at;
}

void Node::host_apply_two(SimId control, const std::string& target_host, SimId target, GateCode code) {
    if (!engine::is_two_qubit(code)) fail(ErrorCode::InvalidOperation, "gate is not a two-qubit gate");
    // Merge policy: the merged register lives where the control is simulated.
    if (target_host == name_) host_two_local(control, target, code);
    else host_two_remote(control, target_host, target, code);
}

void Node::host_two_local(SimId control, SimId target, GateCode code) {
    if (control == target) fail(ErrorCode::InvalidOperation, "control and target are the same qubit");
    const auto gate = engine::gate_from_command(code);
    const auto txn = new_txn();
    TxnGuard guard(locks_, txn);
    while (true) {
        RegisterId rc, rt;
        {
            std::unique_lock lk(mu_);
            rc = find_sim_locked(lk, control).register_id;
            rt = find_sim_locked(lk, target).register_id;
        }
        std::vector<dlock::LockId> ids{{name_, dlock::LockKind::Register, rc},
                                       {name_, dlock::LockKind::Qubit, control},
                                       {name_, dlock::LockKind::Qubit, target}};
        if (rt != rc) ids.push_back({name_, dlock::LockKind::Register, rt});
        locks_.acquire_all(txn, ids, config_.backoff, backoff_rng());

        std::unique_lock lk(mu_);
        auto ci = sims_.find(control);
        auto ti = sims_.find(target);
        if (ci == sims_.end() || ti == sims_.end() || ci->second.register_id != rc || ti->second.register_id != rt) {
            lk.unlock();
            locks_.release_all(txn);
            continue;
        }
        auto& creg = *registers_.at(rc);
        if (rt != rc) {
            auto& treg = *registers_.at(rt);
            const auto offset = creg.state.merge(treg.state);  // throws Resource before mutating
            for (auto s : treg.qubits) {
                auto& sq = sims_.at(s);
                sq.register_id = rc;
                sq.position += offset;
                creg.qubits.push_back(s);
            }
            registers_.erase(rt);
            ++local_merges_;
            note_register_size_locked(creg.state.num_qubits());
        }
        const auto pc = ci->second.position;
        const auto pt = ti->second.position;
        lk.unlock();
        creg.state.apply_two(pc, pt, gate);
        return;
    }
}

void Node::host_two_remote(SimId control, const std::string& target_host, SimId target, GateCode code) {
    const auto gate = engine::gate_from_command(code);
    const auto txn = new_txn();
    TxnGuard guard(locks_, txn);
    const bool local_first = name_ < target_host;
    int expired = 0;

    while (true) {
        RegisterId rc;
        {
            std::unique_lock lk(mu_);
            rc = find_sim_locked(lk, control).register_id;
        }
        const dlock::LockId local_ids[] = {{name_, dlock::LockKind::Register, rc},
                                           {name_, dlock::LockKind::Qubit, control}};
        bool have_local = false;
        bool have_remote = false;
        std::uint16_t remote_qubits = 0;

        auto release_remote = [&] {
            if (have_remote) {
                try {
                    call_peer(target_host, PeerOp::LockRel, peerlink::encode(peerlink::LockRelReq{txn}));
                } catch (const std::exception& e) {
                    spdlog::warn("[{}] LOCK_REL to {} failed: {}", name_, target_host, e.what());
                }
                have_remote = false;
            }
        };
        auto try_local = [&] { return have_local = locks_.try_acquire_all(txn, local_ids); };
        auto try_remote = [&] {
            PeerReply reply;
            try {
                reply = call_peer(target_host, PeerOp::LockAcq, peerlink::encode(peerlink::LockAcqReq{txn, target}));
            } catch (...) {
                locks_.release_if_held(txn);
                throw;
            }
            auto resp = peerlink::decode<peerlink::LockAcqResp>(reply.payload);
            have_remote = resp.granted;
            remote_qubits = resp.register_qubits;
            return have_remote;
        };

        const bool granted = local_first ? (try_local() && try_remote()) : (try_remote() && try_local());
        if (!granted) {
            release_remote();
            locks_.release_if_held(txn);
            if (++expired > config_.backoff.attempts) {
                fail(ErrorCode::Timeout, "could not lock registers for merge with " + target_host);
            }
            locks_.note_backoff();
            sleep_backoff(config_.backoff);
            continue;
        }

        SimId base;
        RegisterEntry* creg;
        {
            std::lock_guard lk(mu_);
            auto ci = sims_.find(control);
            if (ci == sims_.end() || ci->second.register_id != rc) {
                creg = nullptr;
            } else {
                creg = registers_.at(rc).get();
            }
            base = next_sim_;
            next_sim_ += remote_qubits;
            if (creg) {
                for (SimId s = base; s < base + remote_qubits; ++s) incoming_.insert(s);
            }
        }
        auto clear_incoming = [&] {
            {
                std::lock_guard lk(mu_);
                for (SimId s = base; s < base + remote_qubits; ++s) incoming_.erase(s);
            }
            incoming_cv_.notify_all();
        };
        if (creg == nullptr) {
            release_remote();
            locks_.release_all(txn);
            continue;
        }
        if (creg->state.num_qubits() + remote_qubits > config_.max_register_qubits) {
            clear_incoming();
            release_remote();
            fail(ErrorCode::Resource, "merged register would exceed " + std::to_string(config_.max_register_qubits) +
                                          " qubits");
        }

        peerlink::RegisterPayload payload;
        try {
            auto reply = call_peer(target_host, PeerOp::MergePull,
                                   peerlink::encode(peerlink::MergePullReq{txn, target, base}));
            payload = peerlink::decode<peerlink::RegisterPayload>(reply.payload);
        } catch (...) {
            clear_incoming();
            release_remote();
            throw;
        }
        auto shipped = engine::StateRegister::from_amplitudes(0, std::move(payload.amplitudes), config_.max_register_qubits);

        std::vector<MovedTo> moves;
        SimId new_target = 0;
        std::size_t pc, pt;
        {
            std::lock_guard lk(mu_);
            const auto offset = creg->state.merge(shipped);
            creg->qubits.resize(offset + shipped.num_qubits());
            for (const auto& q : payload.qubits) {
                const SimId fresh = base + q.position;
                sims_[fresh] = SimulatedQubit{fresh, rc, offset + q.position, true, q.created_at};
                creg->qubits[offset + q.position] = fresh;
                moves.push_back(MovedTo{target_host, q.sim, name_, fresh});
                if (q.sim == target) new_target = fresh;
            }
            apply_moves_locked(moves);
            for (SimId s = base; s < base + remote_qubits; ++s) incoming_.erase(s);
            ++remote_merges_;
            note_register_size_locked(creg->state.num_qubits());
            pc = sims_.at(control).position;
            pt = sims_.at(new_target).position;
        }
        incoming_cv_.notify_all();
        // The shipping node's lock entries refer to a register that no longer exists there.
        release_remote();
        broadcast_moves(moves);
        creg->state.apply_two(pc, pt, gate);
        return;
    }
}

peerlink::LockAcqResp Node::host_lock_acquire(const peerlink::LockAcqReq& req) {
    RegisterId reg;
    {
        std::unique_lock lk(mu_);
        reg = find_sim_locked(lk, req.sim).register_id;
    }
    const dlock::LockId ids[] = {{name_, dlock::LockKind::Register, reg}, {name_, dlock::LockKind::Qubit, req.sim}};
    if (!locks_.try_acquire_all(req.txn, ids)) return {false, 0};
    std::lock_guard lk(mu_);
    auto it = sims_.find(req.sim);
    if (it == sims_.end() || it->second.register_id != reg) {
        locks_.release_all(req.txn);
        return {false, 0};
    }
    return {true, static_cast<std::uint16_t>(registers_.at(reg)->state.num_qubits())};
}

peerlink::RegisterPayload Node::host_merge_pull(const std::string& requester, const peerlink::MergePullReq& req) {
    if (requester.empty()) fail(ErrorCode::Protocol, "MERGE_PULL from an anonymous connection");
    std::unique_lock lk(mu_);
    const auto reg_id = find_sim_locked(lk, req.sim).register_id;
    if (!locks_.holds(req.txn, {name_, dlock::LockKind::Register, reg_id}) ||
        !locks_.holds(req.txn, {name_, dlock::LockKind::Qubit, req.sim})) {
        fail(ErrorCode::Protocol, "MERGE_PULL without holding the register and qubit locks");
    }
    auto& reg = *registers_.at(reg_id);
    peerlink::RegisterPayload payload;
    payload.num_qubits = static_cast<std::uint16_t>(reg.state.num_qubits());
    payload.amplitudes.assign(reg.state.amplitudes().begin(), reg.state.amplitudes().end());
    std::vector<MovedTo> moves;
    for (std::size_t p = 0; p < reg.qubits.size(); ++p) {
        const auto sim = reg.qubits[p];
        payload.qubits.push_back({sim, static_cast<std::uint16_t>(p), sims_.at(sim).created_at});
        moves.push_back(MovedTo{name_, sim, requester, req.new_base + p});
        sims_.erase(sim);
    }
    registers_.erase(reg_id);
    apply_moves_locked(moves);
    return payload;
}

QubitId Node::host_receive(const peerlink::XferReq& req) {
    QubitId id;
    {
        std::lock_guard lk(mu_);
        if (shutting_down_) fail(ErrorCode::Unavailable, name_ + " is shutting down");
        if (req.epr) {
            auto& q = epr_queue_[req.dest_app];
            if (q.size() >= config_.recv_queue_limit) {
                fail(ErrorCode::Unavailable, "EPR queue of application " + std::to_string(req.dest_app) + " at " + name_ + " is full");
            }
            id = insert_virtual_locked(req.dest_app, req.sim_host, req.sim);
            q.emplace_back(id, req.entanglement);
        } else {
            auto& q = recv_queue_[req.dest_app];
            if (q.size() >= config_.recv_queue_limit) {
                fail(ErrorCode::Unavailable, "receive queue of application " + std::to_string(req.dest_app) + " at " + name_ + " is full");
            }
            id = insert_virtual_locked(req.dest_app, req.sim_host, req.sim);
            q.push_back(id);
        }
    }
    queue_cv_.notify_all();
    return id;
}

// ---------------------------------------------------------------------------
// Peer plumbing

PeerReply Node::call_peer(const std::string& peer, PeerOp op, Bytes body) {
    if (mesh_ == nullptr) fail(ErrorCode::Unavailable, "node " + name_ + " has no peer connections");
    auto reply = mesh_->call(peer, op, std::move(body));
    if (reply.status == peerlink::ReplyStatus::Moved) throw MovedError(reply.moved);
    reply.raise_if_error();
    return reply;
}

void Node::absorb_moves(std::span<const MovedTo> moves) {
    std::lock_guard lk(mu_);
    apply_moves_locked(moves);
}

void Node::broadcast_moves(const std::vector<MovedTo>& moves) {
    if (mesh_ == nullptr || moves.empty()) return;
    const auto body = peerlink::encode(peerlink::RemapReq{moves});
    for (const auto& peer : mesh_->connected_peers()) {
        try {
            mesh_->call(peer, PeerOp::Remap, body).raise_if_error();
        } catch (const std::exception& e) {
            spdlog::error("[{}] remap notification to {} failed: {}", name_, peer, e.what());
        }
    }
}

template <class F>
auto Node::with_virtual(AppId app, QubitId q, F&& f) {
    for (int hop = 0;; ++hop) {
        VirtualQubit v;
        {
            std::lock_guard lk(mu_);
            v = lookup_locked(app, q);
        }
        try {
            return f(v);
        } catch (const MovedError& m) {
            if (hop >= config_.max_redirects) fail(ErrorCode::Internal, "too many forwarding hops for qubit " + std::to_string(q));
            absorb_moves(std::span(&m.to, 1));
        }
    }
}

QubitId Node::deliver(const std::string& dest, const peerlink::XferReq& req) {
    if (dest == name_) return host_receive(req);
    auto reply = call_peer(dest, req.epr ? PeerOp::EprOffer : PeerOp::XferQubit, peerlink::encode(req));
    ByteReader r(reply.payload);
    return r.u16();
}

// ---------------------------------------------------------------------------
// Application-facing operations

QubitId Node::create_qubit(AppId app) {
    std::lock_guard lk(mu_);
    if (sims_.size() >= config_.max_qubits) {
        fail(ErrorCode::NoQubit, name_ + " is at its capacity of " + std::to_string(config_.max_qubits) + " qubits");
    }
    const auto id = allocate_qubit_id_locked();
    const auto sim = host_create(now_millis());
    virtuals_[id] = VirtualQubit{id, app, name_, sim};
    return id;
}

void Node::apply_gate(AppId app, QubitId q, GateCode code, std::uint8_t step) {
    with_virtual(app, q, [&](const VirtualQubit& v) {
        if (v.sim_host == name_) {
            host_apply_gate(v.sim, code, step);
        } else {
            call_peer(v.sim_host, PeerOp::ApplyGate, peerlink::encode(peerlink::ApplyGateReq{v.sim, code, step}));
        }
    });
}

void Node::apply_two_qubit(AppId app, QubitId control, QubitId target, GateCode code) {
    if (control == target) fail(ErrorCode::InvalidOperation, "control and target are the same qubit");
    if (!engine::is_two_qubit(code)) fail(ErrorCode::InvalidOperation, "gate is not a two-qubit gate");
    for (int hop = 0;; ++hop) {
        VirtualQubit vc, vt;
        {
            std::lock_guard lk(mu_);
            vc = lookup_locked(app, control);
            vt = lookup_locked(app, target);
        }
        try {
            if (vc.sim_host == name_) {
                host_apply_two(vc.sim, vt.sim_host, vt.sim, code);
            } else {
                call_peer(vc.sim_host, PeerOp::ApplyTwo,
                          peerlink::encode(peerlink::ApplyTwoReq{vc.sim, vt.sim_host, vt.sim, code}));
            }
            return;
        } catch (const MovedError& m) {
            if (hop >= config_.max_redirects) fail(ErrorCode::Internal, "too many forwarding hops");
            absorb_moves(std::span(&m.to, 1));
        }
    }
}

int Node::measure_qubit(AppId app, QubitId q, bool inplace) {
    auto resp = with_virtual(app, q, [&](const VirtualQubit& v) {
        if (v.sim_host == name_) return host_measure(v.sim, inplace);
        auto reply = call_peer(v.sim_host, PeerOp::Measure, peerlink::encode(peerlink::MeasureReq{v.sim, inplace}));
        return peerlink::decode<peerlink::MeasureResp>(reply.payload);
    });
    if (!inplace) {
        std::lock_guard lk(mu_);
        virtuals_.erase(q);
    }
    return resp.bit;
}

void Node::send_qubit(AppId app, QubitId q, const std::string& dest, AppId dest_app) {
    if (!directory_.find(dest)) fail(ErrorCode::Config, "unknown destination node '" + dest + "'");
    VirtualQubit v;
    {
        std::lock_guard lk(mu_);
        v = lookup_locked(app, q);
        virtuals_.erase(q);
    }
    try {
        deliver(dest, peerlink::XferReq{dest_app, v.sim_host, v.sim, false, {}});
    } catch (...) {
        std::lock_guard lk(mu_);
        auto [host, sim] = follow_forwards_locked(v.sim_host, v.sim);
        virtuals_[q] = VirtualQubit{q, app, std::move(host), sim};
        throw;
    }
}

QubitId Node::recv_qubit(AppId app) { return recv_qubit(app, config_.recv_timeout); }

QubitId Node::recv_qubit(AppId app, std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    auto& q = recv_queue_[app];
    if (!queue_cv_.wait_for(lk, timeout, [&] { return shutting_down_ || !q.empty(); })) {
        fail(ErrorCode::Timeout, "no qubit arrived for application " + std::to_string(app) + " at " + name_);
    }
    if (q.empty()) fail(ErrorCode::Unavailable, name_ + " is shutting down");
    auto id = q.front();
    q.pop_front();
    return id;
}

std::pair<QubitId, EntanglementId> Node::create_epr(AppId app, const std::string& peer, AppId peer_app) {
    if (!directory_.find(peer)) fail(ErrorCode::Config, "unknown peer node '" + peer + "'");
    {
        std::lock_guard lk(mu_);
        if (sims_.size() + 2 > config_.max_qubits) fail(ErrorCode::NoQubit, name_ + " has no room for an EPR pair");
    }
    const auto a = create_qubit(app);
    const auto b = create_qubit(app);
    EntanglementId ent;
    try {
        apply_gate(app, a, GateCode::H);
        apply_two_qubit(app, a, b, GateCode::CNot);
        {
            std::lock_guard lk(mu_);
            ent = EntanglementId{name_, peer, ++epr_sequence_[peer], now_millis()};
        }
        VirtualQubit vb;
        {
            std::lock_guard lk(mu_);
            vb = lookup_locked(app, b);
            virtuals_.erase(b);
        }
        peerlink::XferReq req{peer_app, vb.sim_host, vb.sim, true, ent};
        try {
            deliver(peer, req);
        } catch (...) {
            std::lock_guard lk(mu_);
            auto [host, sim] = follow_forwards_locked(vb.sim_host, vb.sim);
            virtuals_[b] = VirtualQubit{b, app, std::move(host), sim};
            throw;
        }
    } catch (...) {
        for (auto q : {a, b}) {
            try {
                release_qubit(app, q);
            } catch (const std::exception&) {
            }
        }
        throw;
    }
    return {a, ent};
}

std::pair<QubitId, EntanglementId> Node::recv_epr(AppId app) { return recv_epr(app, config_.recv_timeout); }

std::pair<QubitId, EntanglementId> Node::recv_epr(AppId app, std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    auto& q = epr_queue_[app];
    if (!queue_cv_.wait_for(lk, timeout, [&] { return shutting_down_ || !q.empty(); })) {
        fail(ErrorCode::Timeout, "no EPR half arrived for application " + std::to_string(app) + " at " + name_);
    }
    if (q.empty()) fail(ErrorCode::Unavailable, name_ + " is shutting down");
    auto out = q.front();
    q.pop_front();
    return out;
}

std::uint64_t Node::get_time(AppId app, QubitId q) {
    return with_virtual(app, q, [&](const VirtualQubit& v) -> std::uint64_t {
        if (v.sim_host == name_) return host_get_time(v.sim);
        auto reply = call_peer(v.sim_host, PeerOp::GetTime, peerlink::encode(peerlink::SimReq{v.sim}));
        ByteReader r(reply.payload);
        return r.u64();
    });
}

void Node::reset_qubit(AppId app, QubitId q) {
    if (measure_qubit(app, q, /*inplace=*/true) == 1) apply_gate(app, q, GateCode::X);
}

void Node::release_qubit(AppId app, QubitId q) {
    with_virtual(app, q, [&](const VirtualQubit& v) {
        if (v.sim_host == name_) host_remove(v.sim);
        else call_peer(v.sim_host, PeerOp::Remove, peerlink::encode(peerlink::SimReq{v.sim}));
    });
    std::lock_guard lk(mu_);
    virtuals_.erase(q);
    released_.insert(q);
}

std::pair<int, int> Node::entanglement_swap(AppId app, QubitId q, QubitId partner) {
    apply_two_qubit(app, q, partner, GateCode::CNot);
    apply_gate(app, q, GateCode::H);
    const int a = measure_qubit(app, q, false);
    const int b = measure_qubit(app, partner, false);
    return {a, b};
}

// ---------------------------------------------------------------------------
// Peer request dispatch

PeerReply Node::handle_peer(const std::string& from, PeerOp op, std::span<const std::uint8_t> body) {
    try {
        switch (op) {
            case PeerOp::Hello: return PeerReply::ok(ByteWriter().str(name_).take());
            case PeerOp::ApplyGate: {
                auto req = peerlink::decode<peerlink::ApplyGateReq>(body);
                host_apply_gate(req.sim, req.code, req.step);
                return PeerReply::ok();
            }
            case PeerOp::ApplyTwo: {
                auto req = peerlink::decode<peerlink::ApplyTwoReq>(body);
                host_apply_two(req.control_sim, req.target_host, req.target_sim, req.code);
                return PeerReply::ok();
            }
            case PeerOp::Measure: {
                auto req = peerlink::decode<peerlink::MeasureReq>(body);
                return PeerReply::ok(peerlink::encode(host_measure(req.sim, req.inplace)));
            }
            case PeerOp::Remove: {
                host_remove(peerlink::decode<peerlink::SimReq>(body).sim);
                return PeerReply::ok();
            }
            case PeerOp::MergePull: {
                auto req = peerlink::decode<peerlink::MergePullReq>(body);
                return PeerReply::ok(peerlink::encode(host_merge_pull(from, req)));
            }
            case PeerOp::XferQubit:
            case PeerOp::EprOffer: {
                auto req = peerlink::decode<peerlink::XferReq>(body);
                if (req.epr != (op == PeerOp::EprOffer)) fail(ErrorCode::Protocol, "EPR flag does not match op");
                return PeerReply::ok(ByteWriter().u16(host_receive(req)).take());
            }
            case PeerOp::LockAcq: {
                auto req = peerlink::decode<peerlink::LockAcqReq>(body);
                return PeerReply::ok(peerlink::encode(host_lock_acquire(req)));
            }
            case PeerOp::LockRel: {
                auto req = peerlink::decode<peerlink::LockRelReq>(body);
                locks_.release_if_held(req.txn);
                return PeerReply::ok();
            }
            case PeerOp::GetTime: {
                auto req = peerlink::decode<peerlink::SimReq>(body);
                return PeerReply::ok(ByteWriter().u64(host_get_time(req.sim)).take());
            }
            case PeerOp::NodeStateDump: {
                // Empty body: full dump; a single 1 byte: status lines.
                auto text = (body.size() == 1 && body[0] == 1) ? render_status(status()) : dump();
                return PeerReply::ok(Bytes(text.begin(), text.end()));
            }
            case PeerOp::Remap: {
                auto req = peerlink::decode<peerlink::RemapReq>(body);
                absorb_moves(req.moves);
                return PeerReply::ok();
            }
        }
        fail(ErrorCode::Protocol, "unhandled peer op");
    } catch (const MovedError& m) {
        return PeerReply::forward(m.to);
    }
}

// ---------------------------------------------------------------------------
// Inspection

std::string Node::dump() {
    // Lock every register so amplitudes are not read mid-update.
    const auto txn = new_txn();
    TxnGuard guard(locks_, txn);
    while (true) {
        std::vector<dlock::LockId> ids;
        {
            std::lock_guard lk(mu_);
            for (const auto& [id, _] : registers_) ids.push_back({name_, dlock::LockKind::Register, id});
        }
        if (!ids.empty()) locks_.acquire_all(txn, ids, config_.backoff, backoff_rng());
        std::lock_guard lk(mu_);
        bool same = ids.size() == registers_.size() &&
                    std::all_of(ids.begin(), ids.end(), [&](const auto& l) { return registers_.contains(l.id); });
        if (!same) {
            locks_.release_if_held(txn);
            continue;
        }
        std::string out = "node " + name_ + " " + std::to_string(peak_register_qubits_) + "\n";
        std::vector<RegisterId> reg_ids;
        for (const auto& [id, _] : registers_) reg_ids.push_back(id);
        std::sort(reg_ids.begin(), reg_ids.end());
        for (auto id : reg_ids) out += engine::dump_register(registers_.at(id)->state) + "\n";
        std::vector<SimId> sim_ids;
        for (const auto& [id, _] : sims_) sim_ids.push_back(id);
        std::sort(sim_ids.begin(), sim_ids.end());
        for (auto id : sim_ids) {
            const auto& s = sims_.at(id);
            out += "sim " + std::to_string(s.id) + " " + std::to_string(s.register_id) + " " + std::to_string(s.position) +
                   " " + std::to_string(s.created_at) + "\n";
        }
        std::vector<QubitId> vids;
        for (const auto& [id, _] : virtuals_) vids.push_back(id);
        std::sort(vids.begin(), vids.end());
        for (auto id : vids) {
            const auto& v = virtuals_.at(id);
            out += "virt " + std::to_string(v.id) + " " + std::to_string(v.owner) + " " + v.sim_host + " " +
                   std::to_string(v.sim) + "\n";
        }
        return out;
    }
}

NodeStatus Node::status() const {
    NodeStatus s;
    s.name = name_;
    s.peers = mesh_ ? mesh_->peer_count() : 0;
    {
        std::lock_guard lk(mu_);
        s.virtual_qubits = virtuals_.size();
        s.simulated_qubits = sims_.size();
        s.registers = registers_.size();
        s.peak_register_qubits = peak_register_qubits_;
        s.local_merges = local_merges_;
        s.remote_merges = remote_merges_;
        s.remaps_applied = remaps_applied_;
    }
    s.locks = locks_.metrics();
    return s;
}

std::optional<VirtualQubit> Node::find_virtual(QubitId q) const {
    std::lock_guard lk(mu_);
    auto it = virtuals_.find(q);
    if (it == virtuals_.end()) return std::nullopt;
    return it->second;
}

}  // namespace qnet::vnode
