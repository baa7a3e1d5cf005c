#include "qnet/bench/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include "qnet/bench/classical.hpp"
#include "qnet/vnode/node_dump.hpp"

namespace qnet::bench {

using cqc::CqcClient;
using cqc::Instr;
using Clock = std::chrono::steady_clock;

namespace {

constexpr AppId kApp = 1;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

vnode::NodeConfig seeded(const RunOptions& opts) {
    auto cfg = opts.node;
    cfg.seed = opts.seed;
    return cfg;
}

/// Classical inbox that can wait for a specific kind of message while
/// keeping others for later.
class Inbox {
public:
    explicit Inbox(std::chrono::milliseconds timeout) : timeout_(timeout) {}
    std::uint16_t port() const { return endpoint_.port(); }

    Bytes take(std::uint8_t tag) {
        for (auto it = stash_.begin(); it != stash_.end(); ++it) {
            if (it->front() == tag) {
                auto msg = std::move(*it);
                stash_.erase(it);
                return msg;
            }
        }
        while (true) {
            auto msg = endpoint_.recv(timeout_);
            if (msg.empty()) fail(ErrorCode::Protocol, "empty classical message");
            if (msg.front() == tag) return msg;
            stash_.push_back(std::move(msg));
        }
    }

private:
    ClassicalEndpoint endpoint_;
    std::chrono::milliseconds timeout_;
    std::vector<Bytes> stash_;
};

constexpr std::uint8_t kBits = 'B';
constexpr std::uint8_t kReady = 'R';

/// Bell measurement of (q, e) after the EPR half `e` is shared with the receiver.
std::pair<std::uint8_t, std::uint8_t> teleport_out(CqcClient& c, QubitId q, QubitId e) {
    auto cnot = CqcClient::command(q, Instr::CNot);
    cnot.extra->extra_qubit_id = e;
    auto replies = c.execute({cqc::MsgType::Command, c.app_id(),
                              {cnot, CqcClient::command(q, Instr::H), CqcClient::command(q, Instr::Measure),
                               CqcClient::command(e, Instr::Measure)}});
    if (replies.size() != 2) fail(ErrorCode::Protocol, "teleport: expected two measurement outcomes");
    return {replies[0].outcome, replies[1].outcome};
}

void correct(CqcClient& c, QubitId b, std::uint8_t m1, std::uint8_t m2) {
    std::vector<cqc::Command> cmds;
    if (m2) cmds.push_back(CqcClient::command(b, Instr::X));
    if (m1) cmds.push_back(CqcClient::command(b, Instr::Z));
    if (!cmds.empty()) c.execute({cqc::MsgType::Command, c.app_id(), cmds});
}

void apply_all(CqcClient& c, QubitId q, const std::vector<Instr>& gates) {
    if (gates.empty()) return;
    std::vector<cqc::Command> cmds;
    for (auto g : gates) cmds.push_back(CqcClient::command(q, g));
    c.execute({cqc::MsgType::Command, c.app_id(), cmds});
}

std::vector<Instr> reversed(std::vector<Instr> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

void send_bits(std::uint16_t port, std::uint8_t m1, std::uint8_t m2) {
    const std::uint8_t msg[] = {kBits, m1, m2};
    ClassicalEndpoint::send(port, msg);
}

struct RingPlan {
    std::size_t n;
    RingMode mode;
    std::size_t laps;
    PauliState state;
};

/// One node's part of the ring. Returns the final outcome at n0 (after
/// undoing the preparation), or -1 for the other nodes.
int ring_role(std::size_t i, const RingPlan& plan, LocalNetwork& net, CqcClient& c, std::vector<std::unique_ptr<Inbox>>& inboxes) {
    const auto n = plan.n;
    const auto next = (i + 1) % n;
    const auto prev = (i + n - 1) % n;
    const auto next_addr = net.cqc_address(net.name(next));
    auto& inbox = *inboxes[i];

    std::vector<QubitId> out_pairs, in_pairs;
    if (plan.mode == RingMode::EprFirst) {
        for (std::size_t l = 0; l < plan.laps; ++l) out_pairs.push_back(c.epr(next_addr, kApp).first);
        for (std::size_t l = 0; l < plan.laps; ++l) in_pairs.push_back(c.recv_epr().first);
        const std::uint8_t ready[] = {kReady};
        ClassicalEndpoint::send(inboxes[prev]->port(), ready);
        inbox.take(kReady);
    }

    auto outgoing = [&](std::size_t lap) {
        return plan.mode == RingMode::EprFirst ? out_pairs[lap] : c.epr(next_addr, kApp).first;
    };
    auto incoming = [&](std::size_t lap) {
        auto b = plan.mode == RingMode::EprFirst ? in_pairs[lap] : c.recv_epr().first;
        auto bits = inbox.take(kBits);
        correct(c, b, bits.at(1), bits.at(2));
        return b;
    };

    if (i == 0) {
        QubitId q = c.new_qubit();
        apply_all(c, q, preparation(plan.state));
        for (std::size_t lap = 0; lap < plan.laps; ++lap) {
            auto [m1, m2] = teleport_out(c, q, outgoing(lap));
            send_bits(inboxes[next]->port(), m1, m2);
            q = incoming(lap);
        }
        apply_all(c, q, reversed(preparation(plan.state)));
        return c.measure(q);
    }
    for (std::size_t lap = 0; lap < plan.laps; ++lap) {
        auto b = incoming(lap);
        auto [m1, m2] = teleport_out(c, b, outgoing(lap));
        send_bits(inboxes[next]->port(), m1, m2);
    }
    return -1;
}

}  // namespace

std::string_view to_string(RingMode m) { return m == RingMode::OnTheFly ? "fly" : "first"; }

std::optional<RingMode> ring_mode_from(std::string_view s) {
    if (s == "fly") return RingMode::OnTheFly;
    if (s == "first") return RingMode::EprFirst;
    return std::nullopt;
}

std::string_view to_string(PauliState s) {
    switch (s) {
        case PauliState::Zero: return "0";
        case PauliState::One: return "1";
        case PauliState::Plus: return "+";
        case PauliState::Minus: return "-";
        case PauliState::PlusI: return "+i";
        case PauliState::MinusI: return "-i";
    }
    return "?";
}

std::vector<Instr> preparation(PauliState s) {
    switch (s) {
        case PauliState::Zero: return {};
        case PauliState::One: return {Instr::X};
        case PauliState::Plus: return {Instr::H};
        case PauliState::Minus: return {Instr::X, Instr::H};
        case PauliState::PlusI: return {Instr::K};
        case PauliState::MinusI: return {Instr::X, Instr::K};
    }
    return {};
}

std::array<engine::Complex, 2> ideal_state(PauliState s) {
    const double r = 1 / std::sqrt(2.0);
    using C = engine::Complex;
    switch (s) {
        case PauliState::Zero: return {C{1, 0}, C{0, 0}};
        case PauliState::One: return {C{0, 0}, C{1, 0}};
        case PauliState::Plus: return {C{r, 0}, C{r, 0}};
        case PauliState::Minus: return {C{r, 0}, C{-r, 0}};
        case PauliState::PlusI: return {C{r, 0}, C{0, r}};
        case PauliState::MinusI: return {C{r, 0}, C{0, -r}};
    }
    return {};
}

double phase_aligned_deviation(std::span<const engine::Complex> a, std::span<const engine::Complex> b) {
    if (a.size() != b.size()) return INFINITY;
    engine::Complex overlap{0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) overlap += std::conj(b[i]) * a[i];
    const auto phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : engine::Complex{1, 0};
    double dev = 0;
    for (std::size_t i = 0; i < a.size(); ++i) dev = std::max(dev, std::abs(a[i] - phase * b[i]));
    return dev;
}

double fair_coin_p_value(std::size_t ones, std::size_t trials) {
    if (trials == 0) return 1;
    const double expected = trials / 2.0;
    const double d1 = ones - expected;
    const double d0 = (trials - ones) - expected;
    const double chi2 = (d1 * d1 + d0 * d0) / expected;
    return std::erfc(std::sqrt(chi2 / 2));
}

double fit_exponent(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double ScenarioResult::min_time_s() const {
    double best = INFINITY;
    for (const auto& t : trials) best = std::min(best, t.wall_time_s);
    return best;
}

double ScenarioResult::total_time_s() const {
    return std::accumulate(trials.begin(), trials.end(), 0.0, [](double s, const auto& t) { return s + t.wall_time_s; });
}

ScenarioResult ring_teleport(std::size_t n, RingMode mode, const RunOptions& opts, std::size_t laps) {
    if (n < 2) fail(ErrorCode::InvalidOperation, "a ring needs at least two nodes");
    if (laps == 0) fail(ErrorCode::InvalidOperation, "at least one lap is required");
    if (mode == RingMode::EprFirst && laps > opts.node.recv_queue_limit) {
        fail(ErrorCode::InvalidOperation, "too many laps to pre-share every EPR pair");
    }
    LocalNetwork net(LocalNetwork::default_names(n), seeded(opts));
    std::vector<std::unique_ptr<CqcClient>> clients;
    for (std::size_t i = 0; i < n; ++i) clients.push_back(net.connect(net.name(i), kApp));

    ScenarioResult result{laps == 1 ? "ring" : "pingpong", laps == 1 ? n : laps, std::string(to_string(mode)), {}, {}, 0, true};
    std::mt19937_64 rng(opts.seed);
    std::size_t zeros = 0;
    for (std::size_t t = 0; t < opts.trials; ++t) {
        RingPlan plan{n, mode, laps, kPauliStates[rng() % kPauliStates.size()]};
        std::vector<std::unique_ptr<Inbox>> inboxes;
        for (std::size_t i = 0; i < n; ++i) inboxes.push_back(std::make_unique<Inbox>(opts.role_timeout));

        const auto t0 = Clock::now();
        std::vector<std::future<int>> roles;
        for (std::size_t i = 0; i < n; ++i) {
            roles.push_back(std::async(std::launch::async,
                                       [&, i] { return ring_role(i, plan, net, *clients[i], inboxes); }));
        }
        std::vector<int> outcomes;
        std::exception_ptr first_error;
        for (auto& f : roles) {
            try {
                outcomes.push_back(f.get());
            } catch (...) {
                if (!first_error) first_error = std::current_exception();
                net.stop();  // unblock the remaining roles
            }
        }
        if (first_error) std::rethrow_exception(first_error);
        const double secs = seconds_since(t0);
        const bool ok = outcomes.front() == 0;
        zeros += ok;
        result.verified = result.verified && ok;
        result.trials.push_back({secs, "state=" + std::string(to_string(plan.state)) + ";verified=" + (ok ? "1" : "0")});
    }
    result.peak_register_qubits = net.peak_register_qubits();
    result.outcome_stats["0"] = double(zeros) / opts.trials;
    result.outcome_stats["1"] = 1.0 - result.outcome_stats["0"];
    return result;
}

ScenarioResult pingpong_teleport(std::size_t rounds, const RunOptions& opts) {
    if (rounds == 0) fail(ErrorCode::InvalidOperation, "pingpong needs at least one round");
    return ring_teleport(2, RingMode::OnTheFly, opts, rounds);
}

ScenarioResult create_measure(std::size_t qubits, const RunOptions& opts) {
    LocalNetwork net(LocalNetwork::default_names(1), seeded(opts));
    auto client = net.connect(net.name(0), kApp);
    auto& node = net.node(net.name(0));
    ScenarioResult result{"create", qubits, "-", {}, {}, 0, true};
    std::size_t zeros = 0, total = 0;
    for (std::size_t t = 0; t < opts.trials; ++t) {
        const auto t0 = Clock::now();
        std::vector<QubitId> ids;
        ids.reserve(qubits);
        for (std::size_t i = 0; i < qubits; ++i) ids.push_back(client->new_qubit());
        const auto registers = node.status().registers;
        for (auto q : ids) {
            const int m = client->measure(q);
            zeros += m == 0;
            ++total;
        }
        const double secs = seconds_since(t0);
        result.verified = result.verified && registers == qubits;
        result.trials.push_back({secs, "registers=" + std::to_string(registers)});
    }
    result.verified = result.verified && zeros == total;
    result.outcome_stats["0"] = total ? double(zeros) / total : 1.0;
    result.outcome_stats["1"] = 1.0 - result.outcome_stats["0"];
    result.peak_register_qubits = net.peak_register_qubits();
    return result;
}

ScenarioResult ghz_create_measure(std::size_t qubits, const RunOptions& opts) {
    if (qubits == 0) fail(ErrorCode::InvalidOperation, "GHZ needs at least one qubit");
    if (qubits > opts.node.max_register_qubits) {
        fail(ErrorCode::Resource, "GHZ on " + std::to_string(qubits) + " qubits exceeds the register cap of " +
                                      std::to_string(opts.node.max_register_qubits));
    }
    if (qubits > 255) fail(ErrorCode::InvalidOperation, "at most 255 qubits can be allocated in one command");
    LocalNetwork net(LocalNetwork::default_names(1), seeded(opts));
    auto client = net.connect(net.name(0), kApp);
    ScenarioResult result{"ghz", qubits, "-", {}, {}, 0, true};
    std::size_t all_zero = 0, all_one = 0;
    for (std::size_t t = 0; t < opts.trials; ++t) {
        const auto t0 = Clock::now();
        auto ids = client->allocate(static_cast<std::uint8_t>(qubits));
        std::vector<cqc::Command> cmds{CqcClient::command(ids[0], Instr::H)};
        for (std::size_t i = 0; i + 1 < qubits; ++i) {
            auto cnot = CqcClient::command(ids[i], Instr::CNot);
            cnot.extra->extra_qubit_id = ids[i + 1];
            cmds.push_back(cnot);
        }
        for (auto q : ids) cmds.push_back(CqcClient::command(q, Instr::Measure));
        auto replies = client->execute({cqc::MsgType::Command, kApp, cmds});
        const double secs = seconds_since(t0);
        if (replies.size() != qubits) fail(ErrorCode::Protocol, "GHZ: wrong number of outcomes");
        const auto ones = std::count_if(replies.begin(), replies.end(), [](const auto& r) { return r.outcome == 1; });
        all_zero += ones == 0;
        all_one += static_cast<std::size_t>(ones) == qubits;
        result.trials.push_back({secs, "ones=" + std::to_string(ones)});
    }
    result.verified = all_zero + all_one == opts.trials;
    result.outcome_stats["all0"] = double(all_zero) / opts.trials;
    result.outcome_stats["all1"] = double(all_one) / opts.trials;
    result.outcome_stats["mixed"] = double(opts.trials - all_zero - all_one) / opts.trials;
    result.peak_register_qubits = net.peak_register_qubits();
    return result;
}

std::array<engine::Complex, 2> single_qubit_state(LocalNetwork& net, const std::string& owner_node, QubitId q) {
    auto v = net.node(owner_node).find_virtual(q);
    if (!v) fail(ErrorCode::UnknownId, "no qubit " + std::to_string(q) + " at " + owner_node);
    auto snap = vnode::parse_node_dump(net.node(v->sim_host).dump());
    const auto* sim = snap.find_sim(v->sim);
    if (sim == nullptr) fail(ErrorCode::Internal, "qubit moved while being inspected");
    const auto* reg = snap.find_register(sim->register_id);
    if (reg == nullptr || reg->num_qubits != 1) fail(ErrorCode::InvalidOperation, "qubit is part of a larger register");
    return {reg->amplitudes[0], reg->amplitudes[1]};
}

ProtocolReport run_protocol_suite(const RunOptions& opts, const ProtocolSizes& sizes) {
    LocalNetwork net({"Alice", "Bob"}, seeded(opts));
    auto alice = net.connect("Alice", kApp);
    auto bob = net.connect("Bob", kApp);
    const auto bob_addr = net.cqc_address("Bob");
    ClassicalEndpoint bob_inbox;
    ProtocolReport report;

    // BB84: Alice prepares H^h_a X^x |0>, Bob measures in basis h_b.
    for (int h_a = 0; h_a < 2; ++h_a) {
        for (int x = 0; x < 2; ++x) {
            for (int h_b = 0; h_b < 2; ++h_b) {
                Bb84Case c{h_a, x, h_b, h_a == h_b ? sizes.matched_trials : sizes.mismatched_trials, 0};
                for (std::size_t t = 0; t < c.trials; ++t) {
                    auto q = alice->new_qubit();
                    std::vector<Instr> prep;
                    if (x) prep.push_back(Instr::X);
                    if (h_a) prep.push_back(Instr::H);
                    apply_all(*alice, q, prep);
                    alice->send(q, bob_addr, kApp);
                    auto b = bob->recv();
                    if (h_b) bob->apply(b, Instr::H);
                    c.ones += bob->measure(b);
                }
                report.bb84.push_back(c);
            }
        }
    }

    auto teleport = [&](PauliState s) {
        auto q = alice->new_qubit();
        apply_all(*alice, q, preparation(s));
        auto e = alice->epr(bob_addr, kApp).first;
        auto [m1, m2] = teleport_out(*alice, q, e);
        send_bits(bob_inbox.port(), m1, m2);
        auto b = bob->recv_epr().first;
        auto bits = bob_inbox.recv(opts.role_timeout);
        correct(*bob, b, bits.at(1), bits.at(2));
        return std::tuple{b, m1, m2};
    };

    for (auto s : kPauliStates) {
        auto [b, m1, m2] = teleport(s);
        report.teleports.push_back({s, single_qubit_state(net, "Bob", b), m1, m2});
        bob->release(b);
    }
    report.plus_trials = sizes.plus_trials;
    for (std::size_t t = 0; t < sizes.plus_trials; ++t) {
        auto [b, m1, m2] = teleport(PauliState::Plus);
        report.plus_ones += bob->measure(b);
    }
    return report;
}

void write_csv_header(std::ostream& out) { out << "scenario,n,mode,trial,wall_time_s,extra\n"; }

void write_csv(std::ostream& out, const ScenarioResult& r) {
    for (std::size_t t = 0; t < r.trials.size(); ++t) {
        out << r.scenario << ',' << r.n << ',' << r.mode << ',' << t << ',' << r.trials[t].wall_time_s << ','
            << r.trials[t].extra << '\n';
    }
}

}  // namespace qnet::bench
