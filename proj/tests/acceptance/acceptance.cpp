// Acceptance checks: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstring>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "gather.hpp"
#include "oracle.hpp"
#include "qnet/bench/scenarios.hpp"
#include "qnet/cqc/client.hpp"
#include "qnet/cqc/codec.hpp"
#include "codec_oracle.hpp"

namespace qb = qnet::bench;
namespace qc = qnet::cqc;
using qnet::QubitId;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------
// 1. Distributed simulation equals a monolithic brute-force simulation.

Outcome distributed_equals_monolithic() {
    const auto t0 = Clock::now();
    qb::LocalNetwork net(qb::LocalNetwork::default_names(3), {.seed = 11});
    std::vector<std::unique_ptr<qc::CqcClient>> clients;
    for (std::size_t i = 0; i < 3; ++i) clients.push_back(net.connect(net.name(i), 1));
    std::mt19937_64 rng(20240601);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    const qc::Instr singles[] = {qc::Instr::X, qc::Instr::Y, qc::Instr::Z, qc::Instr::H, qc::Instr::K,
                                 qc::Instr::T, qc::Instr::RotX, qc::Instr::RotY, qc::Instr::RotZ};
    double worst = 0;
    std::size_t merges_seen = 0;
    for (int program = 0; program < 500; ++program) {
        const std::size_t nq = 1 + pick(4);
        const std::size_t nodes = 1 + pick(3);
        std::vector<support::Handle> qubits;
        std::vector<std::size_t> owner;
        for (std::size_t j = 0; j < nq; ++j) {
            owner.push_back(pick(nodes));
            qubits.push_back({net.name(owner[j]), clients[owner[j]]->new_qubit()});
        }
        oracle::Simulator ref(nq);
        const std::size_t ops = 1 + pick(12);
        for (std::size_t k = 0; k < ops; ++k) {
            const auto kind = pick(10);
            if (kind < 6 || nq == 1 && nodes == 1) {
                const auto j = pick(nq);
                const auto g = singles[pick(std::size(singles))];
                const auto step = static_cast<std::uint8_t>(pick(256));
                clients[owner[j]]->apply(qubits[j].id, g, step);
                switch (g) {
                    case qc::Instr::X: ref.apply(oracle::X(), j); break;
                    case qc::Instr::Y: ref.apply(oracle::Y(), j); break;
                    case qc::Instr::Z: ref.apply(oracle::Z(), j); break;
                    case qc::Instr::H: ref.apply(oracle::H(), j); break;
                    case qc::Instr::K: ref.apply(oracle::K(), j); break;
                    case qc::Instr::T: ref.apply(oracle::T(), j); break;
                    case qc::Instr::RotX: ref.apply(oracle::rot(oracle::X(), step), j); break;
                    case qc::Instr::RotY: ref.apply(oracle::rot(oracle::Y(), step), j); break;
                    default: ref.apply(oracle::rot(oracle::Z(), step), j); break;
                }
            } else if (kind < 9 && nq >= 2) {
                const auto c = pick(nq);
                auto t = pick(nq - 1);
                if (t >= c) ++t;
                // Both qubits must be owned by the same application instance.
                if (owner[t] != owner[c]) {
                    const auto dest = owner[c];
                    clients[owner[t]]->send(qubits[t].id, net.cqc_address(net.name(dest)), 1);
                    qubits[t] = {net.name(dest), clients[dest]->recv()};
                    owner[t] = dest;
                }
                const bool cphase = pick(2) == 1;
                clients[owner[c]]->apply_two(qubits[c].id, qubits[t].id, cphase ? qc::Instr::CPhase : qc::Instr::CNot);
                ref.controlled(cphase ? oracle::Z() : oracle::X(), c, t);
            } else {
                const auto j = pick(nq);
                const auto dest = pick(nodes);
                clients[owner[j]]->send(qubits[j].id, net.cqc_address(net.name(dest)), 1);
                qubits[j] = {net.name(dest), clients[dest]->recv()};
                owner[j] = dest;
            }
        }
        const auto got = support::gather_state(net, qubits);
        worst = std::max(worst, oracle::phase_deviation(got, ref.state()));
        for (std::size_t j = 0; j < nq; ++j) clients[owner[j]]->release(qubits[j].id);
    }
    for (std::size_t i = 0; i < 3; ++i) merges_seen += net.node(net.name(i)).status().remote_merges;
    const double secs = seconds_since(t0);
    return {worst < 1e-9 && secs < 300,
            "500 programs, max amplitude deviation " + fmt(worst) + ", " + std::to_string(merges_seen) +
                " cross-node merges, " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 2 and 3. BB84 and teleportation, from one run of the protocol suite.

double fair_coin_p(std::size_t ones, std::size_t n) {
    const double e = n / 2.0;
    const double chi2 = ((ones - e) * (ones - e) + ((n - ones) - e) * ((n - ones) - e)) / e;
    return std::erfc(std::sqrt(chi2 / 2));  // chi-square survival function, 1 dof
}

std::vector<oracle::C> prepared(qb::PauliState s) {
    oracle::Simulator ref(1);
    for (auto g : qb::preparation(s)) {
        if (g == qc::Instr::X) ref.apply(oracle::X(), 0);
        else if (g == qc::Instr::H) ref.apply(oracle::H(), 0);
        else ref.apply(oracle::K(), 0);
    }
    return ref.state();
}

Outcome bb84(const qb::ProtocolReport& rep) {
    bool ok = rep.bb84.size() == 8;
    std::string worst;
    for (const auto& c : rep.bb84) {
        if (c.h_a == c.h_b) {
            const bool good = c.trials == 100 && c.ones == (c.x ? c.trials : 0);
            ok = ok && good;
            if (!good) worst += " matched(h=" + std::to_string(c.h_a) + ",x=" + std::to_string(c.x) + ") ones=" +
                                std::to_string(c.ones);
        } else {
            const double f = double(c.ones) / c.trials;
            const bool good = c.trials == 1000 && f >= 0.4 && f <= 0.6;
            ok = ok && good;
            worst += " mismatched(h_a=" + std::to_string(c.h_a) + ",x=" + std::to_string(c.x) + ") f1=" + fmt(f);
        }
    }
    return {ok, "matched bases 100/100 deterministic;" + worst};
}

Outcome teleportation(const qb::ProtocolReport& rep) {
    double worst = 0;
    for (const auto& t : rep.teleports) {
        std::vector<oracle::C> got(t.received.begin(), t.received.end());
        worst = std::max(worst, oracle::phase_deviation(got, prepared(t.state)));
    }
    const double p = fair_coin_p(rep.plus_ones, rep.plus_trials);
    const bool ok = rep.teleports.size() == 6 && worst < 1e-9 && rep.plus_trials == 1000 && p > 0.01;
    return {ok, "6 eigenstates, max deviation " + fmt(worst) + "; |+> measured: " + std::to_string(rep.plus_ones) +
                    "/1000 ones, chi-square p=" + fmt(p)};
}

// ---------------------------------------------------------------------------
// 4. Three-party register merge: a gate between an EPR half and a local
// qubit pulls the local register, and a third node's qubit with it.

Outcome three_party_merge() {
    qb::LocalNetwork net({"Alice", "Bob", "Charlie"}, {.seed = 5});
    auto alice = net.connect("Alice", 1);
    auto bob = net.connect("Bob", 1);
    auto charlie = net.connect("Charlie", 1);

    // Alice and Bob share an EPR pair simulated at Alice.
    auto qa = alice->epr(net.cqc_address("Bob"), 1).first;
    auto qb_ = bob->recv_epr().first;
    // Bob prepares two qubits in one register; one goes to Charlie.
    auto t = bob->new_qubit();
    auto c = bob->new_qubit();
    bob->apply(c, qc::Instr::H);
    bob->apply_two(t, c, qc::Instr::CNot);
    bob->send(c, net.cqc_address("Charlie"), 1);
    auto qc_ = charlie->recv();

    auto before = qnet::vnode::parse_node_dump(net.node("Bob").dump());
    const bool charlie_at_bob = net.node("Charlie").find_virtual(qc_)->sim_host == "Bob" && before.registers.size() == 1;

    bob->apply_two(qb_, t, qc::Instr::CNot);

    auto a = qnet::vnode::parse_node_dump(net.node("Alice").dump());
    auto b = qnet::vnode::parse_node_dump(net.node("Bob").dump());
    const bool alice_holds_all = a.registers.size() == 1 && a.registers[0].num_qubits == 4 && a.sims.size() == 4;
    const bool bob_empty = b.registers.empty() && b.sims.empty();
    const auto cv = net.node("Charlie").find_virtual(qc_);
    const bool charlie_remapped = cv && cv->sim_host == "Alice" && a.find_sim(cv->sim) != nullptr;

    // Expected: GHZ on (qa, qb, t) tensored with Charlie's |+>.
    oracle::Simulator ref(4);
    ref.apply(oracle::H(), 0);
    ref.controlled(oracle::X(), 0, 1);
    ref.apply(oracle::H(), 3);
    ref.controlled(oracle::X(), 1, 2);
    const auto got = support::gather_state(net, {{"Alice", qa}, {"Bob", qb_}, {"Bob", t}, {"Charlie", qc_}});
    const double dev = oracle::phase_deviation(got, ref.state());

    charlie->apply(qc_, qc::Instr::H);
    const int m = charlie->measure(qc_);
    const bool ok = charlie_at_bob && alice_holds_all && bob_empty && charlie_remapped && dev < 1e-9 && m == 0;
    return {ok, std::string("Alice register 4 qubits: ") + (alice_holds_all ? "yes" : "no") +
                    ", Bob registers 0: " + (bob_empty ? "yes" : "no") + ", Charlie remapped to Alice: " +
                    (charlie_remapped ? "yes" : "no") + ", GHZ3 x |+> deviation " + fmt(dev) +
                    ", Charlie H+measure=" + std::to_string(m)};
}

// ---------------------------------------------------------------------------
// 5. 16-node ring, EPR pairs shared first.

Outcome ring16() {
    qb::RunOptions opts;
    opts.seed = 16;
    const auto t0 = Clock::now();
    auto r = qb::ring_teleport(16, qb::RingMode::EprFirst, opts);
    const double secs = seconds_since(t0);
    const bool ok = r.verified && secs < 60 && r.peak_register_qubits <= 3;
    return {ok, "traversal " + fmt(r.min_time_s()) + " s (" + fmt(secs) + " s with startup), peak register " +
                    std::to_string(r.peak_register_qubits) + " qubits, state verified: " + (r.verified ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 6. Scaling shapes.

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome scaling_shapes() {
    qb::RunOptions opts;
    opts.seed = 6;
    std::vector<double> xs, ys;
    bool verified = true;
    for (std::size_t n : {50, 100, 200, 400}) {
        opts.trials = 7;
        auto r = qb::create_measure(n, opts);
        verified = verified && r.verified;
        xs.push_back(n);
        ys.push_back(r.min_time_s());
    }
    const double exponent = least_squares_slope(xs, ys);

    // Sizes are interleaved over rounds so machine-wide drift hits all of them alike.
    const std::vector<std::size_t> sizes{8, 10, 12, 14};
    std::vector<double> ghz(sizes.size(), 1e9);
    opts.trials = 25;
    for (int round = 0; round < 20; ++round) {
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            opts.seed = 600 + round;
            auto r = qb::ghz_create_measure(sizes[i], opts);
            verified = verified && r.verified;
            ghz[i] = std::min(ghz[i], r.min_time_s());
        }
    }
    std::vector<double> ratios;
    for (std::size_t i = 1; i < ghz.size(); ++i) ratios.push_back(ghz[i] / ghz[i - 1]);
    bool increasing = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) increasing = increasing && ratios[i] > ratios[i - 1];
    const bool ok = verified && exponent < 1.3 && increasing;
    return {ok, "create/measure exponent " + fmt(exponent) + "; GHZ ratios t10/t8=" + fmt(ratios[0]) +
                    " t12/t10=" + fmt(ratios[1]) + " t14/t12=" + fmt(ratios[2])};
}

// ---------------------------------------------------------------------------
// 7. CQC codec conformance.

Outcome codec_conformance() {
    std::mt19937_64 rng(7);
    std::size_t mismatches = 0;
    const std::size_t cases = 20000;
    for (std::size_t i = 0; i < cases; ++i) {
        auto m = codec_oracle::random_message(rng);
        const auto expected = codec_oracle::encode(m);
        bool good = false;
        try {
            good = qc::encode_message(m) == expected && qc::decode_message(expected) == m;
        } catch (const std::exception&) {
        }
        mismatches += !good;
    }

    std::size_t crashes = 0, rejected = 0;
    const std::size_t fuzz = 1000000;
    for (std::size_t i = 0; i < fuzz; ++i) {
        auto bytes = codec_oracle::fuzz_input(rng);
        try {
            (void)qc::decode_message(bytes);
        } catch (const qnet::Error&) {
            ++rejected;
        } catch (...) {
            ++crashes;
        }
    }

    const auto reached = codec_oracle::reach_error_codes();
    std::string missing;
    std::size_t hit = 0;
    for (auto t : codec_oracle::kTable3Errors) {
        if (reached.contains(t)) ++hit;
        else missing += " " + std::string(qc::to_string(t));
    }
    const bool ok = mismatches == 0 && crashes == 0 && missing.empty();
    return {ok, std::to_string(cases) + " round trips, " + std::to_string(mismatches) + " mismatches; " +
                    std::to_string(fuzz) + " fuzz inputs, " + std::to_string(crashes) + " crashes (" +
                    std::to_string(rejected) + " rejected); error codes reached: " +
                    std::to_string(hit) + " of " +
                    std::to_string(codec_oracle::kTable3Errors.size()) + (missing.empty() ? "" : ", missing:" + missing)};
}

// ---------------------------------------------------------------------------
// 8. Crossed two-node merge storm.

struct SweepResult {
    bool ok = true;
    std::string why;
};

/// Every virtual qubit resolves to a live simulated qubit, no two share one,
/// every simulated qubit is referenced, and registers agree with positions.
SweepResult bijection_sweep(qb::LocalNetwork& net) {
    std::map<std::string, qnet::vnode::NodeSnapshot> snaps;
    for (std::size_t i = 0; i < net.size(); ++i) snaps[net.name(i)] = qnet::vnode::parse_node_dump(net.node(net.name(i)).dump());
    std::set<std::pair<std::string, qnet::SimId>> referenced;
    for (const auto& [name, s] : snaps) {
        for (const auto& v : s.virtuals) {
            auto host = snaps.find(v.sim_host);
            if (host == snaps.end() || !host->second.find_sim(v.sim)) return {false, "dangling virtual qubit at " + name};
            if (!referenced.insert({v.sim_host, v.sim}).second) return {false, "two virtual qubits share a simulated qubit"};
        }
    }
    for (const auto& [name, s] : snaps) {
        std::map<qnet::RegisterId, std::set<std::size_t>> positions;
        for (const auto& sim : s.sims) {
            if (!referenced.contains({name, sim.id})) return {false, "orphaned simulated qubit at " + name};
            const auto* reg = s.find_register(sim.register_id);
            if (!reg || sim.position >= reg->num_qubits) return {false, "simulated qubit outside its register"};
            if (!positions[sim.register_id].insert(sim.position).second) return {false, "register position used twice"};
        }
        for (const auto& reg : s.registers) {
            if (positions[reg.register_id].size() != reg.num_qubits) return {false, "register with unmapped positions"};
        }
    }
    return {};
}

Outcome merge_storm() {
    qnet::vnode::NodeConfig cfg;
    cfg.seed = 8;
    qb::LocalNetwork net({"A", "B"}, cfg);
    auto a = net.connect("A", 1);
    auto b = net.connect("B", 1);
    const auto addr_a = net.cqc_address("A"), addr_b = net.cqc_address("B");
    std::mt19937_64 rng(8);

    std::size_t deadlocks = 0, violations = 0, errors = 0;
    std::string first_problem;
    const auto t0 = Clock::now();
    for (int it = 0; it < 1000; ++it) {
        // Each side entangles its own pair, sends one half across, then
        // entangles its kept qubit with the half it received. The two merges
        // pull each other's registers in opposite directions.
        auto side = [](qc::CqcClient& me, qnet::cqc::CqcAddress peer, bool h_first) {
            auto q1 = me.new_qubit();
            auto q2 = me.new_qubit();
            if (h_first) me.apply(q1, qc::Instr::H);
            me.apply_two(q1, q2, qc::Instr::CNot);
            me.send(q2, peer, 1);
            auto other = me.recv();
            me.apply_two(q1, other, qc::Instr::CNot);
            return std::pair{q1, other};
        };
        const bool ha = rng() & 1, hb = rng() & 1;
        auto fa = std::async(std::launch::async, [&] { return side(*a, addr_b, ha); });
        auto fb = std::async(std::launch::async, [&] { return side(*b, addr_a, hb); });
        std::pair<QubitId, QubitId> qa, qb_;
        bool failed = false;
        for (auto* f : {&fa, &fb}) {
            if (f->wait_for(std::chrono::seconds(60)) != std::future_status::ready) {
                ++deadlocks;
                first_problem = "iteration " + std::to_string(it) + " stalled";
                return {false, first_problem};
            }
        }
        try {
            qa = fa.get();
            qb_ = fb.get();
        } catch (const std::exception& e) {
            ++errors;
            failed = true;
            if (first_problem.empty()) first_problem = "iteration " + std::to_string(it) + ": " + e.what();
        }
        auto sweep = bijection_sweep(net);
        if (!sweep.ok) {
            ++violations;
            if (first_problem.empty()) first_problem = "iteration " + std::to_string(it) + ": " + sweep.why;
        }
        if (failed) break;
        for (auto q : {qa.first, qa.second}) a->measure(q);
        for (auto q : {qb_.first, qb_.second}) b->measure(q);
    }
    auto final_sweep = bijection_sweep(net);
    violations += !final_sweep.ok;
    const auto la = net.node("A").lock_table().metrics(), lb = net.node("B").lock_table().metrics();
    const bool ok = deadlocks == 0 && violations == 0 && errors == 0;
    return {ok, "1000 iterations in " + fmt(seconds_since(t0)) + " s, deadlocks " + std::to_string(deadlocks) +
                    ", bijection violations " + std::to_string(violations) + ", errors " + std::to_string(errors) +
                    ", lock conflicts " + std::to_string(la.conflicts + lb.conflicts) + ", backoffs " +
                    std::to_string(la.backoffs + lb.backoffs) + (first_problem.empty() ? "" : "; " + first_problem)};
}

// ---------------------------------------------------------------------------

Outcome ring60() {
    qb::RunOptions opts;
    opts.seed = 60;
    const auto t0 = Clock::now();
    auto r = qb::ring_teleport(60, qb::RingMode::EprFirst, opts);
    return {r.verified, "60-node ring in " + fmt(seconds_since(t0)) + " s, peak register " +
                            std::to_string(r.peak_register_qubits)};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::err);
    bool extended = false;
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--extended") == 0) extended = true;
        else only.insert(std::atoi(argv[i]));
    }

    int failures = 0;
    auto report = [&](int id, const char* title, const std::function<Outcome()>& check) {
        if (!only.empty() && !only.contains(id)) return;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "): " << o.detail << std::endl;
    };

    std::optional<qb::ProtocolReport> protocols;
    auto suite = [&]() -> const qb::ProtocolReport& {
        if (!protocols) {
            qb::RunOptions opts;
            opts.seed = 23;
            protocols = qb::run_protocol_suite(opts);
        }
        return *protocols;
    };

    report(1, "distributed = monolithic oracle", distributed_equals_monolithic);
    report(2, "BB84 determinism", [&] { return bb84(suite()); });
    report(3, "teleportation", [&] { return teleportation(suite()); });
    report(4, "three-party register merge", three_party_merge);
    report(5, "16-node ring", ring16);
    report(6, "scaling shapes", scaling_shapes);
    report(7, "CQC codec conformance", codec_conformance);
    report(8, "crossed merge storm", merge_storm);
    if (extended) report(60, "60-node ring (extended)", ring60);
    return failures;
}
