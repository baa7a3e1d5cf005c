// bench: scripted scenarios measuring the simulator end to end.

#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "qnet/bench/scenarios.hpp"

namespace qb = qnet::bench;

namespace {

void report(const qb::ScenarioResult& r) {
    std::cout << r.scenario << " n=" << r.n << " mode=" << r.mode << " trials=" << r.trials.size()
              << " min_s=" << r.min_time_s() << " total_s=" << r.total_time_s()
              << " peak_register=" << r.peak_register_qubits << " verified=" << (r.verified ? "yes" : "NO");
    for (const auto& [k, v] : r.outcome_stats) std::cout << " p(" << k << ")=" << v;
    std::cout << '\n';
}

int check_protocols(const qb::ProtocolReport& rep) {
    int failures = 0;
    for (const auto& c : rep.bb84) {
        const double f1 = double(c.ones) / c.trials;
        bool ok;
        if (c.h_a == c.h_b) ok = c.ones == (c.x ? c.trials : 0);
        else ok = f1 >= 0.4 && f1 <= 0.6;
        failures += !ok;
        std::cout << "bb84 h_a=" << c.h_a << " x=" << c.x << " h_b=" << c.h_b << " ones=" << c.ones << '/' << c.trials
                  << (ok ? " ok" : " FAIL") << '\n';
    }
    for (const auto& t : rep.teleports) {
        const auto ideal = qb::ideal_state(t.state);
        const double dev = qb::phase_aligned_deviation(t.received, ideal);
        const bool ok = dev < 1e-9;
        failures += !ok;
        std::cout << "teleport state=" << qb::to_string(t.state) << " m1=" << int(t.m1) << " m2=" << int(t.m2)
                  << " deviation=" << dev << (ok ? " ok" : " FAIL") << '\n';
    }
    const double p = qb::fair_coin_p_value(rep.plus_ones, rep.plus_trials);
    const bool ok = p > 0.01;
    failures += !ok;
    std::cout << "teleport |+> standard basis ones=" << rep.plus_ones << '/' << rep.plus_trials << " p=" << p
              << (ok ? " ok" : " FAIL") << '\n';
    return failures;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum network simulator benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();  // common flags may follow the subcommand

    qb::RunOptions opts;
    std::string csv_path, log_level = "warn";
    app.add_option("--seed", opts.seed, "Seed for nodes and scenario choices");
    app.add_option("--csv", csv_path, "Write per-trial timings to this CSV file");
    app.add_option("--trials", opts.trials, "Repetitions per scenario")->check(CLI::PositiveNumber);
    app.add_option("--max-register-qubits", opts.node.max_register_qubits, "Register cap per node");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    std::size_t nodes = 3, rounds = 1, qubits = 10;
    std::string mode = "fly";
    auto* ring = app.add_subcommand("ring", "Teleport a qubit once around a ring of nodes");
    ring->add_option("--nodes", nodes, "Ring size")->check(CLI::Range(2, 200));
    ring->add_option("--mode", mode, "fly: EPR pairs made on demand; first: all pairs made up front")
        ->check(CLI::IsMember({"fly", "first"}));
    auto* pingpong = app.add_subcommand("pingpong", "Teleport a qubit back and forth between two nodes");
    pingpong->add_option("--rounds", rounds, "Round trips")->check(CLI::PositiveNumber);
    auto* create = app.add_subcommand("create", "Create and measure unentangled qubits");
    create->add_option("--qubits", qubits, "Qubits per trial")->check(CLI::PositiveNumber);
    auto* ghz = app.add_subcommand("ghz", "Prepare and measure a GHZ state");
    ghz->add_option("--qubits", qubits, "GHZ size")->check(CLI::PositiveNumber);
    auto* protocols = app.add_subcommand("protocols", "BB84 and teleportation correctness suite");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));
    std::cout << "# node backend and CQC servers share one process per node; clients connect over TCP\n";

    try {
        if (*protocols) {
            auto failures = check_protocols(qb::run_protocol_suite(opts));
            std::cout << (failures ? "protocols FAILED" : "protocols passed") << '\n';
            return failures ? 1 : 0;
        }
        qb::ScenarioResult r;
        if (*ring) r = qb::ring_teleport(nodes, *qb::ring_mode_from(mode), opts);
        else if (*pingpong) r = qb::pingpong_teleport(rounds, opts);
        else if (*create) r = qb::create_measure(qubits, opts);
        else r = qb::ghz_create_measure(qubits, opts);
        report(r);
        if (!csv_path.empty()) {
            std::ofstream out(csv_path);
            if (!out) throw std::runtime_error("cannot write " + csv_path);
            qb::write_csv_header(out);
            qb::write_csv(out, r);
        }
        return r.verified ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "bench: " << e.what() << '\n';
        return 1;
    }
}
