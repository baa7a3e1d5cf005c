#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qnet/bench/local_network.hpp"
#include "qnet/engine/gate.hpp"

namespace qnet::bench {

enum class RingMode { OnTheFly, EprFirst };
std::string_view to_string(RingMode m);
std::optional<RingMode> ring_mode_from(std::string_view s);  // "fly" | "first"

struct RunOptions {
    std::uint64_t seed = 1;
    std::size_t trials = 1;
    vnode::NodeConfig node{};
    std::chrono::milliseconds role_timeout{60000};
};

struct TrialRecord {
    double wall_time_s = 0;
    std::string extra;
};

struct ScenarioResult {
    std::string scenario;
    std::size_t n = 0;
    std::string mode;
    std::vector<TrialRecord> trials;
    std::map<std::string, double> outcome_stats;  // outcome -> frequency
    std::size_t peak_register_qubits = 0;
    bool verified = true;

    double min_time_s() const;
    double total_time_s() const;
};

/// Teleports one qubit from n0 around the ring n0 -> n1 -> ... -> n0, `laps` times.
ScenarioResult ring_teleport(std::size_t n, RingMode mode, const RunOptions& opts, std::size_t laps = 1);
/// 2n teleportations between two nodes.
ScenarioResult pingpong_teleport(std::size_t rounds, const RunOptions& opts);
ScenarioResult create_measure(std::size_t qubits, const RunOptions& opts);
ScenarioResult ghz_create_measure(std::size_t qubits, const RunOptions& opts);

/// The six single-qubit Pauli eigenstates.
enum class PauliState { Zero, One, Plus, Minus, PlusI, MinusI };
inline constexpr std::array<PauliState, 6> kPauliStates{PauliState::Zero, PauliState::One,  PauliState::Plus,
                                                       PauliState::Minus, PauliState::PlusI, PauliState::MinusI};
std::string_view to_string(PauliState s);
/// Gates that map |0> to the state, in application order.
std::vector<cqc::Instr> preparation(PauliState s);

struct Bb84Case {
    int h_a = 0;
    int x = 0;
    int h_b = 0;
    std::size_t trials = 0;
    std::size_t ones = 0;
};

struct TeleportCheck {
    PauliState state = PauliState::Zero;
    std::array<engine::Complex, 2> received{};
    std::uint8_t m1 = 0;
    std::uint8_t m2 = 0;
};

struct ProtocolReport {
    std::vector<Bb84Case> bb84;
    std::vector<TeleportCheck> teleports;
    std::size_t plus_trials = 0;
    std::size_t plus_ones = 0;
};

struct ProtocolSizes {
    std::size_t matched_trials = 100;
    std::size_t mismatched_trials = 1000;
    std::size_t plus_trials = 1000;
};

/// BB84 for all (h_a, x, h_b) and teleportation of every Pauli eigenstate between two nodes.
ProtocolReport run_protocol_suite(const RunOptions& opts, const ProtocolSizes& sizes = {});

/// Reads the single-qubit state behind an application's qubit from the hosting node.
/// Throws when the qubit is entangled with anything else.
std::array<engine::Complex, 2> single_qubit_state(LocalNetwork& net, const std::string& owner_node, QubitId q);

/// Ideal amplitudes of a Pauli eigenstate.
std::array<engine::Complex, 2> ideal_state(PauliState s);
/// max_i |a_i - e^{i phi} b_i| with phi chosen to align a with b.
double phase_aligned_deviation(std::span<const engine::Complex> a, std::span<const engine::Complex> b);
/// Chi-square goodness of fit against a fair coin (1 degree of freedom); returns the p-value.
double fair_coin_p_value(std::size_t ones, std::size_t trials);
/// Least-squares slope of log(y) against log(x).
double fit_exponent(std::span<const double> x, std::span<const double> y);

void write_csv_header(std::ostream& out);
void write_csv(std::ostream& out, const ScenarioResult& r);

}  // namespace qnet::bench
