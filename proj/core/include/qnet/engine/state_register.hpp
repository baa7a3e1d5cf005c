#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qnet/engine/gate.hpp"

namespace qnet::engine {

inline constexpr std::size_t kDefaultMaxRegisterQubits = 20;
inline constexpr double kNormTolerance = 1e-9;

using Rng = std::mt19937_64;

struct MeasurementOutcome {
    int bit = 0;
    double probability = 1.0;  // pre-collapse probability of `bit`
};

/// Dense pure-state register over n qubits.
///
/// Position 0 is the most significant bit of the amplitude index, so the
/// basis state |q0 q1 ... q(n-1)> lives at index sum_p q_p * 2^(n-1-p).
/// A register is not thread-safe; callers serialize access.
class StateRegister {
public:
    explicit StateRegister(std::uint64_t register_id = 0, std::size_t max_qubits = kDefaultMaxRegisterQubits);

    /// Adopts a state vector (e.g. one shipped from a peer). Throws if the
    /// length is not a power of two or the norm is off by more than 1e-9.
    static StateRegister from_amplitudes(std::uint64_t register_id, std::vector<Complex> amplitudes,
                                         std::size_t max_qubits = kDefaultMaxRegisterQubits);

    std::uint64_t id() const { return id_; }
    std::size_t num_qubits() const { return num_qubits_; }
    std::size_t max_qubits() const { return max_qubits_; }
    std::size_t dimension() const { return amps_.size(); }
    std::span<const Complex> amplitudes() const { return amps_; }
    double norm() const;

    /// Appends a |0> qubit; returns its position.
    std::size_t add_qubit();
    void apply_single(std::size_t pos, const Gate& gate);
    void apply_two(std::size_t control, std::size_t target, const Gate& gate);
    MeasurementOutcome measure(std::size_t pos, bool demolition, Rng& rng);
    /// Discards a qubit. An entangled qubit is measured first, so this never fails on state grounds.
    void remove_qubit(std::size_t pos, Rng& rng);
    /// this <- this (x) src. Returns the position offset of src's qubits.
    std::size_t merge(const StateRegister& src);

    /// Probability of reading 1 on `pos`, without collapsing.
    double probability_one(std::size_t pos) const;

private:
    void check_position(std::size_t pos) const;
    std::size_t bit_of(std::size_t pos) const { return num_qubits_ - 1 - pos; }

    std::uint64_t id_;
    std::size_t max_qubits_;
    std::size_t num_qubits_ = 0;
    std::vector<Complex> amps_;
};

/// "register <id> <n> re,im re,im ..." with 12 significant digits.
std::string dump_register(const StateRegister& reg);

struct RegisterDump {
    std::uint64_t register_id = 0;
    std::size_t num_qubits = 0;
    std::vector<Complex> amplitudes;
};
RegisterDump parse_register_dump(std::string_view line);

}  // namespace qnet::engine
