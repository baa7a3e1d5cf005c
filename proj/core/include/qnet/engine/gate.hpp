#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string_view>

namespace qnet::engine {

using Complex = std::complex<double>;

/// Gates the command interface can request. Rotations take a step in units of 2*pi/256.
enum class GateCode : std::uint8_t { I, X, Y, Z, H, K, T, RotX, RotY, RotZ, CNot, CPhase };

std::string_view to_string(GateCode code);
std::optional<GateCode> gate_code_from_string(std::string_view name);
bool is_two_qubit(GateCode code);
bool is_rotation(GateCode code);

/// A 1- or 2-qubit unitary, row-major. For two-qubit gates the basis order is
/// |control target>, i.e. row index = 2*control_bit + target_bit.
struct Gate {
    int arity = 1;
    std::array<Complex, 16> m{};

    Complex at(int row, int col) const { return m[static_cast<std::size_t>(row * dim() + col)]; }
    Complex& at(int row, int col) { return m[static_cast<std::size_t>(row * dim() + col)]; }
    int dim() const { return arity == 1 ? 2 : 4; }
};

/// Angle in radians for a rotation step: step * 2*pi / 256.
double rotation_angle(std::uint8_t step);

/// Builds the fixed matrix for `code`; `step` is only used by rotations.
/// R_a(theta) = exp(-i * theta/2 * sigma_a). K = (Y + Z)/sqrt(2).
Gate gate_from_command(GateCode code, std::uint8_t step = 0);

Gate multiply(const Gate& a, const Gate& b);
Gate adjoint(const Gate& g);
/// max |(U^dagger U - I)_ij|
double unitarity_error(const Gate& g);

}  // namespace qnet::engine
