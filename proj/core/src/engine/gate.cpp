#include "qnet/engine/gate.hpp"

#include <cmath>
#include <numbers>

#include "qnet/common/error.hpp"

namespace qnet::engine {
namespace {

constexpr Complex kI{0.0, 1.0};

Gate single(Complex a, Complex b, Complex c, Complex d) {
    Gate g;
    g.arity = 1;
    g.at(0, 0) = a;
    g.at(0, 1) = b;
    g.at(1, 0) = c;
    g.at(1, 1) = d;
    return g;
}

Gate diag4(Complex a, Complex b, Complex c, Complex d) {
    Gate g;
    g.arity = 2;
    g.at(0, 0) = a;
    g.at(1, 1) = b;
    g.at(2, 2) = c;
    g.at(3, 3) = d;
    return g;
}

}  // namespace

std::string_view to_string(GateCode code) {
    switch (code) {
        case GateCode::I: return "I";
        case GateCode::X: return "X";
        case GateCode::Y: return "Y";
        case GateCode::Z: return "Z";
        case GateCode::H: return "H";
        case GateCode::K: return "K";
        case GateCode::T: return "T";
        case GateCode::RotX: return "ROT_X";
        case GateCode::RotY: return "ROT_Y";
        case GateCode::RotZ: return "ROT_Z";
        case GateCode::CNot: return "CNOT";
        case GateCode::CPhase: return "CPHASE";
    }
    return "?";
}

std::optional<GateCode> gate_code_from_string(std::string_view name) {
    for (int i = 0; i <= static_cast<int>(GateCode::CPhase); ++i) {
        auto code = static_cast<GateCode>(i);
        if (to_string(code) == name) return code;
    }
    return std::nullopt;
}

bool is_two_qubit(GateCode code) { return code == GateCode::CNot || code == GateCode::CPhase; }

bool is_rotation(GateCode code) {
    return code == GateCode::RotX || code == GateCode::RotY || code == GateCode::RotZ;
}

double rotation_angle(std::uint8_t step) { return step * 2.0 * std::numbers::pi / 256.0; }

Gate gate_from_command(GateCode code, std::uint8_t step) {
    const double r = std::numbers::sqrt2 / 2.0;
    const double half = rotation_angle(step) / 2.0;
    const double c = std::cos(half);
    const double s = std::sin(half);
    switch (code) {
        case GateCode::I: return single(1, 0, 0, 1);
        case GateCode::X: return single(0, 1, 1, 0);
        case GateCode::Y: return single(0, -kI, kI, 0);
        case GateCode::Z: return single(1, 0, 0, -1);
        case GateCode::H: return single(r, r, r, -r);
        case GateCode::K: return single(r, -kI * r, kI * r, -r);
        case GateCode::T: return single(1, 0, 0, std::polar(1.0, std::numbers::pi / 4.0));
        case GateCode::RotX: return single(c, -kI * s, -kI * s, c);
        case GateCode::RotY: return single(c, -s, s, c);
        case GateCode::RotZ: return single(std::polar(1.0, -half), 0, 0, std::polar(1.0, half));
        case GateCode::CNot: {
            Gate g = diag4(1, 1, 0, 0);
            g.at(2, 3) = 1;
            g.at(3, 2) = 1;
            return g;
        }
        case GateCode::CPhase: return diag4(1, 1, 1, -1);
    }
    fail(ErrorCode::Unsupported, "unsupported gate code " + std::to_string(static_cast<int>(code)));
}

Gate multiply(const Gate& a, const Gate& b) {
    if (a.arity != b.arity) fail(ErrorCode::InvalidOperation, "gate arity mismatch");
    Gate out;
    out.arity = a.arity;
    const int d = a.dim();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            Complex acc = 0;
            for (int k = 0; k < d; ++k) acc += a.at(i, k) * b.at(k, j);
            out.at(i, j) = acc;
        }
    return out;
}

Gate adjoint(const Gate& g) {
    Gate out;
    out.arity = g.arity;
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j) out.at(i, j) = std::conj(g.at(j, i));
    return out;
}

double unitarity_error(const Gate& g) {
    auto p = multiply(adjoint(g), g);
    double worst = 0;
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j) worst = std::max(worst, std::abs(p.at(i, j) - Complex(i == j ? 1.0 : 0.0)));
    return worst;
}

}  // namespace qnet::engine
