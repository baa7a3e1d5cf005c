#include "qnet/engine/state_register.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "qnet/common/error.hpp"

namespace qnet::engine {

StateRegister::StateRegister(std::uint64_t register_id, std::size_t max_qubits)
    : id_(register_id), max_qubits_(max_qubits), amps_{Complex{1.0, 0.0}} {}

StateRegister StateRegister::from_amplitudes(std::uint64_t register_id, std::vector<Complex> amplitudes,
                                             std::size_t max_qubits) {
    const auto dim = amplitudes.size();
    if (dim == 0 || (dim & (dim - 1)) != 0) {
        fail(ErrorCode::Protocol, "amplitude count " + std::to_string(dim) + " is not a power of two");
    }
    std::size_t n = 0;
    while ((std::size_t{1} << n) < dim) ++n;
    if (n > max_qubits) {
        fail(ErrorCode::Resource, "register of " + std::to_string(n) + " qubits exceeds cap " + std::to_string(max_qubits));
    }
    StateRegister reg(register_id, max_qubits);
    reg.num_qubits_ = n;
    reg.amps_ = std::move(amplitudes);
    if (std::abs(reg.norm() - 1.0) > kNormTolerance) fail(ErrorCode::Protocol, "amplitudes are not normalized");
    return reg;
}

double StateRegister::norm() const {
    double s = 0;
    for (const auto& a : amps_) s += std::norm(a);
    return std::sqrt(s);
}

void StateRegister::check_position(std::size_t pos) const {
    if (pos >= num_qubits_) {
        fail(ErrorCode::InvalidQubit,
             "position " + std::to_string(pos) + " out of range for " + std::to_string(num_qubits_) + "-qubit register");
    }
}

std::size_t StateRegister::add_qubit() {
    if (num_qubits_ + 1 > max_qubits_) {
        fail(ErrorCode::Resource, "register is at its cap of " + std::to_string(max_qubits_) + " qubits");
    }
    std::vector<Complex> next(amps_.size() * 2);
    for (std::size_t i = 0; i < amps_.size(); ++i) next[2 * i] = amps_[i];
    amps_ = std::move(next);
    return num_qubits_++;
}

void StateRegister::apply_single(std::size_t pos, const Gate& gate) {
    check_position(pos);
    if (gate.arity != 1) fail(ErrorCode::InvalidOperation, "apply_single needs a one-qubit gate");
    const std::size_t stride = std::size_t{1} << bit_of(pos);
    const Complex g00 = gate.at(0, 0), g01 = gate.at(0, 1), g10 = gate.at(1, 0), g11 = gate.at(1, 1);
    for (std::size_t base = 0; base < amps_.size(); base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const Complex a0 = amps_[i];
            const Complex a1 = amps_[i + stride];
            amps_[i] = g00 * a0 + g01 * a1;
            amps_[i + stride] = g10 * a0 + g11 * a1;
        }
    }
}

void StateRegister::apply_two(std::size_t control, std::size_t target, const Gate& gate) {
    if (control == target) fail(ErrorCode::InvalidOperation, "control and target must differ");
    check_position(control);
    check_position(target);
    if (gate.arity != 2) fail(ErrorCode::InvalidOperation, "apply_two needs a two-qubit gate");
    const std::size_t cmask = std::size_t{1} << bit_of(control);
    const std::size_t tmask = std::size_t{1} << bit_of(target);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        if ((i & cmask) || (i & tmask)) continue;
        const std::size_t idx[4] = {i, i | tmask, i | cmask, i | cmask | tmask};
        Complex in[4];
        for (int k = 0; k < 4; ++k) in[k] = amps_[idx[k]];
        for (int r = 0; r < 4; ++r) {
            Complex acc = 0;
            for (int c = 0; c < 4; ++c) acc += gate.at(r, c) * in[c];
            amps_[idx[r]] = acc;
        }
    }
}

double StateRegister::probability_one(std::size_t pos) const {
    check_position(pos);
    const std::size_t mask = std::size_t{1} << bit_of(pos);
    double p0 = 0, p1 = 0;
    for (std::size_t i = 0; i < amps_.size(); ++i) (i & mask ? p1 : p0) += std::norm(amps_[i]);
    return p1 / (p0 + p1);
}

MeasurementOutcome StateRegister::measure(std::size_t pos, bool demolition, Rng& rng) {
    check_position(pos);
    const std::size_t mask = std::size_t{1} << bit_of(pos);
    double w0 = 0, w1 = 0;
    for (std::size_t i = 0; i < amps_.size(); ++i) (i & mask ? w1 : w0) += std::norm(amps_[i]);
    const double p0 = w0 / (w0 + w1);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const int bit = u < p0 ? 0 : 1;
    const double prob = bit == 0 ? p0 : 1.0 - p0;
    const double scale = 1.0 / std::sqrt(bit == 0 ? w0 : w1);

    if (demolition) {
        std::vector<Complex> next(amps_.size() / 2);
        std::size_t k = 0;
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if (((i & mask) != 0) == (bit == 1)) next[k++] = amps_[i] * scale;
        }
        amps_ = std::move(next);
        --num_qubits_;
    } else {
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            if (((i & mask) != 0) == (bit == 1)) amps_[i] *= scale;
            else amps_[i] = 0;
        }
    }
    return {bit, prob};
}

void StateRegister::remove_qubit(std::size_t pos, Rng& rng) {
    // For a product state the retained amplitudes are the same for either
    // outcome up to global phase, so measure-and-discard covers both cases.
    measure(pos, /*demolition=*/true, rng);
}

std::size_t StateRegister::merge(const StateRegister& src) {
    if (&src == this) fail(ErrorCode::InvalidOperation, "cannot merge a register with itself");
    if (num_qubits_ + src.num_qubits_ > max_qubits_) {
        fail(ErrorCode::Resource, "merged register would hold " + std::to_string(num_qubits_ + src.num_qubits_) +
                                      " qubits, cap is " + std::to_string(max_qubits_));
    }
    const auto offset = num_qubits_;
    const auto sdim = src.amps_.size();
    std::vector<Complex> next(amps_.size() * sdim);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        if (amps_[i] == Complex{}) continue;
        for (std::size_t j = 0; j < sdim; ++j) next[i * sdim + j] = amps_[i] * src.amps_[j];
    }
    amps_ = std::move(next);
    num_qubits_ += src.num_qubits_;
    return offset;
}

std::string dump_register(const StateRegister& reg) {
    std::string out = "register " + std::to_string(reg.id()) + " " + std::to_string(reg.num_qubits());
    char buf[64];
    for (const auto& a : reg.amplitudes()) {
        std::snprintf(buf, sizeof buf, " %.12g,%.12g", a.real(), a.imag());
        out += buf;
    }
    return out;
}

RegisterDump parse_register_dump(std::string_view line) {
    std::istringstream in{std::string(line)};
    std::string tag;
    RegisterDump d;
    if (!(in >> tag >> d.register_id >> d.num_qubits) || tag != "register") {
        fail(ErrorCode::Protocol, "malformed register dump: " + std::string(line));
    }
    std::string pair;
    while (in >> pair) {
        auto comma = pair.find(',');
        if (comma == std::string::npos) fail(ErrorCode::Protocol, "malformed amplitude '" + pair + "'");
        d.amplitudes.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
    }
    if (d.amplitudes.size() != (std::size_t{1} << d.num_qubits)) {
        fail(ErrorCode::Protocol, "register dump amplitude count does not match qubit count");
    }
    return d;
}

}  // namespace qnet::engine
