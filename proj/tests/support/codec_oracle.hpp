#pragma once

// Independent model of the CQC request format: a hand-written big-endian
// encoder, a generator of valid messages, fuzz inputs, and a live-server
// probe that triggers every error reply.

#include <array>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "qnet/bench/local_network.hpp"
#include "qnet/cqc/client.hpp"
#include "qnet/cqc/codec.hpp"

namespace codec_oracle {

namespace qc = qnet::cqc;
using Bytes = std::vector<std::uint8_t>;

inline void put(Bytes& b, std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Instructions whose command header is followed by the 16-byte extra header.
inline bool has_extra(qc::MsgType type, std::uint8_t instr, std::uint8_t options) {
    static const std::set<std::uint8_t> with_extra{5, 6, 7, 8, 14, 15, 16, 19, 20, 21, 22};
    return type == qc::MsgType::Factory || (options & 0x0A) != 0 || with_extra.contains(instr);
}

inline Bytes encode_commands(qc::MsgType type, const std::vector<qc::Command>& cmds);

inline Bytes encode_command(qc::MsgType type, const qc::Command& c) {
    Bytes b;
    put(b, c.qubit_id, 2);
    put(b, static_cast<std::uint8_t>(c.instr), 1);
    put(b, c.options, 1);
    if (!has_extra(type, static_cast<std::uint8_t>(c.instr), c.options)) return b;
    const auto block = encode_commands(qc::MsgType::Command, c.block);
    const auto& e = *c.extra;
    put(b, e.extra_qubit_id, 2);
    put(b, e.remote_app_id, 2);
    put(b, e.remote_node, 4);
    put(b, e.remote_port, 2);
    put(b, block.size(), 4);
    put(b, e.step, 1);
    put(b, 0, 1);
    b.insert(b.end(), block.begin(), block.end());
    return b;
}

inline Bytes encode_commands(qc::MsgType type, const std::vector<qc::Command>& cmds) {
    Bytes out;
    for (const auto& c : cmds) {
        auto b = encode_command(type, c);
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

inline Bytes encode_raw(std::uint8_t version, std::uint8_t type, std::uint16_t app, const Bytes& payload) {
    Bytes b;
    put(b, version, 1);
    put(b, type, 1);
    put(b, app, 2);
    put(b, payload.size(), 4);
    b.insert(b.end(), payload.begin(), payload.end());
    return b;
}

inline Bytes encode(const qc::Message& m) {
    return encode_raw(1, static_cast<std::uint8_t>(m.type), m.app_id, encode_commands(m.type, m.commands));
}

inline constexpr std::array<std::uint8_t, 23> kInstrCodes{0,  1,  2,  3,  4,  5,  6,  7,  8,  10, 11, 12,
                                                          13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23};

inline qc::Command random_command(std::mt19937_64& rng, qc::MsgType type, int depth) {
    qc::Command c;
    c.qubit_id = static_cast<std::uint16_t>(rng());
    c.instr = static_cast<qc::Instr>(kInstrCodes[rng() % kInstrCodes.size()]);
    c.options = static_cast<std::uint8_t>(rng() % 16);
    if (depth >= 3) c.options &= ~0x0A;
    if (!has_extra(type, static_cast<std::uint8_t>(c.instr), c.options)) return c;
    if (c.options & 0x0A) {
        const auto n = rng() % 4;
        for (std::size_t i = 0; i < n; ++i) c.block.push_back(random_command(rng, qc::MsgType::Command, depth + 1));
    }
    qc::ExtraHeader e;
    e.extra_qubit_id = static_cast<std::uint16_t>(rng());
    e.remote_app_id = static_cast<std::uint16_t>(rng());
    e.remote_node = static_cast<std::uint32_t>(rng());
    e.remote_port = static_cast<std::uint16_t>(rng());
    e.step = static_cast<std::uint8_t>(rng());
    std::size_t len = 0;
    for (const auto& sub : c.block) len += encode_command(qc::MsgType::Command, sub).size();
    e.action_length = static_cast<std::uint32_t>(len);
    c.extra = e;
    return c;
}

inline qc::Message random_message(std::mt19937_64& rng) {
    static constexpr qc::MsgType types[] = {qc::MsgType::Hello, qc::MsgType::Command, qc::MsgType::Factory,
                                            qc::MsgType::GetTime};
    qc::Message m;
    m.type = types[rng() % 4];
    m.app_id = static_cast<std::uint16_t>(rng());
    std::size_t n = 0;
    if (m.type == qc::MsgType::Factory) n = 1;
    else if (m.type != qc::MsgType::Hello) n = rng() % 6;
    for (std::size_t i = 0; i < n; ++i) m.commands.push_back(random_command(rng, m.type, 0));
    return m;
}

/// Arbitrary bytes, and valid messages with random damage.
inline Bytes fuzz_input(std::mt19937_64& rng) {
    Bytes b;
    switch (rng() % 4) {
        case 0: {
            b.resize(rng() % 64);
            for (auto& x : b) x = static_cast<std::uint8_t>(rng());
            break;
        }
        case 1: {
            // Plausible header, random payload, sometimes a matching length.
            Bytes payload(rng() % 80);
            for (auto& x : payload) x = static_cast<std::uint8_t>(rng());
            b = encode_raw(rng() % 8 == 0 ? 2 : 1, static_cast<std::uint8_t>(rng() % 12), 0, payload);
            if (rng() % 2) b[4 + rng() % 4] ^= static_cast<std::uint8_t>(rng());
            break;
        }
        default: {
            b = encode(random_message(rng));
            const auto edits = 1 + rng() % 4;
            for (std::size_t i = 0; i < edits; ++i) {
                switch (rng() % 3) {
                    case 0:
                        if (!b.empty()) b[rng() % b.size()] = static_cast<std::uint8_t>(rng());
                        break;
                    case 1:
                        if (!b.empty()) b.resize(rng() % b.size());
                        break;
                    default:
                        b.push_back(static_cast<std::uint8_t>(rng()));
                        break;
                }
            }
        }
    }
    return b;
}

inline constexpr std::array<qc::MsgType, 8> kTable3Errors{
    qc::MsgType::ErrGeneral, qc::MsgType::ErrNoQubit,     qc::MsgType::ErrUnsupp, qc::MsgType::ErrTimeout,
    qc::MsgType::ErrUnknown, qc::MsgType::ErrUnavailable, qc::MsgType::ErrDenied, qc::MsgType::ErrVersion};

inline Bytes single(qc::MsgType type, std::uint16_t app, std::uint16_t q, std::uint8_t instr, std::uint8_t options,
                    std::optional<qc::ExtraHeader> extra = std::nullopt) {
    qc::Command c{.qubit_id = q, .instr = static_cast<qc::Instr>(instr), .options = options, .extra = extra, .block = {}};
    return encode(qc::Message{.type = type, .app_id = app, .commands = {c}});
}

/// Drives a two-node network into each error reply with raw requests and
/// returns the reply types seen.
inline std::set<qc::MsgType> reach_error_codes() {
    qnet::vnode::NodeConfig cfg;
    cfg.max_qubits = 6;
    cfg.recv_queue_limit = 1;
    cfg.recv_timeout = std::chrono::milliseconds(200);
    cfg.seed = 3;
    qnet::bench::LocalNetwork net({"a", "b"}, cfg);
    auto a1 = net.connect("a", 1);
    auto a2 = net.connect("a", 2);
    auto b5 = net.connect("b", 5);
    std::set<qc::MsgType> seen;
    auto probe = [&](qc::CqcClient& c, const Bytes& bytes) { seen.insert(c.roundtrip_raw(bytes).type); };

    probe(*a1, encode_raw(2, 0, 1, {}));                      // version 2
    probe(*a1, single(qc::MsgType::Command, 1, 0, 17, 0x08));  // H|IFTHEN
    qc::ExtraHeader zero{};
    probe(*a1, single(qc::MsgType::Factory, 1, 0, 1, 0, zero));  // FACTORY count 0
    probe(*a1, single(qc::MsgType::Command, 1, 999, 17, 0));     // unknown qubit
    const auto q = a1->new_qubit();
    probe(*a2, single(qc::MsgType::Command, 2, q, 17, 0));  // another app's qubit
    probe(*b5, single(qc::MsgType::Command, 5, 0, 6, 0, zero));  // RECV with nothing queued

    // Receive queue of capacity one.
    const auto b_addr = net.cqc_address("b");
    const qc::ExtraHeader to_b{.remote_app_id = 5, .remote_node = b_addr.ipv4, .remote_port = b_addr.port};
    a1->send(a1->new_qubit(), b_addr, 5);
    probe(*a1, single(qc::MsgType::Command, 1, a1->new_qubit(), 5, 0, to_b));

    // Node capacity.
    for (int i = 0; i < 8; ++i) {
        const auto r = a1->roundtrip_raw(single(qc::MsgType::Command, 1, 0, 1, 0));
        if (r.type != qc::MsgType::NewOk) {
            seen.insert(r.type);
            break;
        }
    }
    return seen;
}

}  // namespace codec_oracle
