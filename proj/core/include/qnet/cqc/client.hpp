#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qnet/common/socket.hpp"
#include "qnet/cqc/codec.hpp"

namespace qnet::cqc {

/// An error reply received from a node.
class CqcError : public Error {
public:
    CqcError(MsgType reply, std::string message);
    MsgType reply() const { return reply_; }

private:
    MsgType reply_;
};

/// Where a remote node accepts CQC connections (the extra header's addressing).
struct CqcAddress {
    std::uint32_t ipv4 = 0;  // host byte order
    std::uint16_t port = 0;
};

/// Minimal blocking CQC client. Every command is sent with BLOCK|NOTIFY and
/// replies are collected up to the trailing TP_DONE.
class CqcClient {
public:
    CqcClient(const std::string& host, std::uint16_t port, AppId app_id);

    AppId app_id() const { return app_; }

    Reply hello();
    /// Sends `m` and returns every reply before TP_DONE. Throws CqcError on an
    /// error or TP_EXPIRE reply.
    std::vector<Reply> execute(const Message& m);
    /// Sends raw bytes and reads exactly one reply.
    Reply roundtrip_raw(std::span<const std::uint8_t> bytes);

    QubitId new_qubit();
    std::vector<QubitId> allocate(std::uint8_t count);
    void apply(QubitId q, Instr gate, std::uint8_t step = 0);
    void apply_two(QubitId control, QubitId target, Instr gate);
    int measure(QubitId q, bool inplace = false);
    void reset(QubitId q);
    void release(QubitId q);
    void send(QubitId q, const CqcAddress& to, AppId remote_app);
    QubitId recv();
    std::pair<QubitId, EntInfo> epr(const CqcAddress& to, AppId remote_app);
    std::pair<QubitId, EntInfo> recv_epr();
    std::uint64_t get_time(QubitId q);

    static Command command(QubitId q, Instr instr, std::uint8_t options = opt::Block | opt::Notify);

private:
    Reply read_reply();

    net::TcpStream stream_;
    AppId app_;
};

}  // namespace qnet::cqc
