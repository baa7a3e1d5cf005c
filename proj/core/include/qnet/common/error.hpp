#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qnet {

/// Failure classes shared by every layer. The CQC dispatcher maps these onto
/// wire error codes; peerlink carries them across nodes verbatim.
enum class ErrorCode : unsigned char {
    General = 0,
    InvalidQubit,      // position out of range inside a register
    InvalidOperation,  // e.g. control == target
    Resource,          // register size cap exceeded
    NoQubit,           // node qubit capacity exhausted
    UnknownId,         // no such (virtual or simulated) qubit
    Expired,           // qubit id refers to a released qubit
    Denied,            // qubit owned by another application
    Unavailable,       // receiver refused a transferred qubit
    Timeout,           // peer request, receive or lock budget exhausted
    Unsupported,       // unknown instruction or unsupported sequence
    Version,           // unsupported protocol version
    Protocol,          // malformed frame or protocol violation
    Config,            // bad configuration or unknown node name
    Internal,          // broken internal invariant
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace qnet
