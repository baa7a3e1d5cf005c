#include "qnet/common/error.hpp"

namespace qnet {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::General: return "general";
        case ErrorCode::InvalidQubit: return "invalid-qubit";
        case ErrorCode::InvalidOperation: return "invalid-operation";
        case ErrorCode::Resource: return "resource";
        case ErrorCode::NoQubit: return "no-qubit";
        case ErrorCode::UnknownId: return "unknown-id";
        case ErrorCode::Expired: return "expired";
        case ErrorCode::Denied: return "denied";
        case ErrorCode::Unavailable: return "unavailable";
        case ErrorCode::Timeout: return "timeout";
        case ErrorCode::Unsupported: return "unsupported";
        case ErrorCode::Version: return "version";
        case ErrorCode::Protocol: return "protocol";
        case ErrorCode::Config: return "config";
        case ErrorCode::Internal: return "internal";
    }
    return "unknown";
}

}  // namespace qnet
