#pragma once

#include <chrono>
#include <cstdint>

namespace qnet {

/// Wall-clock milliseconds since the Unix epoch.
inline std::uint64_t now_millis() {
    using namespace std::chrono;
    return static_cast<std::uint64_t>(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

}  // namespace qnet
