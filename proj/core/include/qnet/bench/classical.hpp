#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "qnet/common/socket.hpp"

namespace qnet::bench {

/// Inbox for classical messages between scenario roles. Each message is one
/// TCP connection carrying a 4-byte big-endian length and the payload.
class ClassicalEndpoint {
public:
    ClassicalEndpoint();
    ~ClassicalEndpoint();
    ClassicalEndpoint(const ClassicalEndpoint&) = delete;
    ClassicalEndpoint& operator=(const ClassicalEndpoint&) = delete;

    std::uint16_t port() const { return listener_.port(); }
    /// Throws Timeout when nothing arrives in time.
    Bytes recv(std::chrono::milliseconds timeout = std::chrono::seconds(60));

    static void send(std::uint16_t port, std::span<const std::uint8_t> payload);

private:
    void accept_loop();

    net::TcpListener listener_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Bytes> inbox_;
    bool stopping_ = false;
    std::thread thread_;
};

}  // namespace qnet::bench
