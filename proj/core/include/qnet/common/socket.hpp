#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>

#include "qnet/common/bytes.hpp"

namespace qnet::net {

/// Owning file descriptor for a connected TCP stream.
class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(int fd) : fd_(fd) {}
    TcpStream(TcpStream&& other) noexcept : fd_(other.release()) {}
    TcpStream& operator=(TcpStream&& other) noexcept;
    TcpStream(const TcpStream&) = delete;
    TcpStream& operator=(const TcpStream&) = delete;
    ~TcpStream() { close(); }

    /// Connects once; throws ErrorCode::Unavailable on refusal.
    static TcpStream connect(const std::string& host, std::uint16_t port);
    /// Retries until `window` elapses.
    static TcpStream connect_retry(const std::string& host, std::uint16_t port, std::chrono::milliseconds window,
                                   std::chrono::milliseconds interval);

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    int release() {
        int fd = fd_;
        fd_ = -1;
        return fd;
    }

    void write_all(std::span<const std::uint8_t> data);
    /// Returns false on clean EOF before any byte was read.
    bool read_exact(std::span<std::uint8_t> out);
    /// Reads whatever is available (blocking until at least one byte); 0 on EOF.
    std::size_t read_some(std::span<std::uint8_t> out);
    void shutdown();
    void close();

private:
    int fd_ = -1;
};

class TcpListener {
public:
    TcpListener() = default;
    /// Binds host:port (port 0 picks an ephemeral port). Throws ErrorCode::Config on bind failure.
    TcpListener(const std::string& host, std::uint16_t port);
    TcpListener(TcpListener&& other) noexcept : fd_(other.fd_), port_(other.port_) { other.fd_ = -1; }
    TcpListener& operator=(TcpListener&& other) noexcept;
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    ~TcpListener() { close(); }

    std::uint16_t port() const { return port_; }
    bool valid() const { return fd_ >= 0; }
    /// Blocks for a connection; returns an invalid stream once the listener is shut down.
    TcpStream accept();
    void shutdown();
    void close();

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

/// Reads one 4-byte big-endian length-prefixed message. Returns false on EOF.
bool read_prefixed(TcpStream& s, Bytes& out, std::uint32_t max_len = 1u << 28);
void write_prefixed(TcpStream& s, std::span<const std::uint8_t> payload);

}  // namespace qnet::net
