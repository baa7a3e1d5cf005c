#include "qnet/common/socket.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace qnet::net {
namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "*" || host == "0.0.0.0") {
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        return addr;
    }
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        fail(ErrorCode::Config, "cannot resolve host '" + host + "'");
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return addr;
}

}  // namespace

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.release();
    }
    return *this;
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port) {
    auto addr = resolve(host, port);
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) fail(ErrorCode::Internal, "socket(): " + errno_text());
    TcpStream s(fd);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        fail(ErrorCode::Unavailable, "connect " + host + ":" + std::to_string(port) + ": " + errno_text());
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

TcpStream TcpStream::connect_retry(const std::string& host, std::uint16_t port, std::chrono::milliseconds window,
                                   std::chrono::milliseconds interval) {
    auto deadline = std::chrono::steady_clock::now() + window;
    while (true) {
        try {
            return connect(host, port);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unavailable || std::chrono::steady_clock::now() + interval > deadline) {
                fail(ErrorCode::Timeout, std::string("giving up: ") + e.what());
            }
        }
        std::this_thread::sleep_for(interval);
    }
}

void TcpStream::write_all(std::span<const std::uint8_t> data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::Unavailable, "send: " + errno_text());
        }
        sent += static_cast<std::size_t>(n);
    }
}

bool TcpStream::read_exact(std::span<std::uint8_t> out) {
    std::size_t got = 0;
    while (got < out.size()) {
        ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::Unavailable, "recv: " + errno_text());
        }
        if (n == 0) {
            if (got == 0) return false;
            fail(ErrorCode::Protocol, "connection closed mid-message");
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

std::size_t TcpStream::read_some(std::span<std::uint8_t> out) {
    while (true) {
        ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::Unavailable, "recv: " + errno_text());
        }
        return static_cast<std::size_t>(n);
    }
}

void TcpStream::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpStream::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
    auto addr = resolve(host, port);
    fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) fail(ErrorCode::Internal, "socket(): " + errno_text());
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        auto msg = "bind " + host + ":" + std::to_string(port) + ": " + errno_text();
        close();
        fail(ErrorCode::Config, msg);
    }
    if (::listen(fd_, 128) != 0) {
        auto msg = "listen: " + errno_text();
        close();
        fail(ErrorCode::Config, msg);
    }
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
}

TcpListener& TcpListener::operator=(TcpListener&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        port_ = other.port_;
        other.fd_ = -1;
    }
    return *this;
}

TcpStream TcpListener::accept() {
    while (fd_ >= 0) {
        int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) {
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            return TcpStream(fd);
        }
        if (errno == EINTR || errno == ECONNABORTED) continue;
        break;
    }
    return {};
}

void TcpListener::shutdown() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void TcpListener::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

bool read_prefixed(TcpStream& s, Bytes& out, std::uint32_t max_len) {
    std::uint8_t hdr[4];
    if (!s.read_exact(hdr)) return false;
    std::uint32_t len = std::uint32_t(hdr[0]) << 24 | std::uint32_t(hdr[1]) << 16 | std::uint32_t(hdr[2]) << 8 | hdr[3];
    if (len > max_len) fail(ErrorCode::Protocol, "message length " + std::to_string(len) + " exceeds limit");
    out.resize(len);
    if (len > 0 && !s.read_exact(out)) fail(ErrorCode::Protocol, "connection closed mid-message");
    return true;
}

void write_prefixed(TcpStream& s, std::span<const std::uint8_t> payload) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(payload.size())).raw(payload);
    s.write_all(w.bytes());
}

}  // namespace qnet::net
