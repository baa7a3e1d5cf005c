#include "qnet/bench/classical.hpp"

namespace qnet::bench {

ClassicalEndpoint::ClassicalEndpoint() : listener_("127.0.0.1", 0) {
    thread_ = std::thread([this] { accept_loop(); });
}

ClassicalEndpoint::~ClassicalEndpoint() {
    {
        std::lock_guard lk(mu_);
        stopping_ = true;
    }
    listener_.shutdown();
    thread_.join();
}

void ClassicalEndpoint::accept_loop() {
    while (true) {
        auto stream = listener_.accept();
        if (!stream.valid()) return;
        Bytes msg;
        try {
            if (!net::read_prefixed(stream, msg)) continue;
        } catch (const Error&) {
            continue;
        }
        {
            std::lock_guard lk(mu_);
            if (stopping_) return;
            inbox_.push_back(std::move(msg));
        }
        cv_.notify_all();
    }
}

Bytes ClassicalEndpoint::recv(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    if (!cv_.wait_for(lk, timeout, [&] { return !inbox_.empty(); })) {
        fail(ErrorCode::Timeout, "no classical message arrived");
    }
    auto msg = std::move(inbox_.front());
    inbox_.pop_front();
    return msg;
}

void ClassicalEndpoint::send(std::uint16_t port, std::span<const std::uint8_t> payload) {
    auto stream = net::TcpStream::connect("127.0.0.1", port);
    net::write_prefixed(stream, payload);
}

}  // namespace qnet::bench
