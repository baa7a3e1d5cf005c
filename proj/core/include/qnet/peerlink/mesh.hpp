#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "qnet/common/socket.hpp"
#include "qnet/peerlink/frame.hpp"
#include "qnet/peerlink/messages.hpp"

namespace qnet::peerlink {

struct MeshOptions {
    std::chrono::milliseconds request_timeout{30000};
    std::chrono::milliseconds connect_window{10000};
    std::chrono::milliseconds connect_interval{250};
    std::size_t response_cache_size = 8192;
};

struct PeerAddress {
    std::string name;
    std::string host;
    std::uint16_t port = 0;
};

/// Full mesh of persistent peer connections. Each pair shares one stream;
/// the node listed earlier in the directory dials, the later one accepts.
/// Requests are served on a worker pool so a handler may itself issue
/// outbound calls; responses are matched by request_id.
class PeerMesh {
public:
    /// `from` is the peer name, or empty for anonymous (tool) connections.
    using Handler = std::function<PeerReply(const std::string& from, PeerOp op, std::span<const std::uint8_t> body)>;

    PeerMesh(std::string self, MeshOptions options = {});
    ~PeerMesh();
    PeerMesh(const PeerMesh&) = delete;
    PeerMesh& operator=(const PeerMesh&) = delete;

    /// Starts accepting on `listener` and dials every peer ordered after `self`
    /// in `peers` (which lists the whole network, self included).
    void start(net::TcpListener listener, std::vector<PeerAddress> peers, Handler handler);
    /// Blocks until every peer is connected or the connect window expires.
    bool wait_ready(std::chrono::milliseconds timeout);
    void stop();

    /// Sends a request and waits for its response. Throws Unavailable when the
    /// peer is not connected and Timeout after `request_timeout`.
    PeerReply call(const std::string& peer, PeerOp op, Bytes body);
    PeerReply call(const std::string& peer, PeerOp op, Bytes body, std::chrono::milliseconds timeout);

    const std::string& self() const { return self_; }
    std::size_t peer_count() const;
    std::vector<std::string> connected_peers() const;
    std::uint64_t duplicate_requests() const { return duplicates_.load(); }

private:
    struct Connection;
    struct CachedResponse;

    void accept_loop();
    void dial_loop(PeerAddress peer);
    void poll_loop();
    void add_connection(std::shared_ptr<Connection> conn);
    void on_frame(const std::shared_ptr<Connection>& conn, PeerMessage msg);
    void serve(std::shared_ptr<Connection> conn, PeerMessage msg);
    void drop(const std::shared_ptr<Connection>& conn, const std::string& why);
    void submit(std::function<void()> task);
    void worker_loop();
    void wake_poller();

    std::string self_;
    MeshOptions options_;
    Handler handler_;
    net::TcpListener listener_;
    std::vector<PeerAddress> expected_;

    mutable std::mutex mu_;
    std::condition_variable ready_cv_;
    std::map<std::string, std::shared_ptr<Connection>> peers_;
    std::vector<std::shared_ptr<Connection>> conns_;
    std::unordered_map<std::uint64_t, std::promise<PeerReply>> pending_;
    std::unordered_map<std::uint64_t, std::string> pending_peer_;

    std::mutex cache_mu_;
    std::map<std::pair<std::string, std::uint64_t>, std::shared_ptr<CachedResponse>> cache_;
    std::deque<std::pair<std::string, std::uint64_t>> cache_order_;

    std::mutex pool_mu_;
    std::condition_variable pool_cv_;
    std::deque<std::function<void()>> tasks_;
    std::vector<std::thread> workers_;
    std::size_t idle_workers_ = 0;

    std::atomic<std::uint64_t> next_request_{1};
    std::atomic<std::uint64_t> duplicates_{0};
    std::atomic<bool> stopping_{false};
    int wake_fd_ = -1;
    std::thread accept_thread_;
    std::thread poll_thread_;
    std::vector<std::thread> dial_threads_;
};

}  // namespace qnet::peerlink
