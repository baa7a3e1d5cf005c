#include "qnet/peerlink/mesh.hpp"

#include <poll.h>
#include <sys/eventfd.h>
#include <sys/socket.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cerrno>

namespace qnet::peerlink {

struct PeerMesh::Connection {
    net::TcpStream stream;
    std::string peer;   // directory name; empty for anonymous clients
    std::string label;  // cache key prefix, unique per connection
    std::mutex write_mu;
    FrameAssembler assembler;
    std::atomic<bool> dead{false};

    void send(const PeerMessage& msg) {
        auto bytes = frame_encode(msg);
        std::lock_guard lk(write_mu);
        stream.write_all(bytes);
    }
};

struct PeerMesh::CachedResponse {
    bool done = false;
    Bytes body;
    std::vector<std::pair<std::shared_ptr<Connection>, std::uint64_t>> waiting;
};

PeerMesh::PeerMesh(std::string self, MeshOptions options) : self_(std::move(self)), options_(options) {
    wake_fd_ = ::eventfd(0, EFD_CLOEXEC | EFD_NONBLOCK);
}

PeerMesh::~PeerMesh() {
    stop();
    if (wake_fd_ >= 0) ::close(wake_fd_);
}

void PeerMesh::start(net::TcpListener listener, std::vector<PeerAddress> peers, Handler handler) {
    handler_ = std::move(handler);
    listener_ = std::move(listener);
    expected_ = std::move(peers);
    poll_thread_ = std::thread([this] { poll_loop(); });
    accept_thread_ = std::thread([this] { accept_loop(); });

    auto self_it = std::find_if(expected_.begin(), expected_.end(), [&](const auto& p) { return p.name == self_; });
    if (self_it == expected_.end()) fail(ErrorCode::Config, "node '" + self_ + "' is not in the peer list");
    for (auto it = std::next(self_it); it != expected_.end(); ++it) {
        dial_threads_.emplace_back([this, peer = *it] { dial_loop(peer); });
    }
}

bool PeerMesh::wait_ready(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    return ready_cv_.wait_for(lk, timeout, [&] { return peers_.size() + 1 >= expected_.size() || stopping_; }) &&
           !stopping_;
}

void PeerMesh::stop() {
    if (stopping_.exchange(true)) return;
    listener_.shutdown();
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();
    for (auto& t : dial_threads_)
        if (t.joinable()) t.join();
    wake_poller();
    if (poll_thread_.joinable()) poll_thread_.join();

    std::vector<std::shared_ptr<Connection>> conns;
    {
        std::lock_guard lk(mu_);
        conns.swap(conns_);
        peers_.clear();
        for (auto& [id, p] : pending_) p.set_value(PeerReply::err(ErrorCode::Unavailable, "mesh stopped"));
        pending_.clear();
        pending_peer_.clear();
    }
    for (auto& c : conns) c->stream.shutdown();
    {
        std::lock_guard lk(pool_mu_);
        pool_cv_.notify_all();
    }
    for (auto& t : workers_)
        if (t.joinable()) t.join();
    workers_.clear();
    for (auto& c : conns) c->stream.close();
    ready_cv_.notify_all();
}

std::size_t PeerMesh::peer_count() const {
    std::lock_guard lk(mu_);
    return peers_.size();
}

std::vector<std::string> PeerMesh::connected_peers() const {
    std::lock_guard lk(mu_);
    std::vector<std::string> out;
    for (const auto& [name, _] : peers_) out.push_back(name);
    return out;
}

void PeerMesh::wake_poller() {
    if (wake_fd_ >= 0) {
        std::uint64_t one = 1;
        [[maybe_unused]] auto n = ::write(wake_fd_, &one, sizeof one);
    }
}

void PeerMesh::add_connection(std::shared_ptr<Connection> conn) {
    {
        std::lock_guard lk(mu_);
        if (stopping_) return;
        conns_.push_back(conn);
        if (!conn->peer.empty()) {
            if (auto it = peers_.find(conn->peer); it != peers_.end()) {
                spdlog::warn("[{}] replacing existing connection to {}", self_, conn->peer);
            }
            peers_[conn->peer] = conn;
            spdlog::debug("[{}] connected to peer {} ({} of {})", self_, conn->peer, peers_.size(), expected_.size() - 1);
        }
    }
    ready_cv_.notify_all();
    wake_poller();
}

void PeerMesh::accept_loop() {
    static std::atomic<std::uint64_t> anon_counter{0};
    while (!stopping_) {
        auto stream = listener_.accept();
        if (!stream.valid()) break;
        try {
            timeval tv{5, 0};
            ::setsockopt(stream.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
            Bytes frame(kFramePrefixSize);
            if (!stream.read_exact(frame)) continue;
            std::uint32_t len = std::uint32_t(frame[0]) << 24 | std::uint32_t(frame[1]) << 16 |
                                std::uint32_t(frame[2]) << 8 | frame[3];
            if (len < kFrameHeaderSize || len > 4096) fail(ErrorCode::Protocol, "bad handshake length");
            frame.resize(kFramePrefixSize + len);
            if (!stream.read_exact(std::span(frame).subspan(kFramePrefixSize))) continue;
            auto hello = frame_decode(frame);
            if (hello.op != PeerOp::Hello) fail(ErrorCode::Protocol, "first frame must be HELLO");
            ByteReader r(hello.body);
            auto name = r.str();
            timeval off{0, 0};
            ::setsockopt(stream.fd(), SOL_SOCKET, SO_RCVTIMEO, &off, sizeof off);

            auto conn = std::make_shared<Connection>();
            conn->stream = std::move(stream);
            bool known = std::any_of(expected_.begin(), expected_.end(),
                                     [&](const auto& p) { return p.name == name && name != self_; });
            conn->peer = known ? name : std::string();
            conn->label = known ? name : "#anon" + std::to_string(++anon_counter);
            add_connection(std::move(conn));
        } catch (const std::exception& e) {
            spdlog::warn("[{}] rejected incoming connection: {}", self_, e.what());
        }
    }
}

void PeerMesh::dial_loop(PeerAddress peer) {
    auto deadline = std::chrono::steady_clock::now() + options_.connect_window;
    while (!stopping_) {
        try {
            auto stream = net::TcpStream::connect(peer.host, peer.port);
            auto conn = std::make_shared<Connection>();
            conn->stream = std::move(stream);
            conn->peer = peer.name;
            conn->label = peer.name;
            conn->send(PeerMessage{0, FrameKind::Request, PeerOp::Hello, ByteWriter().str(self_).take()});
            add_connection(std::move(conn));
            return;
        } catch (const Error& e) {
            if (std::chrono::steady_clock::now() >= deadline) {
                spdlog::error("[{}] could not reach peer {} at {}:{}: {}", self_, peer.name, peer.host, peer.port, e.what());
                return;
            }
        }
        std::this_thread::sleep_for(options_.connect_interval);
    }
}

void PeerMesh::poll_loop() {
    std::vector<std::uint8_t> buf(1 << 16);
    while (!stopping_) {
        std::vector<std::shared_ptr<Connection>> conns;
        {
            std::lock_guard lk(mu_);
            conns = conns_;
        }
        std::vector<pollfd> fds;
        fds.push_back({wake_fd_, POLLIN, 0});
        for (const auto& c : conns) fds.push_back({c->stream.fd(), POLLIN, 0});
        int rc = ::poll(fds.data(), fds.size(), 500);
        if (rc < 0) {
            if (errno == EINTR) continue;
            spdlog::error("[{}] poll failed: {}", self_, errno);
            break;
        }
        if (fds[0].revents & POLLIN) {
            std::uint64_t drain;
            [[maybe_unused]] auto n = ::read(wake_fd_, &drain, sizeof drain);
        }
        for (std::size_t i = 1; i < fds.size(); ++i) {
            if (!fds[i].revents) continue;
            auto& conn = conns[i - 1];
            if (conn->dead) continue;
            ssize_t n = ::recv(conn->stream.fd(), buf.data(), buf.size(), MSG_DONTWAIT);
            if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR)) continue;
            if (n <= 0) {
                drop(conn, n == 0 ? "connection closed" : "read error");
                continue;
            }
            try {
                conn->assembler.feed(std::span(buf.data(), static_cast<std::size_t>(n)));
                while (auto msg = conn->assembler.next()) on_frame(conn, std::move(*msg));
            } catch (const Error& e) {
                drop(conn, std::string("protocol error: ") + e.what());
            }
        }
    }
}

void PeerMesh::drop(const std::shared_ptr<Connection>& conn, const std::string& why) {
    if (conn->dead.exchange(true)) return;
    conn->stream.shutdown();
    std::lock_guard lk(mu_);
    std::erase(conns_, conn);
    if (!conn->peer.empty()) {
        if (auto it = peers_.find(conn->peer); it != peers_.end() && it->second == conn) peers_.erase(it);
        if (!stopping_) {
            // A clean close is how a peer shuts down.
            spdlog::log(why == "connection closed" ? spdlog::level::info : spdlog::level::err, "[{}] lost peer {}: {}",
                        self_, conn->peer, why);
        }
        for (auto it = pending_peer_.begin(); it != pending_peer_.end();) {
            if (it->second == conn->peer) {
                if (auto p = pending_.find(it->first); p != pending_.end()) {
                    p->second.set_value(PeerReply::err(ErrorCode::Unavailable, "peer " + conn->peer + " disconnected"));
                    pending_.erase(p);
                }
                it = pending_peer_.erase(it);
            } else {
                ++it;
            }
        }
    }
}

void PeerMesh::on_frame(const std::shared_ptr<Connection>& conn, PeerMessage msg) {
    if (msg.kind == FrameKind::Response) {
        std::lock_guard lk(mu_);
        auto it = pending_.find(msg.request_id);
        if (it == pending_.end()) return;  // timed out already
        PeerReply reply;
        try {
            reply = PeerReply::decode(msg.body);
        } catch (const Error& e) {
            reply = PeerReply::err(ErrorCode::Protocol, e.what());
        }
        it->second.set_value(std::move(reply));
        pending_.erase(it);
        pending_peer_.erase(msg.request_id);
        return;
    }
    if (msg.op == PeerOp::Hello) return;
    submit([this, conn, m = std::move(msg)]() mutable { serve(conn, std::move(m)); });
}

void PeerMesh::serve(std::shared_ptr<Connection> conn, PeerMessage msg) {
    auto key = std::make_pair(conn->label, msg.request_id);
    std::shared_ptr<CachedResponse> entry;
    {
        std::lock_guard lk(cache_mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            ++duplicates_;
            if (!it->second->done) {
                it->second->waiting.emplace_back(conn, msg.request_id);
                return;
            }
            entry = it->second;
        } else {
            cache_[key] = std::make_shared<CachedResponse>();
            cache_order_.push_back(key);
            while (cache_order_.size() > options_.response_cache_size) {
                cache_.erase(cache_order_.front());
                cache_order_.pop_front();
            }
        }
    }
    if (entry) {
        try {
            conn->send(PeerMessage{msg.request_id, FrameKind::Response, msg.op, entry->body});
        } catch (const Error&) {
        }
        return;
    }

    PeerReply reply;
    try {
        reply = handler_(conn->peer, msg.op, msg.body);
    } catch (const Error& e) {
        reply = PeerReply::err(e.code(), e.what());
    } catch (const std::exception& e) {
        reply = PeerReply::err(ErrorCode::Internal, e.what());
    }
    auto body = reply.encode();

    std::vector<std::pair<std::shared_ptr<Connection>, std::uint64_t>> waiting;
    {
        std::lock_guard lk(cache_mu_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            it->second->done = true;
            it->second->body = body;
            waiting.swap(it->second->waiting);
        }
    }
    waiting.emplace_back(conn, msg.request_id);
    for (auto& [c, id] : waiting) {
        try {
            c->send(PeerMessage{id, FrameKind::Response, msg.op, body});
        } catch (const Error& e) {
            spdlog::warn("[{}] could not answer {} request: {}", self_, to_string(msg.op), e.what());
        }
    }
}

PeerReply PeerMesh::call(const std::string& peer, PeerOp op, Bytes body) {
    return call(peer, op, std::move(body), options_.request_timeout);
}

PeerReply PeerMesh::call(const std::string& peer, PeerOp op, Bytes body, std::chrono::milliseconds timeout) {
    std::shared_ptr<Connection> conn;
    std::future<PeerReply> fut;
    const auto id = next_request_++;
    {
        std::lock_guard lk(mu_);
        auto it = peers_.find(peer);
        if (it == peers_.end()) fail(ErrorCode::Unavailable, "no connection to peer '" + peer + "'");
        conn = it->second;
        fut = pending_[id].get_future();
        pending_peer_[id] = peer;
    }
    try {
        conn->send(PeerMessage{id, FrameKind::Request, op, std::move(body)});
    } catch (const Error&) {
        std::lock_guard lk(mu_);
        pending_.erase(id);
        pending_peer_.erase(id);
        throw;
    }
    if (fut.wait_for(timeout) != std::future_status::ready) {
        std::lock_guard lk(mu_);
        if (pending_.erase(id) > 0) {
            pending_peer_.erase(id);
            fail(ErrorCode::Timeout, std::string(to_string(op)) + " to " + peer + " timed out");
        }
    }
    return fut.get();
}

void PeerMesh::submit(std::function<void()> task) {
    std::lock_guard lk(pool_mu_);
    if (stopping_) return;
    tasks_.push_back(std::move(task));
    if (tasks_.size() > idle_workers_) {
        workers_.emplace_back([this] { worker_loop(); });
    } else {
        pool_cv_.notify_one();
    }
}

void PeerMesh::worker_loop() {
    std::unique_lock lk(pool_mu_);
    while (true) {
        ++idle_workers_;
        pool_cv_.wait(lk, [&] { return stopping_ || !tasks_.empty(); });
        --idle_workers_;
        if (tasks_.empty()) return;  // stopping
        auto task = std::move(tasks_.front());
        tasks_.pop_front();
        lk.unlock();
        task();
        lk.lock();
    }
}

}  // namespace qnet::peerlink
