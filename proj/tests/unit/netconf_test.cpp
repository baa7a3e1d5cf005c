#include <gtest/gtest.h>

#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "qnet/common/socket.hpp"
#include "qnet/netconf/directory.hpp"
#include "qnet/netconf/launcher.hpp"

extern char** environ;

using namespace qnet;
using namespace qnet::netconf;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

std::uint16_t free_port() {
    net::TcpListener l("127.0.0.1", 0);
    return l.port();
}

}  // namespace

TEST(Config, ParsesTwoNodes) {
    auto d = parse_config("Alice 127.0.0.1 8801 8803\nBob 127.0.0.1 8802 8804");
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d.entries()[0], (NodeEntry{"Alice", "127.0.0.1", 8801, 8803}));
    EXPECT_EQ(d.entries()[1], (NodeEntry{"Bob", "127.0.0.1", 8802, 8804}));
    EXPECT_EQ(d.index_of("Bob"), 1u);
    EXPECT_EQ(d.find("Carol"), nullptr);
    EXPECT_EQ(code_of([&] { d.at("Carol"); }), ErrorCode::Config);
}

TEST(Config, CommentsAndBlankLines) {
    auto d = parse_config("# network\n\n  Alice localhost 1 2   # trailing\n\t\nBob 127.0.0.1 3 4\n");
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(d.entries()[0].host, "localhost");
}

TEST(Config, Errors) {
    const auto dup = message_of([] { parse_config("Alice h 1 2\nAlice h 3 4"); });
    EXPECT_NE(dup.find("line 2"), std::string::npos) << dup;
    EXPECT_EQ(code_of([] { parse_config("Alice h 0 2"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_config("Alice h 65536 2"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_config("Alice h x 2"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_config("Alice h 1"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_config("Alice h 1 2\nBob h 2 3"); }), ErrorCode::Config);
    EXPECT_EQ(code_of([] { parse_config("Alice h 5 5"); }), ErrorCode::Config);
    // Same port on different hosts is fine.
    EXPECT_NO_THROW(parse_config("Alice h1 1 2\nBob h2 1 2"));
}

TEST(Config, RenderRoundTrip) {
    std::mt19937 rng(5);
    for (int t = 0; t < 100; ++t) {
        std::vector<NodeEntry> es;
        const int n = 1 + rng() % 10;
        for (int i = 0; i < n; ++i) {
            es.push_back({"node" + std::to_string(i), "10.0.0." + std::to_string(rng() % 3),
                          static_cast<std::uint16_t>(1000 + 2 * i), static_cast<std::uint16_t>(1001 + 2 * i)});
        }
        NodeDirectory d(es);
        EXPECT_EQ(parse_config(render_config(d)), d);
    }
}

TEST(Config, CqcAddressLookup) {
    auto d = parse_config("Alice 127.0.0.1 8801 8803\nBob 127.0.0.1 8802 8804");
    const auto* e = d.find_by_cqc_address(0x7F000001, 8804);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->name, "Bob");
    EXPECT_EQ(d.find_by_cqc_address(0x7F000001, 8801), nullptr);
    EXPECT_EQ(resolve_ipv4("127.0.0.1"), 0x7F000001u);
}

TEST(Launcher, UnknownNameAndBindFailure) {
    auto d = NodeDirectory({{"a", "127.0.0.1", free_port(), free_port()}});
    EXPECT_EQ(code_of([&] { NodeServer s(d, "zz", {}); }), ErrorCode::Config);
    net::TcpListener taken("127.0.0.1", 0);
    auto busy = NodeDirectory({{"a", "127.0.0.1", taken.port(), free_port()}});
    EXPECT_EQ(code_of([&] { NodeServer s(busy, "a", {}); }), ErrorCode::Config);
}

// ---------------------------------------------------------------------------
// The qnetnode binary, one process per node.
#ifdef QNET_NODE_BIN

namespace {

class Process {
public:
    explicit Process(std::vector<std::string> args) {
        int fds[2];
        if (pipe(fds) != 0) throw std::runtime_error("pipe");
        posix_spawn_file_actions_t fa;
        posix_spawn_file_actions_init(&fa);
        posix_spawn_file_actions_adddup2(&fa, fds[1], 1);
        posix_spawn_file_actions_addclose(&fa, fds[0]);
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        if (posix_spawn(&pid_, argv[0], &fa, nullptr, argv.data(), environ) != 0) throw std::runtime_error("spawn");
        posix_spawn_file_actions_destroy(&fa);
        close(fds[1]);
        out_ = fds[0];
    }
    ~Process() {
        if (pid_ > 0) {
            kill(pid_, SIGKILL);
            waitpid(pid_, nullptr, 0);
        }
        close(out_);
    }

    /// Next stdout line, or empty on EOF / timeout.
    std::string read_line(std::chrono::milliseconds timeout) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            if (auto nl = buf_.find('\n'); nl != std::string::npos) {
                auto line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return {};
            pollfd p{out_, POLLIN, 0};
            if (poll(&p, 1, static_cast<int>(left.count())) <= 0) return {};
            char tmp[512];
            const auto n = read(out_, tmp, sizeof tmp);
            if (n <= 0) return {};
            buf_.append(tmp, static_cast<std::size_t>(n));
        }
    }

    std::string read_all(std::chrono::milliseconds timeout) {
        std::string all;
        for (auto l = read_line(timeout); !l.empty(); l = read_line(timeout)) all += l + "\n";
        return all;
    }

    int terminate_and_wait(int sig = SIGTERM) {
        kill(pid_, sig);
        return wait();
    }

    int wait() {
        int status = 0;
        waitpid(pid_, &status, 0);
        pid_ = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    }

private:
    pid_t pid_ = -1;
    int out_ = -1;
    std::string buf_;
};

std::filesystem::path write_config(const std::string& tag, std::size_t n) {
    std::string text;
    for (std::size_t i = 0; i < n; ++i) {
        text += "node" + std::to_string(i) + " 127.0.0.1 " + std::to_string(free_port()) + " " +
                std::to_string(free_port()) + "\n";
    }
    auto path = std::filesystem::temp_directory_path() / ("qnet_" + tag + "_" + std::to_string(getpid()) + ".conf");
    std::ofstream(path) << text;
    return path;
}

Process node_proc(const std::filesystem::path& cfg, const std::string& name) {
    return Process({QNET_NODE_BIN, "run", "--config", cfg.string(), "--name", name, "--log-level", "warn"});
}

}  // namespace

TEST(NodeBinary, TwoNodesReachReady) {
    const auto cfg = write_config("two", 2);
    Process a = node_proc(cfg, "node0");
    Process b = node_proc(cfg, "node1");
    const auto la = a.read_line(std::chrono::seconds(15));
    const auto lb = b.read_line(std::chrono::seconds(15));
    EXPECT_EQ(la.rfind("ready node=node0", 0), 0u) << la;
    EXPECT_NE(la.find("peers=1"), std::string::npos) << la;
    EXPECT_NE(lb.find("peers=1"), std::string::npos) << lb;
    for (auto name : {"node0", "node1"}) {
        Process st({QNET_NODE_BIN, "status", "--config", cfg.string(), "--name", name});
        const auto out = st.read_all(std::chrono::seconds(10));
        EXPECT_EQ(st.wait(), 0);
        EXPECT_NE(out.find("node=" + std::string(name)), std::string::npos) << out;
        EXPECT_NE(out.find("peers=1\n"), std::string::npos) << out;
    }
    EXPECT_EQ(a.terminate_and_wait(), 0);
    EXPECT_EQ(b.terminate_and_wait(), 0);
    std::filesystem::remove(cfg);
}

TEST(NodeBinary, StartupErrors) {
    const auto cfg = write_config("err", 1);
    Process unknown = node_proc(cfg, "nobody");
    EXPECT_NE(unknown.wait(), 0);

    Process first = node_proc(cfg, "node0");
    ASSERT_EQ(first.read_line(std::chrono::seconds(15)).rfind("ready", 0), 0u);
    Process second = node_proc(cfg, "node0");
    EXPECT_NE(second.wait(), 0);
    EXPECT_EQ(first.terminate_and_wait(), 0);
    std::filesystem::remove(cfg);
}

TEST(NodeBinary, AnyStartOrderConverges) {
    std::mt19937 rng(static_cast<unsigned>(std::random_device{}()));
    for (int round = 0; round < 2; ++round) {
        const auto cfg = write_config("order", 3);
        std::vector<std::string> names{"node0", "node1", "node2"};
        std::shuffle(names.begin(), names.end(), rng);
        std::vector<std::unique_ptr<Process>> procs;
        for (const auto& n : names) {
            procs.push_back(std::make_unique<Process>(
                std::vector<std::string>{QNET_NODE_BIN, "run", "--config", cfg.string(), "--name", n, "--log-level", "warn"}));
            std::this_thread::sleep_for(std::chrono::milliseconds(rng() % 600));
        }
        for (std::size_t i = 0; i < procs.size(); ++i) {
            const auto line = procs[i]->read_line(std::chrono::seconds(15));
            EXPECT_NE(line.find("peers=2"), std::string::npos) << names[i] << ": " << line;
        }
        for (auto& p : procs) EXPECT_EQ(p->terminate_and_wait(), 0);
        std::filesystem::remove(cfg);
    }
}
#endif  // QNET_NODE_BIN
