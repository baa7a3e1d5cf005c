#include "qnet/netconf/directory.hpp"

#include <arpa/inet.h>
#include <netdb.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "qnet/common/error.hpp"

namespace qnet::netconf {
namespace {

std::uint16_t parse_port(std::string_view text, std::size_t line) {
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || value < 1 || value > 65535) {
        fail(ErrorCode::Config, "line " + std::to_string(line) + ": port '" + std::string(text) + "' is not in 1-65535");
    }
    return static_cast<std::uint16_t>(value);
}

}  // namespace

NodeDirectory::NodeDirectory(std::vector<NodeEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string> names;
    std::set<std::pair<std::string, std::uint16_t>> endpoints;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        const auto where = "entry " + std::to_string(i + 1) + " (" + e.name + ")";
        if (e.name.empty()) fail(ErrorCode::Config, where + ": empty node name");
        if (!names.insert(e.name).second) fail(ErrorCode::Config, where + ": duplicate node name '" + e.name + "'");
        if (e.backend_port == 0 || e.cqc_port == 0) fail(ErrorCode::Config, where + ": port 0 is not allowed");
        for (auto port : {e.backend_port, e.cqc_port}) {
            if (!endpoints.emplace(e.host, port).second) {
                fail(ErrorCode::Config, where + ": endpoint " + e.host + ":" + std::to_string(port) + " already in use");
            }
        }
    }
}

const NodeEntry* NodeDirectory::find(std::string_view name) const {
    for (const auto& e : entries_)
        if (e.name == name) return &e;
    return nullptr;
}

const NodeEntry& NodeDirectory::at(std::string_view name) const {
    if (auto* e = find(name)) return *e;
    fail(ErrorCode::Config, "unknown node '" + std::string(name) + "'");
}

std::optional<std::size_t> NodeDirectory::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    return std::nullopt;
}

const NodeEntry* NodeDirectory::find_by_cqc_address(std::uint32_t ipv4, std::uint16_t cqc_port) const {
    for (const auto& e : entries_) {
        if (e.cqc_port != cqc_port) continue;
        try {
            if (resolve_ipv4(e.host) == ipv4) return &e;
        } catch (const Error&) {
        }
    }
    return nullptr;
}

NodeDirectory parse_config(std::string_view text) {
    std::vector<NodeEntry> entries;
    std::set<std::string> names;
    std::set<std::pair<std::string, std::uint16_t>> endpoints;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream fields(raw);
        std::vector<std::string> tok;
        for (std::string t; fields >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const auto where = "line " + std::to_string(line_no);
        if (tok.size() != 4) fail(ErrorCode::Config, where + ": expected 'name host backend_port cqc_port'");
        NodeEntry e{tok[0], tok[1], parse_port(tok[2], line_no), parse_port(tok[3], line_no)};
        if (!names.insert(e.name).second) fail(ErrorCode::Config, where + ": duplicate node name '" + e.name + "'");
        for (auto port : {e.backend_port, e.cqc_port}) {
            if (!endpoints.emplace(e.host, port).second) {
                fail(ErrorCode::Config, where + ": port collision on " + e.host + ":" + std::to_string(port));
            }
        }
        entries.push_back(std::move(e));
    }
    return NodeDirectory(std::move(entries));
}

std::string render_config(const NodeDirectory& dir) {
    std::string out;
    for (const auto& e : dir.entries()) {
        out += e.name + " " + e.host + " " + std::to_string(e.backend_port) + " " + std::to_string(e.cqc_port) + "\n";
    }
    return out;
}

NodeDirectory load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Config, "cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::uint32_t resolve_ipv4(const std::string& host) {
    in_addr addr{};
    if (::inet_pton(AF_INET, host.c_str(), &addr) == 1) return ntohl(addr.s_addr);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        fail(ErrorCode::Config, "cannot resolve host '" + host + "'");
    }
    auto v = ntohl(reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr.s_addr);
    ::freeaddrinfo(res);
    return v;
}

}  // namespace qnet::netconf
