#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qnet::netconf {

struct NodeEntry {
    std::string name;
    std::string host;
    std::uint16_t backend_port = 0;
    std::uint16_t cqc_port = 0;

    friend bool operator==(const NodeEntry&, const NodeEntry&) = default;
};

/// Name -> (host, backend port, CQC port) for every node of the simulated network.
class NodeDirectory {
public:
    NodeDirectory() = default;
    /// Validates the entries; throws ErrorCode::Config on duplicates or collisions.
    explicit NodeDirectory(std::vector<NodeEntry> entries);

    const std::vector<NodeEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const NodeEntry* find(std::string_view name) const;
    const NodeEntry& at(std::string_view name) const;  // throws Config
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Entry whose host resolves to `ipv4` (host byte order) and whose CQC port is `cqc_port`.
    const NodeEntry* find_by_cqc_address(std::uint32_t ipv4, std::uint16_t cqc_port) const;

    friend bool operator==(const NodeDirectory&, const NodeDirectory&) = default;

private:
    std::vector<NodeEntry> entries_;
};

/// Line format: `name host backend_port cqc_port`; '#' starts a comment.
NodeDirectory parse_config(std::string_view text);
std::string render_config(const NodeDirectory& dir);
NodeDirectory load_config(const std::filesystem::path& path);

/// IPv4 address of `host` in host byte order. Throws Config when unresolvable.
std::uint32_t resolve_ipv4(const std::string& host);

}  // namespace qnet::netconf
