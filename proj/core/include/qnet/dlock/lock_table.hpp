#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace qnet::dlock {

enum class LockKind : std::uint8_t { Register = 0, Qubit = 1 };

/// Totally ordered by (node, kind, id).
struct LockId {
    std::string node;
    LockKind kind = LockKind::Register;
    std::uint64_t id = 0;

    friend auto operator<=>(const LockId& a, const LockId& b) {
        return std::tie(a.node, a.kind, a.id) <=> std::tie(b.node, b.kind, b.id);
    }
    friend bool operator==(const LockId&, const LockId&) = default;
};

std::string to_string(const LockId& id);

/// Transaction identifier; unique across the network (high bits carry the node index).
using TxnId = std::uint64_t;

struct BackoffPolicy {
    std::chrono::milliseconds min_backoff{10};
    std::chrono::milliseconds max_backoff{100};
    int attempts = 50;
};

struct LockMetrics {
    std::uint64_t acquisitions = 0;
    std::uint64_t conflicts = 0;
    std::uint64_t backoffs = 0;
    std::uint64_t timeouts = 0;
};

/// Lock table for one node. All acquisitions are all-or-nothing: a
/// transaction either gets its whole lock set or holds nothing.
class LockTable {
public:
    /// Called for each lock granted, in acquisition order.
    using TraceHook = std::function<void(TxnId, const LockId&)>;

    LockTable() = default;
    LockTable(const LockTable&) = delete;
    LockTable& operator=(const LockTable&) = delete;

    /// Grants every lock in `locks` (acquired in LockId order) or none.
    /// Throws Internal if `txn` already holds one of them.
    bool try_acquire_all(TxnId txn, std::span<const LockId> locks);

    /// Retries try_acquire_all with randomized backoff. Between attempts the
    /// transaction holds nothing. A release on this table wakes waiters early.
    /// Throws Timeout once `policy.attempts` backoff periods have expired.
    void acquire_all(TxnId txn, std::span<const LockId> locks, const BackoffPolicy& policy, std::mt19937_64& rng);

    /// Releases every lock held by `txn`. Throws Internal when it holds none.
    void release_all(TxnId txn);
    /// Like release_all but tolerates an empty hold set; returns how many were freed.
    std::size_t release_if_held(TxnId txn);

    bool holds(TxnId txn, const LockId& id) const;
    std::size_t held_count(TxnId txn) const;
    std::size_t size() const;
    bool empty() const { return size() == 0; }
    LockMetrics metrics() const;
    void note_backoff();

    void set_trace(TraceHook hook);

private:
    bool try_locked(TxnId txn, std::vector<LockId>& sorted);

    mutable std::mutex mu_;
    std::condition_variable released_;
    std::uint64_t release_epoch_ = 0;
    std::map<LockId, TxnId> held_;
    LockMetrics metrics_;
    TraceHook trace_;
};

}  // namespace qnet::dlock
