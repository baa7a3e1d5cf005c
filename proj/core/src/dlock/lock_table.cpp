#include "qnet/dlock/lock_table.hpp"

#include <algorithm>

#include "qnet/common/error.hpp"

namespace qnet::dlock {

std::string to_string(const LockId& id) {
    return id.node + (id.kind == LockKind::Register ? "/reg/" : "/qubit/") + std::to_string(id.id);
}

bool LockTable::try_locked(TxnId txn, std::vector<LockId>& sorted) {
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (const auto& id : sorted) {
        auto it = held_.find(id);
        if (it != held_.end() && it->second == txn) {
            fail(ErrorCode::Internal, "transaction " + std::to_string(txn) + " already holds " + to_string(id));
        }
    }
    for (const auto& id : sorted) {
        if (held_.contains(id)) {
            ++metrics_.conflicts;
            return false;
        }
    }
    for (const auto& id : sorted) {
        auto [it, inserted] = held_.emplace(id, txn);
        // Mutual exclusion is checked unconditionally.
        if (!inserted) fail(ErrorCode::Internal, "lock " + to_string(id) + " double-granted");
        if (trace_) trace_(txn, id);
    }
    ++metrics_.acquisitions;
    return true;
}

bool LockTable::try_acquire_all(TxnId txn, std::span<const LockId> locks) {
    std::vector<LockId> sorted(locks.begin(), locks.end());
    std::lock_guard lk(mu_);
    return try_locked(txn, sorted);
}

void LockTable::acquire_all(TxnId txn, std::span<const LockId> locks, const BackoffPolicy& policy,
                            std::mt19937_64& rng) {
    std::vector<LockId> sorted(locks.begin(), locks.end());
    std::uniform_int_distribution<long> pick(policy.min_backoff.count(), std::max(policy.min_backoff, policy.max_backoff).count());
    std::unique_lock lk(mu_);
    int expired = 0;
    while (true) {
        if (try_locked(txn, sorted)) return;
        if (expired >= policy.attempts) {
            ++metrics_.timeouts;
            fail(ErrorCode::Timeout, "lock budget exhausted for transaction " + std::to_string(txn) + " on " +
                                         to_string(sorted.front()));
        }
        ++metrics_.backoffs;
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(pick(rng));
        const auto epoch = release_epoch_;
        if (!released_.wait_until(lk, deadline, [&] { return release_epoch_ != epoch; })) ++expired;
    }
}

std::size_t LockTable::release_if_held(TxnId txn) {
    std::size_t freed = 0;
    {
        std::lock_guard lk(mu_);
        for (auto it = held_.begin(); it != held_.end();) {
            if (it->second == txn) {
                it = held_.erase(it);
                ++freed;
            } else {
                ++it;
            }
        }
        if (freed > 0) ++release_epoch_;
    }
    if (freed > 0) released_.notify_all();
    return freed;
}

void LockTable::release_all(TxnId txn) {
    if (release_if_held(txn) == 0) {
        fail(ErrorCode::Internal, "transaction " + std::to_string(txn) + " releases locks it does not hold");
    }
}

bool LockTable::holds(TxnId txn, const LockId& id) const {
    std::lock_guard lk(mu_);
    auto it = held_.find(id);
    return it != held_.end() && it->second == txn;
}

std::size_t LockTable::held_count(TxnId txn) const {
    std::lock_guard lk(mu_);
    return static_cast<std::size_t>(std::count_if(held_.begin(), held_.end(), [&](const auto& kv) { return kv.second == txn; }));
}

std::size_t LockTable::size() const {
    std::lock_guard lk(mu_);
    return held_.size();
}

LockMetrics LockTable::metrics() const {
    std::lock_guard lk(mu_);
    return metrics_;
}

void LockTable::note_backoff() {
    std::lock_guard lk(mu_);
    ++metrics_.backoffs;
}

void LockTable::set_trace(TraceHook hook) {
    std::lock_guard lk(mu_);
    trace_ = std::move(hook);
}

}  // namespace qnet::dlock
