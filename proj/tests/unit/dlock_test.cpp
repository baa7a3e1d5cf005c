#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "qnet/common/error.hpp"
#include "qnet/dlock/lock_table.hpp"

using namespace qnet::dlock;

namespace {
LockId reg(std::string node, std::uint64_t id) { return {std::move(node), LockKind::Register, id}; }
}  // namespace

TEST(LockId, Ordering) {
    EXPECT_LT(reg("a", 9), reg("b", 0));
    EXPECT_LT(reg("a", 1), reg("a", 2));
    EXPECT_LT(reg("a", 5), (LockId{"a", LockKind::Qubit, 0}));
}

TEST(LockTable, AllOrNothing) {
    LockTable t;
    const std::vector<LockId> first{reg("n", 1), reg("n", 2)};
    const std::vector<LockId> second{reg("n", 3), reg("n", 2)};
    EXPECT_TRUE(t.try_acquire_all(1, first));
    EXPECT_FALSE(t.try_acquire_all(2, second));
    EXPECT_EQ(t.held_count(2), 0u);
    EXPECT_FALSE(t.holds(2, reg("n", 3)));
    EXPECT_EQ(t.size(), 2u);
    t.release_all(1);
    EXPECT_TRUE(t.empty());
    EXPECT_TRUE(t.try_acquire_all(2, second));
    EXPECT_EQ(t.metrics().conflicts, 1u);
}

TEST(LockTable, ReleaseWithoutHoldIsInternal) {
    LockTable t;
    EXPECT_THROW(t.release_all(9), qnet::Error);
    EXPECT_EQ(t.release_if_held(9), 0u);
    const std::vector<LockId> l{reg("n", 1)};
    ASSERT_TRUE(t.try_acquire_all(9, l));
    EXPECT_THROW(t.try_acquire_all(9, l), qnet::Error);
}

TEST(LockTable, AcquiresInOrder) {
    LockTable t;
    std::vector<LockId> seen;
    t.set_trace([&](TxnId, const LockId& id) { seen.push_back(id); });
    const std::vector<LockId> l{reg("z", 1), reg("a", 3), reg("a", 1)};
    ASSERT_TRUE(t.try_acquire_all(1, l));
    ASSERT_EQ(seen.size(), 3u);
    EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
}

TEST(LockTable, TimesOut) {
    LockTable t;
    const std::vector<LockId> l{reg("n", 1)};
    ASSERT_TRUE(t.try_acquire_all(1, l));
    std::mt19937_64 rng(1);
    BackoffPolicy p{std::chrono::milliseconds(1), std::chrono::milliseconds(2), 3};
    try {
        t.acquire_all(2, l, p, rng);
        FAIL();
    } catch (const qnet::Error& e) {
        EXPECT_EQ(e.code(), qnet::ErrorCode::Timeout);
    }
    EXPECT_EQ(t.metrics().timeouts, 1u);
}

TEST(LockTable, WaiterWakesOnRelease) {
    LockTable t;
    const std::vector<LockId> l{reg("n", 1)};
    ASSERT_TRUE(t.try_acquire_all(1, l));
    std::thread holder([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        t.release_all(1);
    });
    std::mt19937_64 rng(1);
    EXPECT_NO_THROW(t.acquire_all(2, l, BackoffPolicy{}, rng));
    holder.join();
    EXPECT_TRUE(t.holds(2, l[0]));
}

// Opposing lock orders from many threads: mutual exclusion holds and every
// transaction eventually completes.
TEST(LockTable, Stress) {
    LockTable t;
    std::atomic<int> inside_a{0}, inside_b{0};
    std::atomic<bool> violated{false};
    std::atomic<int> done{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < 8; ++w) {
        workers.emplace_back([&, w] {
            std::mt19937_64 rng(w);
            const std::vector<LockId> l = w % 2 ? std::vector{reg("x", 1), reg("y", 1)} : std::vector{reg("y", 1), reg("x", 1)};
            for (int i = 0; i < 300; ++i) {
                const TxnId txn = (std::uint64_t(w) << 32) | i;
                t.acquire_all(txn, l, BackoffPolicy{std::chrono::milliseconds(0), std::chrono::milliseconds(1), 100000}, rng);
                if (inside_a.fetch_add(1) != 0 || inside_b.fetch_add(1) != 0) violated = true;
                inside_a.fetch_sub(1);
                inside_b.fetch_sub(1);
                t.release_all(txn);
            }
            ++done;
        });
    }
    for (auto& th : workers) th.join();
    EXPECT_FALSE(violated);
    EXPECT_EQ(done, 8);
    EXPECT_TRUE(t.empty());
    EXPECT_EQ(t.metrics().acquisitions, 8u * 300u);
}
