#include "aimc/common.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <random>

using namespace aimc;

TEST(StreamSeed, DistinctAcrossIndexAndSalt)
{
    EXPECT_NE(stream_seed(1, 0), stream_seed(1, 1));
    EXPECT_NE(stream_seed(1, 0, 1), stream_seed(1, 0, 2));
    EXPECT_NE(stream_seed(1, 0), stream_seed(2, 0));
    static_assert(stream_seed(3, 4, 5) == stream_seed(3, 4, 5));
}

TEST(CompensatedSum, RecoversCancellation)
{
    const std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
    EXPECT_EQ(compensated_sum(xs), 2.0);
}

TEST(CompensatedSum, OrderIndependentOnShuffledData)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> d(0.0, 1e6);
    std::vector<double> xs(5000);
    for (auto& x : xs) {
        x = d(rng);
    }
    const double a = compensated_sum(xs);
    std::shuffle(xs.begin(), xs.end(), rng);
    EXPECT_EQ(a, compensated_sum(xs));
}

TEST(Percentile, Interpolates)
{
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 50.0), 2.5);
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 100.0), 4.0);
    EXPECT_DOUBLE_EQ(percentile({4, 1, 3, 2}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(median({5, 1, 3}), 3.0);
    EXPECT_THROW(percentile({}, 50.0), DomainError);
    EXPECT_THROW(percentile({1.0}, 101.0), DomainError);
}

TEST(Spearman, PerfectAndReversed)
{
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{10, 20, 30, 40, 1000};
    const std::vector<double> c{5, 4, 3, 2, 1};
    EXPECT_DOUBLE_EQ(spearman(a, b), 1.0);
    EXPECT_DOUBLE_EQ(spearman(a, c), -1.0);
}

TEST(Spearman, TiesUseAverageRanks)
{
    // ranks: a = 1, 2.5, 2.5, 4; b = 1, 2, 3, 4 -> Pearson of ranks
    const std::vector<double> a{1, 2, 2, 3};
    const std::vector<double> b{1, 2, 3, 4};
    const double ra[] = {1, 2.5, 2.5, 4};
    const double rb[] = {1, 2, 3, 4};
    double ma = 2.5, mb = 2.5, sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < 4; ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    EXPECT_NEAR(spearman(a, b), sab / std::sqrt(saa * sbb), 1e-15);
    EXPECT_THROW(spearman(std::vector<double>{1.0}, std::vector<double>{1.0}), DomainError);
}

TEST(ParallelFor, CoversRangeOnceForAnyWorkerCount)
{
    for (unsigned w : {1u, 2u, 7u}) {
        set_worker_count(w);
        std::vector<std::atomic<int>> hits(1001);
        parallel_for(hits.size(), 64, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                hits[i]++;
            }
        });
        for (auto& h : hits) {
            ASSERT_EQ(h.load(), 1);
        }
    }
    set_worker_count(0);
}

TEST(ParallelFor, PropagatesExceptions)
{
    set_worker_count(3);
    EXPECT_THROW(parallel_for(100, 10,
                              [](std::size_t b, std::size_t) {
                                  if (b == 50) {
                                      throw DomainError("boom");
                                  }
                              }),
                 DomainError);
    set_worker_count(0);
}
