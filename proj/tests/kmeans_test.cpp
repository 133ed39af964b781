#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rpc/evaluation.hpp"
#include "rpc/kmeans.hpp"

namespace rpc {
namespace {

TEST(Kmeans, SeparableGroups) {
    Matrix x(4, 2);
    x << 0, 0, 0.1, 0, 10, 10, 10.1, 10;
    const auto res = kmeans(x, 2, 1);
    const auto& a = res.clustering.assignments;
    EXPECT_EQ(a[0], a[1]);
    EXPECT_EQ(a[2], a[3]);
    EXPECT_NE(a[0], a[2]);
}

TEST(Kmeans, SingleClusterWcssIsTotalScatter) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Matrix x(30, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const auto res = kmeans(x, 1, 0);
    const double scatter = (x.rowwise() - x.colwise().mean()).squaredNorm();
    EXPECT_NEAR(res.wcss, scatter, 1e-10);
    for (int a : res.clustering.assignments) EXPECT_EQ(a, 0);
}

TEST(Kmeans, MatchesExhaustivePartitionOnTinyBlobs) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.3);
    Matrix x(12, 2);
    const double cx[3] = {0, 4, 0};
    const double cy[3] = {0, 0, 4};
    for (int i = 0; i < 12; ++i) {
        x(i, 0) = cx[i % 3] + g(rng);
        x(i, 1) = cy[i % 3] + g(rng);
    }
    std::vector<int> best;
    const double min_wcss = oracle::exhaustive_min_wcss(x, 3, &best);
    const auto res = kmeans(x, 3, 11);
    EXPECT_NEAR(res.wcss, min_wcss, 1e-9);
    EXPECT_EQ(accuracy(res.clustering.assignments, best), 1.0);
}

TEST(Kmeans, FewerDistinctPointsThanClusters) {
    Matrix x(5, 1);
    x << 1, 1, 1, 2, 2;
    const auto res = kmeans(x, 3, 4);
    ASSERT_EQ(res.clustering.size(), 5u);
    for (int a : res.clustering.assignments) {
        EXPECT_GE(a, 0);
        EXPECT_LT(a, 3);
    }
    EXPECT_NEAR(res.wcss, 0.0, 1e-12);
}

TEST(Kmeans, DeterministicGivenSeed) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u;
    Matrix x(40, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    const auto a = kmeans(x, 4, 77, 3);
    const auto b = kmeans(x, 4, 77, 3);
    EXPECT_EQ(a.clustering, b.clustering);
    EXPECT_EQ(a.wcss, b.wcss);
}

TEST(Kmeans, Errors) {
    EXPECT_THROW(kmeans(Matrix::Zero(2, 2), 3, 0), Error);
    EXPECT_THROW(kmeans(Matrix::Zero(4, 2), 0, 0), Error);
    EXPECT_THROW(kmeans(Matrix::Zero(4, 2), 2, 0, 0), Error);
}

}  // namespace
}  // namespace rpc
