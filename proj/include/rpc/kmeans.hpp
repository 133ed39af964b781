#pragma once

#include <algorithm>
#include <limits>
#include <random>
#include <vector>

#include "rpc/common.hpp"

namespace rpc {

struct KmeansResult {
    Clustering clustering;
    /// k x dim.
    Matrix centers;
    double wcss = 0.0;
    int iterations = 0;
};

namespace detail {

inline std::vector<Eigen::Index> kmeanspp_seeds(const Matrix& rows, int k, std::mt19937_64& rng) {
    const Eigen::Index n = rows.rows();
    std::vector<Eigen::Index> seeds;
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    seeds.push_back(first(rng));
    while (static_cast<int>(seeds.size()) < k) {
        const auto last = rows.row(seeds.back());
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], (rows.row(i) - last).squaredNorm());
            total += nearest[i];
        }
        Eigen::Index pick = 0;
        if (total > 0.0) {
            std::discrete_distribution<Eigen::Index> choose(nearest.begin(), nearest.end());
            pick = choose(rng);
        } else {
            // Fewer distinct points than k: take any unused index.
            while (std::find(seeds.begin(), seeds.end(), pick) != seeds.end()) ++pick;
        }
        seeds.push_back(pick);
    }
    return seeds;
}

inline KmeansResult lloyd(const Matrix& rows, int k, std::mt19937_64& rng, int max_iterations) {
    const Eigen::Index n = rows.rows();
    KmeansResult res;
    res.centers.resize(k, rows.cols());
    const auto seeds = kmeanspp_seeds(rows, k, rng);
    for (int c = 0; c < k; ++c) res.centers.row(c) = rows.row(seeds[c]);

    std::vector<int> assign(n, -1);
    std::vector<double> dist(n, 0.0);
    for (int iter = 1; iter <= max_iterations; ++iter) {
        res.iterations = iter;
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dd = (rows.row(i) - res.centers.row(c)).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            dist[i] = best_d;
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;

        Matrix sums = Matrix::Zero(k, rows.cols());
        std::vector<Eigen::Index> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(assign[i]) += rows.row(i);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                res.centers.row(c) = sums.row(c) / static_cast<double>(counts[c]);
                continue;
            }
            // Empty cluster: move it onto the point farthest from its center.
            Eigen::Index far = 0;
            for (Eigen::Index i = 1; i < n; ++i) {
                if (dist[i] > dist[far]) far = i;
            }
            res.centers.row(c) = rows.row(far);
            dist[far] = 0.0;
            assign[far] = c;
        }
    }

    res.wcss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) res.wcss += (rows.row(i) - res.centers.row(assign[i])).squaredNorm();
    res.clustering.assignments = std::move(assign);
    return res;
}

}  // namespace detail

/**
 * @brief Lloyd's algorithm with k-means++ seeding.
 *
 * Returns the best of `restarts` runs by within-cluster sum of squares. Restart
 * r draws from its own generator seeded by derive_seed(seed, KmeansRestart, r).
 */
inline KmeansResult kmeans(const Matrix& rows, int k, std::uint64_t seed, int restarts = 10,
                           int max_iterations = 300) {
    if (k < 1) throw Error("kmeans: k must be positive");
    if (rows.rows() < k) {
        throw Error("kmeans: " + std::to_string(rows.rows()) + " rows is fewer than k = " + std::to_string(k));
    }
    if (restarts < 1) throw Error("kmeans: restarts must be positive");
    if (!rows.allFinite()) throw Error("kmeans: non-finite input");

    KmeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(derive_seed(seed, SeedStream::KmeansRestart, static_cast<std::uint64_t>(r)));
        auto run = detail::lloyd(rows, k, rng, max_iterations);
        if (run.wcss < best.wcss) best = std::move(run);
    }
    return best;
}

}  // namespace rpc
