#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "rpc/common.hpp"
#include "rpc/uncertain_data.hpp"

namespace rpc {

/// Planted Gaussian blobs: points plus their generating labels.
struct BlobSet {
    Matrix points;
    std::vector<int> labels;
};

/**
 * @brief k isotropic blobs with unit variance whose nearest centers are `separation` apart.
 *
 * Centers sit on a circle in the first two coordinates (on a line when d = 1).
 * Objects are assigned to blobs round-robin so sizes differ by at most one.
 */
inline BlobSet make_blobs(std::size_t n, int k, std::size_t d, double separation, std::uint64_t seed) {
    if (k < 1 || n < static_cast<std::size_t>(k) || d < 1) throw Error("make_blobs: need n >= k >= 1 and d >= 1");
    Matrix centers = Matrix::Zero(k, d);
    if (d == 1 || k <= 2) {
        for (int c = 0; c < k; ++c) centers(c, 0) = separation * c;
    } else {
        const double radius = separation / (2.0 * std::sin(std::numbers::pi / k));
        for (int c = 0; c < k; ++c) {
            const double angle = 2.0 * std::numbers::pi * c / k;
            centers(c, 0) = radius * std::cos(angle);
            centers(c, 1) = radius * std::sin(angle);
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    BlobSet out{Matrix(n, d), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % static_cast<std::size_t>(k));
        out.labels[i] = c;
        for (std::size_t j = 0; j < d; ++j) out.points(i, j) = centers(c, j) + unit(rng);
    }
    return out;
}

/// Blobs wrapped as a dataset of single-instance objects with labels.
inline UncertainDataset blobs_as_points(const BlobSet& blobs) {
    UncertainDataset ds;
    ds.d = static_cast<std::size_t>(blobs.points.cols());
    for (Eigen::Index i = 0; i < blobs.points.rows(); ++i) {
        ds.objects.push_back({"p" + std::to_string(i), EmpiricalModel{{blobs.points.row(i).transpose()}, std::nullopt}});
    }
    ds.labels = blobs.labels;
    int top = 0;
    for (int l : blobs.labels) top = std::max(top, l);
    for (int l = 0; l <= top; ++l) ds.label_names.push_back("blob" + std::to_string(l));
    return ds;
}

}  // namespace rpc
