#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rpc/common.hpp"
#include "rpc/kmeans.hpp"
#include "rpc/uncertain_data.hpp"

/**
 * @file spectral.hpp
 *
 * @brief Spectral clustering of several possible worlds with a shared consensus basis.
 *
 * Every world j gets a Gaussian-kernel affinity W_j and normalized affinity
 * L_j = D_j^(-1/2) W_j D_j^(-1/2). The joint objective
 *
 *     sum_j [ tr(U_j' L_j U_j) + tr(U_j U_j' U U') ]
 *
 * is maximized over orthonormal U_j and a consensus U by alternating exact
 * block updates: U is the top-k eigenbasis of sum_j U_j U_j', then each U_j is
 * the top-k eigenbasis of L_j + U U'. k-means on the row-normalized consensus
 * gives the final clusters.
 */
namespace rpc {

struct SimilarityMatrix {
    Matrix values;
    double sigma = 0.0;
};

struct LaplacianMatrix {
    Matrix values;
};

struct EigenBasis {
    /// n x k, orthonormal columns.
    Matrix columns;
    /// Descending, one per column.
    Vector eigenvalues;

    Eigen::Index n() const { return columns.rows(); }
    Eigen::Index k() const { return columns.cols(); }
    Matrix projector() const { return columns * columns.transpose(); }
};

/// Largest absolute entry of U'U - I.
inline double orthonormality_error(const Matrix& u) {
    return (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

/// Median of the nonzero pairwise Euclidean distances.
inline double median_pairwise_distance(const Matrix& points) {
    std::vector<double> dists;
    const auto n = points.rows();
    dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index l = i + 1; l < n; ++l) {
            const double dd = (points.row(i) - points.row(l)).norm();
            if (dd > 0.0) dists.push_back(dd);
        }
    }
    if (dists.empty()) throw Error("similarity_matrix: all points coincide, automatic sigma is undefined");
    const auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    if (dists.size() % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(dists.begin(), mid);
    return 0.5 * (lower + upper);
}

/// W(i,l) = exp(-|x_i - x_l|^2 / (2 sigma^2)), zero diagonal. `sigma` empty selects the median distance.
inline SimilarityMatrix similarity_matrix(const PossibleWorld& world, std::optional<double> sigma = std::nullopt) {
    const auto n = world.points.rows();
    if (n < 2) throw Error("similarity_matrix: need at least 2 points");
    const double s = sigma ? *sigma : median_pairwise_distance(world.points);
    if (!(s > 0.0) || !std::isfinite(s)) throw Error("similarity_matrix: sigma must be positive");

    SimilarityMatrix w{Matrix::Zero(n, n), s};
    const double scale = -1.0 / (2.0 * s * s);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index l = i + 1; l < n; ++l) {
            w.values(i, l) = w.values(l, i) = std::exp(scale * (world.points.row(i) - world.points.row(l)).squaredNorm());
        }
    }
    return w;
}

inline LaplacianMatrix normalized_laplacian(const SimilarityMatrix& w) {
    const Vector degree = w.values.rowwise().sum();
    for (Eigen::Index i = 0; i < degree.size(); ++i) {
        if (!(degree[i] > 0.0)) {
            throw Error("normalized_laplacian: row " + std::to_string(i) + " is an isolated vertex (zero degree)");
        }
    }
    const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
    LaplacianMatrix l{inv_sqrt.asDiagonal() * w.values * inv_sqrt.asDiagonal()};
    // Restore exact symmetry lost to rounding.
    l.values = 0.5 * (l.values + l.values.transpose()).eval();
    return l;
}

/**
 * @brief Eigenvectors of the k algebraically largest eigenvalues of a symmetric matrix.
 *
 * Columns come in descending eigenvalue order; each is signed so that its
 * largest-magnitude entry is positive.
 */
inline EigenBasis top_k_eigenvectors(const Matrix& s, Eigen::Index k) {
    if (s.rows() != s.cols()) throw Error("top_k_eigenvectors: matrix is not square");
    if (k < 1 || k > s.rows()) throw Error("top_k_eigenvectors: k out of range");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw Error("top_k_eigenvectors: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    if (solver.info() != Eigen::Success) throw Error("top_k_eigenvectors: eigensolver failed");

    const auto n = s.rows();
    EigenBasis basis{Matrix(n, k), Vector(k)};
    for (Eigen::Index c = 0; c < k; ++c) {
        // Eigen returns ascending eigenvalues.
        const Eigen::Index src = n - 1 - c;
        Vector v = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        basis.columns.col(c) = v;
        basis.eigenvalues[c] = solver.eigenvalues()[src];
    }
    return basis;
}

/// Top-k eigenbasis of sum_j U_j U_j'.
inline EigenBasis update_consensus(std::span<const EigenBasis> bases) {
    if (bases.empty()) throw Error("update_consensus: no bases");
    const auto n = bases.front().n();
    const auto k = bases.front().k();
    Matrix acc = Matrix::Zero(n, n);
    for (const auto& b : bases) {
        if (b.n() != n || b.k() != k) throw Error("update_consensus: bases differ in shape");
        acc.noalias() += b.columns * b.columns.transpose();
    }
    acc = 0.5 * (acc + acc.transpose()).eval();
    return top_k_eigenvectors(acc, k);
}

/// Top-k eigenbasis of L + U U'.
inline EigenBasis update_world_basis(const LaplacianMatrix& l, const EigenBasis& consensus) {
    if (l.values.rows() != consensus.n()) throw Error("update_world_basis: shape mismatch");
    Matrix target = l.values;
    target.noalias() += consensus.columns * consensus.columns.transpose();
    target = 0.5 * (target + target.transpose()).eval();
    return top_k_eigenvectors(target, consensus.k());
}

/// sum_j [ tr(U_j' L_j U_j) + |U_j' U|_F^2 ]; the second term equals tr(U_j U_j' U U').
inline double objective_value(std::span<const LaplacianMatrix> laplacians, std::span<const EigenBasis> bases,
                              const EigenBasis& consensus) {
    if (laplacians.size() != bases.size()) throw Error("objective_value: laplacian and basis counts differ");
    double total = 0.0;
    for (std::size_t j = 0; j < bases.size(); ++j) {
        const Matrix& u = bases[j].columns;
        if (laplacians[j].values.rows() != u.rows() || u.rows() != consensus.n() || u.cols() != consensus.k()) {
            throw Error("objective_value: shape mismatch");
        }
        total += (laplacians[j].values * u).cwiseProduct(u).sum();
        total += (u.transpose() * consensus.columns).squaredNorm();
    }
    return total;
}

struct ObjectiveTrace {
    /// Objective after each full sweep.
    std::vector<double> values;
    bool converged = false;
    int sweeps = 0;
    /// Largest |U'U - I| entry seen over every basis produced.
    double max_orthonormality_error = 0.0;

    bool operator==(const ObjectiveTrace&) const = default;
};

struct SpectralConfig {
    /// Empty selects the per-world median pairwise distance.
    std::optional<double> sigma;
    double rel_tol = 1e-6;
    int max_sweeps = 50;
    bool row_normalize = true;
    int kmeans_restarts = 10;
    std::uint64_t seed = 0;
};

struct ConsistentResult {
    Clustering clustering;
    ObjectiveTrace trace;
    EigenBasis consensus;
    std::vector<EigenBasis> bases;
    double kmeans_wcss = 0.0;
};

/// Unit-normalize every row; zero rows stay zero.
inline Matrix normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm > 0.0) out.row(i) /= norm;
    }
    return out;
}

inline KmeansResult embed_and_cluster(const Matrix& embedding, int k, const SpectralConfig& cfg) {
    return kmeans(cfg.row_normalize ? normalize_rows(embedding) : embedding, k, cfg.seed, cfg.kmeans_restarts);
}

/// Single-world normalized spectral clustering: affinity, top-k eigenvectors, row-normalize, k-means.
inline Clustering spectral_cluster(const PossibleWorld& world, int k, const SpectralConfig& cfg = {}) {
    if (k < 1 || static_cast<std::size_t>(k) > world.n()) throw Error("spectral_cluster: k out of range");
    const auto l = normalized_laplacian(similarity_matrix(world, cfg.sigma));
    const auto basis = top_k_eigenvectors(l.values, k);
    return embed_and_cluster(basis.columns, k, cfg).clustering;
}

inline ConsistentResult consistent_cluster(std::span<const PossibleWorld> worlds, int k, const SpectralConfig& cfg = {}) {
    if (worlds.empty()) throw Error("consistent_cluster: no worlds");
    const auto n = worlds.front().n();
    for (const auto& w : worlds) {
        if (w.n() != n || w.d() != worlds.front().d()) throw Error("consistent_cluster: worlds differ in shape");
    }
    if (k < 1 || static_cast<std::size_t>(k) > n) throw Error("consistent_cluster: k out of range");
    if (cfg.max_sweeps < 1) throw Error("consistent_cluster: max_sweeps must be positive");
    if (!(cfg.rel_tol > 0.0)) throw Error("consistent_cluster: rel_tol must be positive");

    ConsistentResult res;
    std::vector<LaplacianMatrix> laplacians;
    laplacians.reserve(worlds.size());
    for (const auto& w : worlds) laplacians.push_back(normalized_laplacian(similarity_matrix(w, cfg.sigma)));

    auto track = [&](const EigenBasis& b) {
        res.trace.max_orthonormality_error = std::max(res.trace.max_orthonormality_error, orthonormality_error(b.columns));
    };

    res.bases.reserve(worlds.size());
    for (const auto& l : laplacians) {
        res.bases.push_back(top_k_eigenvectors(l.values, k));
        track(res.bases.back());
    }

    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        res.consensus = update_consensus(res.bases);
        track(res.consensus);
        for (std::size_t j = 0; j < laplacians.size(); ++j) {
            res.bases[j] = update_world_basis(laplacians[j], res.consensus);
            track(res.bases[j]);
        }
        const double value = objective_value(laplacians, res.bases, res.consensus);
        res.trace.values.push_back(value);
        res.trace.sweeps = sweep;
        if (sweep > 1) {
            const double prev = res.trace.values[res.trace.values.size() - 2];
            if (std::abs(value - prev) < cfg.rel_tol * std::max(1.0, std::abs(prev))) {
                res.trace.converged = true;
                break;
            }
        }
    }

    auto km = embed_and_cluster(res.consensus.columns, k, cfg);
    res.clustering = std::move(km.clustering);
    res.kmeans_wcss = km.wcss;
    return res;
}

}  // namespace rpc
