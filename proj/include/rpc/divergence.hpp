#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <vector>

#include "rpc/common.hpp"
#include "rpc/uncertain_data.hpp"

/**
 * @file divergence.hpp
 *
 * @brief Jensen-Shannon divergence between possible worlds.
 *
 * Each world is turned into a product-Gaussian kernel density estimate with
 * per-dimension Silverman bandwidths h_j = 1.06 * sd_j * n^(-1/5). KL terms are
 * estimated as sample averages of log density ratios, and everything is kept
 * in the log domain so high-dimensional worlds do not underflow.
 */
namespace rpc {

inline constexpr double kLn2 = std::numbers::ln2;

/// log(exp(a) + exp(b)) - log 2, exact when a == b.
inline double log_mean_exp(double a, double b) {
    const double hi = std::max(a, b);
    if (hi == -std::numeric_limits<double>::infinity()) return hi;
    return hi + std::log(0.5 * (std::exp(a - hi) + std::exp(b - hi)));
}

class KdeModel {
public:
    KdeModel(Matrix points, Vector bandwidths)
        : points_(std::move(points)), bandwidths_(std::move(bandwidths)) {
        if (points_.rows() == 0) throw Error("KdeModel: no points");
        if (bandwidths_.size() != points_.cols()) throw Error("KdeModel: bandwidth count differs from dimensionality");
        if (!(bandwidths_.array() > 0.0).all()) throw Error("KdeModel: bandwidths must be positive");
        const Vector inv = bandwidths_.cwiseInverse();
        scaled_ = points_ * inv.asDiagonal();
        const double n = static_cast<double>(points_.rows());
        const double d = static_cast<double>(points_.cols());
        log_norm_ = -std::log(n) - bandwidths_.array().log().sum() - 0.5 * d * std::log(2.0 * std::numbers::pi);
    }

    const Matrix& points() const { return points_; }
    const Vector& bandwidths() const { return bandwidths_; }
    std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }

    double log_density(const Eigen::Ref<const Vector>& x) const {
        if (x.size() != points_.cols()) throw Error("KdeModel: query dimensionality mismatch");
        const Eigen::RowVectorXd q = x.cwiseQuotient(bandwidths_).transpose();
        const Vector exponents = -0.5 * (scaled_.rowwise() - q).rowwise().squaredNorm();
        const double top = exponents.maxCoeff();
        return log_norm_ + top + std::log((exponents.array() - top).exp().sum());
    }

    double density(const Eigen::Ref<const Vector>& x) const { return std::exp(log_density(x)); }

    /// Log density at every row of `sample`.
    Vector log_density_rows(const Matrix& sample) const {
        Vector out(sample.rows());
        for (Eigen::Index i = 0; i < sample.rows(); ++i) out[i] = log_density(sample.row(i).transpose());
        return out;
    }

private:
    Matrix points_;
    Vector bandwidths_;
    Matrix scaled_;
    double log_norm_ = 0.0;
};

/// Lower bound applied to every bandwidth so constant attributes stay finite.
inline double bandwidth_floor(double column_mean) { return 1e-9 * (1.0 + std::abs(column_mean)); }

inline KdeModel fit_kde(const PossibleWorld& world) {
    const auto n = world.points.rows();
    if (n < 2) throw Error("fit_kde: need at least 2 points, got " + std::to_string(n));
    const Eigen::RowVectorXd mean = world.points.colwise().mean();
    const Eigen::RowVectorXd sd =
        ((world.points.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n - 1)).sqrt();
    const double scale = 1.06 * std::pow(static_cast<double>(n), -0.2);
    Vector h(world.points.cols());
    for (Eigen::Index j = 0; j < h.size(); ++j) h[j] = std::max(scale * sd[j], bandwidth_floor(mean[j]));
    return KdeModel(world.points, std::move(h));
}

inline double kde_density(const KdeModel& model, const Eigen::Ref<const Vector>& x) { return model.density(x); }

/// Sample-average estimate of KL(p || q) over the rows of `sample`, natural log.
inline double kl_estimate(const KdeModel& p, const KdeModel& q, const Matrix& sample) {
    if (sample.rows() == 0) throw Error("kl_estimate: empty sample");
    if (&p == &q) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < sample.rows(); ++i) {
        const Vector x = sample.row(i).transpose();
        total += p.log_density(x) - q.log_density(x);
    }
    return total / static_cast<double>(sample.rows());
}

struct JsdEstimate {
    /// Clamped to [0, ln 2].
    double value = 0.0;
    double raw = 0.0;

    /// Amount by which the raw estimate leaves [0, ln 2].
    double bound_violation() const { return std::max({0.0, -raw, raw - kLn2}); }
};

namespace detail {

/// KL(P_a || mixture) averaged over a's points, given log f_a and log f_b at those points.
inline double kl_to_mixture(const Vector& log_self, const Vector& log_other) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < log_self.size(); ++i) total += log_self[i] - log_mean_exp(log_self[i], log_other[i]);
    return total / static_cast<double>(log_self.size());
}

inline JsdEstimate combine_jsd(double kl_a, double kl_b) {
    JsdEstimate e;
    e.raw = 0.5 * kl_a + 0.5 * kl_b;
    e.value = std::clamp(e.raw, 0.0, kLn2);
    return e;
}

}  // namespace detail

inline JsdEstimate jsd_estimate(const KdeModel& a, const KdeModel& b) {
    if (a.dim() != b.dim()) throw Error("jsd: worlds differ in dimensionality");
    const double kl_a = detail::kl_to_mixture(a.log_density_rows(a.points()), b.log_density_rows(a.points()));
    const double kl_b = detail::kl_to_mixture(b.log_density_rows(b.points()), a.log_density_rows(b.points()));
    return detail::combine_jsd(kl_a, kl_b);
}

inline double jsd(const PossibleWorld& a, const PossibleWorld& b) {
    if (a.n() != b.n() || a.d() != b.d()) throw Error("jsd: worlds differ in shape");
    return jsd_estimate(fit_kde(a), fit_kde(b)).value;
}

struct DivergenceMatrix {
    Matrix values;
    /// Pairs whose raw estimate left [0, ln 2] by more than 0.05.
    std::size_t flagged_pairs = 0;
    double max_bound_violation = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
    double operator()(std::size_t i, std::size_t j) const { return values(i, j); }
};

inline constexpr double kBoundViolationFlag = 0.05;

/// Symmetric JSD matrix over all unordered pairs; each KDE is fitted once.
inline DivergenceMatrix pairwise_jsd(const WorldEnsemble& ensemble) {
    const std::size_t m = ensemble.size();
    if (m < 2) throw Error("pairwise_jsd: need at least 2 worlds");
    const auto& first = ensemble.worlds.front();
    for (const auto& w : ensemble.worlds) {
        if (w.n() != first.n() || w.d() != first.d()) throw Error("pairwise_jsd: worlds differ in shape");
    }

    std::vector<KdeModel> models;
    std::vector<Vector> self_log;
    models.reserve(m);
    self_log.reserve(m);
    for (const auto& w : ensemble.worlds) {
        models.push_back(fit_kde(w));
        self_log.push_back(models.back().log_density_rows(w.points));
    }

    DivergenceMatrix out{Matrix::Zero(m, m)};
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const Vector j_at_i = models[j].log_density_rows(ensemble.worlds[i].points);
            const Vector i_at_j = models[i].log_density_rows(ensemble.worlds[j].points);
            const auto e = detail::combine_jsd(detail::kl_to_mixture(self_log[i], j_at_i),
                                               detail::kl_to_mixture(self_log[j], i_at_j));
            out.values(i, j) = out.values(j, i) = e.value;
            out.max_bound_violation = std::max(out.max_bound_violation, e.bound_violation());
            if (e.bound_violation() > kBoundViolationFlag) ++out.flagged_pairs;
        }
    }
    return out;
}

inline void write_divergence_csv(std::ostream& out, const DivergenceMatrix& dm) {
    out << "world";
    for (std::size_t j = 0; j < dm.size(); ++j) out << ',' << j;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < dm.size(); ++i) {
        out << i;
        for (std::size_t j = 0; j < dm.size(); ++j) out << ',' << dm(i, j);
        out << '\n';
    }
}

}  // namespace rpc
