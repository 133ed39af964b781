#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "rpc/common.hpp"
#include "rpc/spectral.hpp"
#include "rpc/uncertain_data.hpp"

namespace rpc {

struct ScoreReport {
    double acc = 0.0;
    double nmi = 0.0;
    /// Set when either partition has zero entropy and NMI fell back to 1 or 0.
    bool nmi_degenerate = false;
    /// Rows are true classes, columns predicted clusters, both in dense order of first appearance.
    std::vector<std::vector<long>> contingency;

    bool operator==(const ScoreReport&) const = default;
};

namespace detail {

inline std::vector<int> densify(std::span<const int> labels, int& count) {
    std::map<int, int> ids;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto [it, inserted] = ids.emplace(l, static_cast<int>(ids.size()));
        out.push_back(it->second);
    }
    count = static_cast<int>(ids.size());
    return out;
}

inline void check_pair(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw Error("evaluation: predicted has " + std::to_string(predicted.size()) + " labels, truth has " +
                    std::to_string(truth.size()));
    }
    if (predicted.empty()) throw Error("evaluation: empty partitions");
}

}  // namespace detail

inline std::vector<std::vector<long>> contingency_table(std::span<const int> predicted, std::span<const int> truth) {
    detail::check_pair(predicted, truth);
    int kp = 0;
    int kt = 0;
    const auto p = detail::densify(predicted, kp);
    const auto t = detail::densify(truth, kt);
    std::vector<std::vector<long>> table(kt, std::vector<long>(kp, 0));
    for (std::size_t i = 0; i < p.size(); ++i) ++table[t[i]][p[i]];
    return table;
}

/**
 * @brief Maximum-weight assignment of rows to columns (Hungarian method).
 *
 * Works on any rectangular table by padding to a square with zeros.
 * Returns the total weight of the optimal one-to-one matching.
 */
inline long max_weight_matching(const std::vector<std::vector<long>>& weights) {
    const std::size_t rows = weights.size();
    const std::size_t cols = rows == 0 ? 0 : weights.front().size();
    const std::size_t n = std::max(rows, cols);
    if (n == 0) return 0;
    long top = 0;
    for (const auto& r : weights) {
        for (long w : r) top = std::max(top, w);
    }
    // Minimize cost = top - weight on a 1-indexed square matrix.
    auto cost = [&](std::size_t i, std::size_t j) -> long {
        const long w = (i <= rows && j <= cols) ? weights[i - 1][j - 1] : 0;
        return top - w;
    };
    constexpr long inf = std::numeric_limits<long>::max() / 4;
    std::vector<long> u(n + 1, 0);
    std::vector<long> v(n + 1, 0);
    std::vector<std::size_t> match(n + 1, 0);
    std::vector<std::size_t> way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<long> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = match[j0];
            long delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const long cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    long total = 0;
    for (std::size_t j = 1; j <= n; ++j) {
        const std::size_t i = match[j];
        if (i >= 1 && i <= rows && j <= cols) total += weights[i - 1][j - 1];
    }
    return total;
}

/// Fraction of objects that agree under the best one-to-one cluster-to-class matching.
inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    const auto table = contingency_table(predicted, truth);
    return static_cast<double>(max_weight_matching(table)) / static_cast<double>(predicted.size());
}

struct NmiResult {
    double value = 0.0;
    bool degenerate = false;
};

/// I(pred; truth) / sqrt(H(pred) H(truth)), natural log.
inline NmiResult nmi_detail(std::span<const int> predicted, std::span<const int> truth) {
    const auto table = contingency_table(predicted, truth);
    const double n = static_cast<double>(predicted.size());
    const std::size_t kt = table.size();
    const std::size_t kp = table.front().size();
    std::vector<double> row(kt, 0.0);
    std::vector<double> col(kp, 0.0);
    for (std::size_t a = 0; a < kt; ++a) {
        for (std::size_t b = 0; b < kp; ++b) {
            row[a] += static_cast<double>(table[a][b]);
            col[b] += static_cast<double>(table[a][b]);
        }
    }
    auto entropy = [n](const std::vector<double>& counts) {
        double h = 0.0;
        for (double c : counts) {
            if (c > 0.0) h -= (c / n) * std::log(c / n);
        }
        return h;
    };
    const double ht = entropy(row);
    const double hp = entropy(col);
    if (kt == 1 || kp == 1) {
        // Zero entropy on at least one side: identical partitions score 1.
        return {(kt == 1 && kp == 1) ? 1.0 : 0.0, true};
    }
    double mi = 0.0;
    for (std::size_t a = 0; a < kt; ++a) {
        for (std::size_t b = 0; b < kp; ++b) {
            const double c = static_cast<double>(table[a][b]);
            if (c > 0.0) mi += (c / n) * std::log(c * n / (row[a] * col[b]));
        }
    }
    return {std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0), false};
}

inline double nmi(std::span<const int> predicted, std::span<const int> truth) {
    return nmi_detail(predicted, truth).value;
}

inline ScoreReport score(std::span<const int> predicted, std::span<const int> truth) {
    ScoreReport r;
    r.contingency = contingency_table(predicted, truth);
    r.acc = static_cast<double>(max_weight_matching(r.contingency)) / static_cast<double>(predicted.size());
    const auto m = nmi_detail(predicted, truth);
    r.nmi = m.value;
    r.nmi_degenerate = m.degenerate;
    return r;
}

inline ScoreReport score(const Clustering& predicted, std::span<const int> truth) {
    return score(std::span<const int>(predicted.assignments), truth);
}

/// Plain spectral clustering of the first world only; the ablation without consistency learning.
inline Clustering baseline_independent_spectral(std::span<const PossibleWorld> worlds, int k, std::uint64_t seed,
                                                SpectralConfig cfg = {}) {
    if (worlds.empty()) throw Error("baseline_independent_spectral: no worlds");
    cfg.seed = seed;
    return spectral_cluster(worlds.front(), k, cfg);
}

}  // namespace rpc
