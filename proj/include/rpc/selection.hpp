#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "rpc/common.hpp"
#include "rpc/divergence.hpp"

/**
 * @file selection.hpp
 *
 * @brief Greedy selection of representative possible worlds.
 *
 * The representative loss of a set of representatives over a pool is the sum,
 * over pool members, of the smallest divergence to any representative. Each
 * greedy step moves the candidate u out of the pool that minimizes the loss of
 * (representatives + u) over (pool - u). Starting from an empty representative
 * set, the first pick is therefore the world with the smallest total divergence
 * to all others.
 */
namespace rpc {

/// Partition of world indices into representatives and the remaining pool.
class SelectionState {
public:
    explicit SelectionState(std::size_t m) {
        remaining_.resize(m);
        for (std::size_t i = 0; i < m; ++i) remaining_[i] = i;
    }

    const std::vector<std::size_t>& representatives() const { return representatives_; }
    /// Ascending.
    const std::vector<std::size_t>& remaining() const { return remaining_; }

    void promote(std::size_t world) {
        const auto it = std::lower_bound(remaining_.begin(), remaining_.end(), world);
        if (it == remaining_.end() || *it != world) throw Error("SelectionState: world not in pool");
        remaining_.erase(it);
        representatives_.push_back(world);
    }

private:
    std::vector<std::size_t> representatives_;
    std::vector<std::size_t> remaining_;
};

/// Sum over `pool` of the minimum divergence to any of `reps`; pool members are summed in the given order.
inline double representative_loss(const Matrix& divergences, std::span<const std::size_t> reps,
                                  std::span<const std::size_t> pool) {
    if (reps.empty()) throw Error("representative_loss: no representatives");
    const auto m = static_cast<std::size_t>(divergences.rows());
    for (auto r : reps) {
        if (r >= m) throw Error("representative_loss: representative index out of range");
    }
    double loss = 0.0;
    for (auto k : pool) {
        if (k >= m) throw Error("representative_loss: pool index out of range");
        double best = std::numeric_limits<double>::infinity();
        for (auto r : reps) best = std::min(best, divergences(r, k));
        loss += best;
    }
    return loss;
}

struct SelectionStep {
    std::size_t step = 0;
    std::size_t chosen = 0;
    /// Representative loss after the move.
    double loss = 0.0;

    bool operator==(const SelectionStep&) const = default;
};

struct SelectionResult {
    /// In selection order.
    std::vector<std::size_t> representatives;
    std::vector<SelectionStep> trace;
};

/**
 * @brief Pick R representatives greedily. Ties go to the lowest index.
 *
 * Keeps, per pool member, its current minimum divergence to the chosen set, so
 * each step costs O(M^2) instead of re-evaluating the loss from scratch.
 */
inline SelectionResult select_representatives(const Matrix& divergences, std::size_t r) {
    const auto m = static_cast<std::size_t>(divergences.rows());
    if (divergences.cols() != divergences.rows()) throw Error("select_representatives: matrix is not square");
    if (r == 0) throw Error("select_representatives: R must be at least 1");
    if (r > m) {
        throw Error("select_representatives: R = " + std::to_string(r) + " exceeds M = " + std::to_string(m));
    }

    SelectionState state(m);
    SelectionResult result;
    std::vector<double> nearest(m, std::numeric_limits<double>::infinity());

    for (std::size_t step = 0; step < r; ++step) {
        const auto& pool = state.remaining();
        double best_loss = std::numeric_limits<double>::infinity();
        std::size_t best = pool.front();
        for (auto candidate : pool) {
            double loss = 0.0;
            for (auto k : pool) {
                if (k != candidate) loss += std::min(nearest[k], divergences(candidate, k));
            }
            if (loss < best_loss) {
                best_loss = loss;
                best = candidate;
            }
        }
        state.promote(best);
        for (auto k : state.remaining()) nearest[k] = std::min(nearest[k], divergences(best, k));
        result.trace.push_back({step, best, best_loss});
    }
    result.representatives = state.representatives();
    return result;
}

inline SelectionResult select_representatives(const DivergenceMatrix& divergences, std::size_t r) {
    return select_representatives(divergences.values, r);
}

}  // namespace rpc
