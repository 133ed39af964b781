// Acceptance suite: one line per criterion, nonzero exit if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rpc/rpc.hpp"

namespace {

using namespace rpc;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

PossibleWorld normal_world(std::size_t n, double mean, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(mean, 1.0);
    PossibleWorld w{Matrix(n, 1)};
    for (Eigen::Index i = 0; i < w.points.rows(); ++i) w.points(i, 0) = g(rng);
    return w;
}

Eigen::RowVectorXd population_stddev(const Matrix& pts) {
    return ((pts.rowwise() - pts.colwise().mean()).array().square().colwise().mean()).sqrt();
}

Outcome divergence_sanity() {
    const auto start = std::chrono::steady_clock::now();
    const double same = jsd(normal_world(500, 0.0, 1), normal_world(500, 0.0, 2));
    const double apart = jsd(normal_world(500, 0.0, 3), normal_world(500, 10.0, 4));
    const double analytic = oracle::gaussian_jsd_quadrature(0.0, 10.0);
    const double secs = seconds_since(start);
    std::ostringstream os;
    os << "same=" << same << " (<= 0.05), apart=" << apart << " (>= 0.6, quadrature " << analytic << "), " << secs
       << " s";
    return {same <= 0.05 && apart >= 0.6 && secs < 5.0, os.str()};
}

Outcome kl_accuracy() {
    const auto start = std::chrono::steady_clock::now();
    const auto p = normal_world(2000, 0.0, 11);
    const auto q = normal_world(2000, 1.0, 12);
    const double est = kl_estimate(fit_kde(p), fit_kde(q), p.points);
    const double truth = oracle::gaussian_kl(0.0, 1.0, 1.0, 1.0);
    const double secs = seconds_since(start);
    std::ostringstream os;
    os << "estimate=" << est << " closed form=" << truth << " (|diff| <= 0.1), " << secs << " s";
    return {std::abs(est - truth) <= 0.1 && secs < 5.0, os.str()};
}

Outcome greedy_oracle_equivalence() {
    std::mt19937_64 rng(2023);
    std::uniform_int_distribution<int> size(2, 8);
    std::uniform_real_distribution<double> real(0.0, kLn2);
    std::uniform_int_distribution<int> coarse(0, 2);
    int matches = 0;
    int ties = 0;
    for (int t = 0; t < 50; ++t) {
        const int m = size(rng);
        std::uniform_int_distribution<int> pick_r(1, std::min(4, m));
        const int r = pick_r(rng);
        // Every other matrix takes values from {0, 0.1, 0.2} so ties are common.
        const bool tied = t % 2 == 1;
        Matrix d = Matrix::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) d(i, j) = d(j, i) = tied ? 0.1 * coarse(rng) : real(rng);
        }
        ties += tied ? 1 : 0;
        if (select_representatives(d, r).representatives == oracle::greedy_selection(d, r)) ++matches;
    }
    std::ostringstream os;
    os << matches << "/50 match (" << ties << " tie-heavy cases)";
    return {matches == 50, os.str()};
}

Outcome marginal_world_filtering() {
    int offending_seeds = 0;
    int selected_shifted = 0;
    std::ostringstream picks;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto blobs = make_blobs(150, 3, 2, 10.0, 500 + seed);
        const auto ds = gaussianize(blobs.points, blobs.labels, 0.1);
        auto ens = sample_ensemble(ds, 23, 900 + seed);
        const Eigen::RowVectorXd shift = 10.0 * population_stddev(blobs.points);
        for (std::size_t w = 20; w < 23; ++w) ens.worlds[w].points.rowwise() += shift;
        const auto sel = select_representatives(pairwise_jsd(ens), 5);
        int shifted = 0;
        for (auto idx : sel.representatives) shifted += idx >= 20 ? 1 : 0;
        selected_shifted += shifted;
        offending_seeds += shifted > 0 ? 1 : 0;
        if (seed < 3) {
            picks << " seed" << seed << "=[";
            for (std::size_t i = 0; i < sel.representatives.size(); ++i) {
                picks << (i ? "," : "") << sel.representatives[i];
            }
            picks << "]";
        }
    }
    std::ostringstream os;
    os << selected_shifted << " shifted worlds selected across 10 seeds (" << offending_seeds
       << " seeds affected; shifted ids are 20-22);" << picks.str();
    return {selected_shifted == 0, os.str()};
}

Outcome monotone_and_orthonormal() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> pick_n(12, 60);
    std::uniform_int_distribution<int> pick_r(1, 5);
    std::uniform_int_distribution<int> pick_k(2, 4);
    std::normal_distribution<double> g;
    double worst_drop = 0.0;
    double worst_ortho = 0.0;
    int sweeps = 0;
    for (int t = 0; t < 20; ++t) {
        const int n = pick_n(rng);
        const int r = pick_r(rng);
        const int k = pick_k(rng);
        std::vector<PossibleWorld> worlds;
        for (int j = 0; j < r; ++j) {
            PossibleWorld w{Matrix(n, 3)};
            for (Eigen::Index i = 0; i < w.points.size(); ++i) w.points.data()[i] = g(rng);
            worlds.push_back(std::move(w));
        }
        SpectralConfig cfg;
        cfg.rel_tol = 1e-14;
        cfg.max_sweeps = 40;
        cfg.seed = static_cast<std::uint64_t>(t);
        const auto res = consistent_cluster(worlds, k, cfg);
        for (std::size_t s = 1; s < res.trace.values.size(); ++s) {
            worst_drop = std::max(worst_drop, res.trace.values[s - 1] - res.trace.values[s]);
        }
        worst_ortho = std::max(worst_ortho, res.trace.max_orthonormality_error);
        sweeps += res.trace.sweeps;
    }
    std::ostringstream os;
    os << "largest per-sweep decrease=" << worst_drop << " (<= 1e-8), max |U'U-I|=" << worst_ortho
       << " (<= 1e-8), " << sweeps << " sweeps";
    return {worst_drop <= 1e-8 && worst_ortho <= 1e-8, os.str()};
}

Outcome single_world_reduction() {
    double worst = 1.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto blobs = make_blobs(120, 3, 2, 8.0, 40 + seed);
        const auto ds = gaussianize(blobs.points, blobs.labels, 0.1);
        const auto world = sample_ensemble(ds, 1, seed).worlds;
        SpectralConfig cfg;
        cfg.seed = seed;
        const auto joint = consistent_cluster(world, 3, cfg);
        const auto plain = spectral_cluster(world.front(), 3, cfg);
        worst = std::min(worst, accuracy(joint.clustering.assignments, plain.assignments));
    }
    std::ostringstream os;
    os << "min ACC(R=1 consistent, standalone spectral) over 5 worlds = " << worst;
    return {worst == 1.0, os.str()};
}

Outcome planted_recovery() {
    const auto start = std::chrono::steady_clock::now();
    const auto blobs = make_blobs(150, 3, 2, 10.0, 2024);
    RunConfig cfg;
    cfg.k = 3;
    cfg.m = 30;
    cfg.r = 5;
    cfg.noise_factor = 0.1;
    cfg.gaussianize = true;
    cfg.seed = 2024;
    const auto report = run_pipeline(cfg, blobs_as_points(blobs));
    const double secs = seconds_since(start);
    const auto& agg = *report.aggregate;
    std::ostringstream os;
    os << "ACC=" << agg.acc_mean << " (>= 0.95), NMI=" << agg.nmi_mean << " (>= 0.85), " << cfg.repeat
       << " repeats in " << secs << " s (< 60)";
    return {agg.acc_mean >= 0.95 && agg.nmi_mean >= 0.85 && secs < 60.0, os.str()};
}

Outcome contamination_benefit() {
    int holds = 0;
    std::ostringstream os;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto blobs = make_blobs(150, 3, 2, 10.0, 700 + seed);
        const auto ds = gaussianize(blobs.points, blobs.labels, 0.1);
        const std::size_t m = 30;
        const std::size_t marginal = m / 5;
        auto ens = sample_ensemble(ds, m, 800 + seed);
        // Marginal worlds: every object displaced by noise three times the attribute spread,
        // which erases the blob structure.
        std::mt19937_64 rng(derive_seed(seed, SeedStream::Resample, 99));
        const Eigen::RowVectorXd spread = population_stddev(blobs.points);
        std::normal_distribution<double> g;
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t w = 0; w < marginal; ++w) {
            Matrix& pts = ens.worlds[order[w]].points;
            pts = blobs.points;
            for (Eigen::Index i = 0; i < pts.rows(); ++i) {
                for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) += 3.0 * spread[j] * g(rng);
            }
        }
        const auto sel = select_representatives(pairwise_jsd(ens), 5);
        std::vector<PossibleWorld> reps;
        int picked_marginal = 0;
        for (auto idx : sel.representatives) {
            reps.push_back(ens.worlds[idx]);
            picked_marginal += std::find(order.begin(), order.begin() + marginal, idx) != order.begin() + marginal;
        }
        SpectralConfig cfg;
        cfg.seed = seed;
        const double rpc_acc = accuracy(consistent_cluster(reps, 3, cfg).clustering.assignments, blobs.labels);
        const double base_acc = accuracy(baseline_independent_spectral(ens.worlds, 3, seed).assignments, blobs.labels);
        holds += rpc_acc >= base_acc ? 1 : 0;
        os << (seed ? " " : "") << "seed" << seed << ":" << rpc_acc << ">=" << base_acc << "(" << picked_marginal
           << " marginal picked)";
    }
    return {holds == 5, os.str()};
}

// Restricted growth strings: every set partition of n items into at most kmax blocks.
void set_partitions(int n, int kmax, std::vector<std::vector<int>>& out) {
    std::vector<int> a(n, 0);
    std::function<void(int, int)> rec = [&](int pos, int used) {
        if (pos == n) {
            out.push_back(a);
            return;
        }
        for (int v = 0; v <= std::min(used, kmax - 1); ++v) {
            a[pos] = v;
            rec(pos + 1, std::max(used, v + 1));
        }
    };
    rec(0, 0);
}

Outcome metric_correctness() {
    long checked = 0;
    long mismatches = 0;
    for (int n = 1; n <= 8; ++n) {
        std::vector<std::vector<int>> parts;
        set_partitions(n, 3, parts);
        for (const auto& p : parts) {
            for (const auto& t : parts) {
                ++checked;
                if (accuracy(p, t) != oracle::brute_force_accuracy(p, t)) ++mismatches;
            }
        }
    }
    const std::vector<int> truth{0, 0, 1, 1};
    const double nmi_zero = nmi(std::vector<int>{0, 1, 0, 1}, truth);
    const double nmi_one = nmi(truth, truth);
    const double acc_hand = accuracy(std::vector<int>{0, 1, 1, 1}, truth);
    std::ostringstream os;
    os << checked << " partition pairs, " << mismatches << " mismatches; NMI hand cases " << nmi_zero << ", "
       << nmi_one << "; ACC hand case " << acc_hand;
    return {mismatches == 0 && nmi_zero == 0.0 && nmi_one == 1.0 && acc_hand == 0.75, os.str()};
}

Outcome determinism() {
    const auto ds = blobs_as_points(make_blobs(90, 3, 2, 10.0, 31));
    RunConfig cfg;
    cfg.k = 3;
    cfg.m = 20;
    cfg.r = 4;
    cfg.gaussianize = true;
    cfg.repeat = 3;
    cfg.seed = 99;
    auto strip = [](const RunReport& r) {
        auto j = nlohmann::json(r);
        j.erase("timings");
        return j.dump();
    };
    const auto a = strip(run_pipeline(cfg, ds));
    const auto b = strip(run_pipeline(cfg, ds));
    std::ostringstream os;
    os << "report bytes " << a.size() << ", identical=" << (a == b ? "yes" : "no");
    return {a == b, os.str()};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "divergence sanity", divergence_sanity},
        {2, "KL estimator accuracy", kl_accuracy},
        {3, "greedy-selection oracle equivalence", greedy_oracle_equivalence},
        {4, "marginal-world filtering", marginal_world_filtering},
        {5, "objective monotonicity and orthonormality", monotone_and_orthonormal},
        {6, "R=1 reduction", single_world_reduction},
        {7, "end-to-end planted recovery", planted_recovery},
        {8, "consistency benefit under contamination", contamination_benefit},
        {9, "metric correctness", metric_correctness},
        {11, "determinism", determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.name << ": " << o.detail << std::endl;
    }
    std::cout << "[N/A]  10. published benchmark table: not an acceptance target (generation parameters unpublished)"
              << std::endl;
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
