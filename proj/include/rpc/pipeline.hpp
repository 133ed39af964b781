#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rpc/common.hpp"
#include "rpc/divergence.hpp"
#include "rpc/evaluation.hpp"
#include "rpc/selection.hpp"
#include "rpc/spectral.hpp"
#include "rpc/uncertain_data.hpp"

/**
 * @file pipeline.hpp
 *
 * @brief End-to-end representative-world consistent clustering, plus run reports.
 *
 * Stages: load, (gaussianize), sample, divergence, select, cluster, evaluate.
 *
 * Seeds: the master seed yields the ensemble seed derive_seed(master, Ensemble, 0)
 * and the clustering seed of repeat r, derive_seed(master, Clustering, r). With
 * resample_worlds, repeat r > 0 also draws a fresh ensemble from
 * derive_seed(master, Resample, r). Changing the repeat count never changes the
 * ensemble of repeat 0.
 */
namespace rpc {

/// An error tagged with the pipeline stage it came from.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& cause)
        : Error(stage + ": " + cause), stage_(std::move(stage)), cause_(cause) {}
    const std::string& stage() const { return stage_; }
    const std::string& cause() const { return cause_; }

private:
    std::string stage_;
    std::string cause_;
};

struct RunConfig {
    std::string dataset;
    /// auto, instance or gaussian.
    std::string format = "auto";
    std::string labels;
    /// Treat the dataset as deterministic points and attach Gaussian uncertainty.
    bool gaussianize = false;
    int k = 2;
    std::size_t m = 100;
    std::size_t r = 10;
    double noise_factor = 0.1;
    /// Empty means the per-world median pairwise distance.
    std::optional<double> sigma;
    double rel_tol = 1e-6;
    int max_sweeps = 50;
    int kmeans_restarts = 10;
    std::uint64_t seed = 42;
    int repeat = 10;
    bool resample_worlds = false;
    bool row_normalize = true;

    bool operator==(const RunConfig&) const = default;

    void validate() const {
        auto fail = [](const std::string& why) { throw Error("invalid config: " + why); };
        if (k < 2) fail("k must be at least 2");
        if (m < 1) fail("m must be at least 1");
        if (r < 1 || r > m) fail("r must satisfy 1 <= r <= m");
        if (!(noise_factor > 0.0)) fail("noise-factor must be positive");
        if (sigma && !(*sigma > 0.0)) fail("sigma must be positive");
        if (!(rel_tol > 0.0)) fail("rel-tol must be positive");
        if (max_sweeps < 1) fail("max-sweeps must be positive");
        if (kmeans_restarts < 1) fail("kmeans-restarts must be positive");
        if (repeat < 1) fail("repeat must be positive");
        if (format != "auto" && format != "instance" && format != "gaussian") fail("unknown format '" + format + "'");
    }
};

struct DivergenceSummary {
    std::size_t worlds = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    bool all_zero = true;
    std::size_t flagged_pairs = 0;
    double max_bound_violation = 0.0;

    bool operator==(const DivergenceSummary&) const = default;
};

struct RepeatReport {
    std::uint64_t seed = 0;
    std::vector<std::size_t> representatives;
    Clustering clustering;
    ObjectiveTrace trace;
    std::optional<ScoreReport> score;

    bool operator==(const RepeatReport&) const = default;
};

struct ScoreAggregate {
    double acc_mean = 0.0;
    double acc_std = 0.0;
    double nmi_mean = 0.0;
    double nmi_std = 0.0;

    bool operator==(const ScoreAggregate&) const = default;
};

struct RunReport {
    RunConfig config;
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<std::string> object_ids;
    DivergenceSummary divergence;
    std::vector<std::size_t> representatives;
    std::vector<SelectionStep> selection_trace;
    std::vector<RepeatReport> repeats;
    std::optional<ScoreAggregate> aggregate;
    /// Seconds per stage, plus "total".
    std::map<std::string, double> timings;

    /// Assignments of the first repeat.
    const Clustering& assignments() const { return repeats.at(0).clustering; }

    bool operator==(const RunReport&) const = default;
};

struct PipelineResult {
    RunReport report;
    /// Divergences of the first repeat's ensemble.
    DivergenceMatrix divergences;
};

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = {{"dataset", c.dataset},
         {"format", c.format},
         {"labels", c.labels},
         {"gaussianize", c.gaussianize},
         {"k", c.k},
         {"m", c.m},
         {"r", c.r},
         {"noise_factor", c.noise_factor},
         {"sigma", c.sigma ? nlohmann::json(*c.sigma) : nlohmann::json(nullptr)},
         {"rel_tol", c.rel_tol},
         {"max_sweeps", c.max_sweeps},
         {"kmeans_restarts", c.kmeans_restarts},
         {"seed", c.seed},
         {"repeat", c.repeat},
         {"resample_worlds", c.resample_worlds},
         {"row_normalize", c.row_normalize}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    j.at("dataset").get_to(c.dataset);
    j.at("format").get_to(c.format);
    j.at("labels").get_to(c.labels);
    j.at("gaussianize").get_to(c.gaussianize);
    j.at("k").get_to(c.k);
    j.at("m").get_to(c.m);
    j.at("r").get_to(c.r);
    j.at("noise_factor").get_to(c.noise_factor);
    c.sigma = j.at("sigma").is_null() ? std::nullopt : std::optional<double>(j.at("sigma").get<double>());
    j.at("rel_tol").get_to(c.rel_tol);
    j.at("max_sweeps").get_to(c.max_sweeps);
    j.at("kmeans_restarts").get_to(c.kmeans_restarts);
    j.at("seed").get_to(c.seed);
    j.at("repeat").get_to(c.repeat);
    j.at("resample_worlds").get_to(c.resample_worlds);
    j.at("row_normalize").get_to(c.row_normalize);
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DivergenceSummary, worlds, min, max, mean, all_zero, flagged_pairs,
                                   max_bound_violation)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SelectionStep, step, chosen, loss)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ObjectiveTrace, values, converged, sweeps, max_orthonormality_error)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScoreReport, acc, nmi, nmi_degenerate, contingency)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScoreAggregate, acc_mean, acc_std, nmi_mean, nmi_std)

inline void to_json(nlohmann::json& j, const RepeatReport& r) {
    j = {{"seed", r.seed},
         {"representatives", r.representatives},
         {"assignments", r.clustering.assignments},
         {"objective_trace", r.trace},
         {"score", r.score ? nlohmann::json(*r.score) : nlohmann::json(nullptr)}};
}

inline void from_json(const nlohmann::json& j, RepeatReport& r) {
    j.at("seed").get_to(r.seed);
    j.at("representatives").get_to(r.representatives);
    j.at("assignments").get_to(r.clustering.assignments);
    j.at("objective_trace").get_to(r.trace);
    r.score = j.at("score").is_null() ? std::nullopt : std::optional<ScoreReport>(j.at("score").get<ScoreReport>());
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
    j = {{"config", r.config},
         {"n", r.n},
         {"d", r.d},
         {"object_ids", r.object_ids},
         {"divergence_summary", r.divergence},
         {"selection", {{"representatives", r.representatives}, {"trace", r.selection_trace}}},
         {"repeats", r.repeats},
         {"aggregate", r.aggregate ? nlohmann::json(*r.aggregate) : nlohmann::json(nullptr)},
         {"timings", r.timings}};
    if (!r.repeats.empty()) {
        j["assignments"] = r.repeats.front().clustering.assignments;
        j["objective_trace"] = r.repeats.front().trace;
    }
}

inline void from_json(const nlohmann::json& j, RunReport& r) {
    j.at("config").get_to(r.config);
    j.at("n").get_to(r.n);
    j.at("d").get_to(r.d);
    j.at("object_ids").get_to(r.object_ids);
    j.at("divergence_summary").get_to(r.divergence);
    j.at("selection").at("representatives").get_to(r.representatives);
    j.at("selection").at("trace").get_to(r.selection_trace);
    j.at("repeats").get_to(r.repeats);
    r.aggregate = j.at("aggregate").is_null() ? std::nullopt
                                              : std::optional<ScoreAggregate>(j.at("aggregate").get<ScoreAggregate>());
    j.at("timings").get_to(r.timings);
}

inline std::string report_to_string(const RunReport& report) { return nlohmann::json(report).dump(2) + "\n"; }

inline RunReport parse_report(const std::string& text) { return nlohmann::json::parse(text).get<RunReport>(); }

// ---------------------------------------------------------------------------
// Pipeline

inline DivergenceSummary summarize(const DivergenceMatrix& dm) {
    DivergenceSummary s;
    s.worlds = dm.size();
    s.flagged_pairs = dm.flagged_pairs;
    s.max_bound_violation = dm.max_bound_violation;
    std::size_t pairs = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < dm.size(); ++i) {
        for (std::size_t j = i + 1; j < dm.size(); ++j) {
            const double v = dm(i, j);
            s.min = pairs == 0 ? v : std::min(s.min, v);
            s.max = pairs == 0 ? v : std::max(s.max, v);
            total += v;
            ++pairs;
        }
    }
    s.mean = pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
    s.all_zero = s.max == 0.0;
    return s;
}

namespace detail {

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}

    template <typename F>
    auto run(const std::string& stage, F&& f) {
        const auto start = std::chrono::steady_clock::now();
        auto record = [&] {
            sink_[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        };
        try {
            if constexpr (std::is_void_v<decltype(f())>) {
                f();
                record();
            } else {
                auto out = f();
                record();
                return out;
            }
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
    }

private:
    std::map<std::string, double>& sink_;
};

inline DivergenceMatrix divergences_for(const WorldEnsemble& ensemble) {
    if (ensemble.size() == 1) return DivergenceMatrix{Matrix::Zero(1, 1)};
    return pairwise_jsd(ensemble);
}

}  // namespace detail

/// Runs everything after loading; `dataset` must already carry labels if scoring is wanted.
inline PipelineResult run_pipeline_detailed(const RunConfig& config, UncertainDataset dataset) {
    const auto start = std::chrono::steady_clock::now();
    try {
        config.validate();
    } catch (const Error& e) {
        throw StageError("config", e.what());
    }

    PipelineResult out;
    RunReport& report = out.report;
    report.config = config;
    for (const char* stage : {"load", "gaussianize", "sample", "divergence", "select", "cluster", "evaluate"}) {
        report.timings.emplace(stage, 0.0);
    }
    detail::StageTimer timer(report.timings);

    if (config.gaussianize) {
        dataset = timer.run("gaussianize", [&] { return gaussianize(dataset, config.noise_factor); });
    }
    timer.run("load", [&] {
        dataset.validate();
        if (static_cast<std::size_t>(config.k) > dataset.n()) throw Error("k exceeds object count");
    });
    report.n = dataset.n();
    report.d = dataset.d;
    for (const auto& o : dataset.objects) report.object_ids.push_back(o.id);

    SpectralConfig spectral;
    spectral.sigma = config.sigma;
    spectral.rel_tol = config.rel_tol;
    spectral.max_sweeps = config.max_sweeps;
    spectral.row_normalize = config.row_normalize;
    spectral.kmeans_restarts = config.kmeans_restarts;

    WorldEnsemble ensemble;
    SelectionResult selection;
    std::vector<double> accs;
    std::vector<double> nmis;
    for (int rep = 0; rep < config.repeat; ++rep) {
        const bool fresh = rep == 0 || config.resample_worlds;
        if (fresh) {
            const std::uint64_t ensemble_seed =
                rep == 0 ? derive_seed(config.seed, SeedStream::Ensemble, 0)
                         : derive_seed(config.seed, SeedStream::Resample, static_cast<std::uint64_t>(rep));
            ensemble = timer.run("sample", [&] { return sample_ensemble(dataset, config.m, ensemble_seed); });
            auto dm = timer.run("divergence", [&] { return detail::divergences_for(ensemble); });
            selection = timer.run("select", [&] { return select_representatives(dm, config.r); });
            if (rep == 0) {
                report.divergence = summarize(dm);
                report.representatives = selection.representatives;
                report.selection_trace = selection.trace;
                out.divergences = std::move(dm);
            }
        }

        RepeatReport rr;
        rr.seed = derive_seed(config.seed, SeedStream::Clustering, static_cast<std::uint64_t>(rep));
        rr.representatives = selection.representatives;
        auto result = timer.run("cluster", [&] {
            std::vector<PossibleWorld> reps;
            reps.reserve(selection.representatives.size());
            for (auto idx : selection.representatives) reps.push_back(ensemble.worlds[idx]);
            SpectralConfig cfg = spectral;
            cfg.seed = rr.seed;
            return consistent_cluster(reps, config.k, cfg);
        });
        rr.clustering = std::move(result.clustering);
        rr.trace = std::move(result.trace);
        if (dataset.labels) {
            rr.score = timer.run("evaluate", [&] { return score(rr.clustering, *dataset.labels); });
            accs.push_back(rr.score->acc);
            nmis.push_back(rr.score->nmi);
        }
        report.repeats.push_back(std::move(rr));
    }

    if (!accs.empty()) {
        auto mean_std = [](const std::vector<double>& xs) {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            return std::pair{mean, std::sqrt(var / static_cast<double>(xs.size()))};
        };
        ScoreAggregate agg;
        std::tie(agg.acc_mean, agg.acc_std) = mean_std(accs);
        std::tie(agg.nmi_mean, agg.nmi_std) = mean_std(nmis);
        report.aggregate = agg;
    }

    report.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline UncertainDataset load_for_config(const RunConfig& config) {
    try {
        const DatasetFormat fmt = config.format == "instance"   ? DatasetFormat::Instance
                                  : config.format == "gaussian" ? DatasetFormat::Gaussian
                                                                : DatasetFormat::Auto;
        auto ds = load_dataset(config.dataset, fmt);
        if (!config.labels.empty()) load_labels(config.labels, ds);
        return ds;
    } catch (const std::exception& e) {
        throw StageError("load", e.what());
    }
}

inline PipelineResult run_pipeline_detailed(const RunConfig& config) {
    try {
        config.validate();
    } catch (const Error& e) {
        throw StageError("config", e.what());
    }
    const auto start = std::chrono::steady_clock::now();
    auto ds = load_for_config(config);
    const double load_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    auto out = run_pipeline_detailed(config, std::move(ds));
    out.report.timings["load"] += load_seconds;
    out.report.timings["total"] += load_seconds;
    return out;
}

inline RunReport run_pipeline(const RunConfig& config) { return run_pipeline_detailed(config).report; }

inline RunReport run_pipeline(const RunConfig& config, UncertainDataset dataset) {
    return run_pipeline_detailed(config, std::move(dataset)).report;
}

inline std::filesystem::path assignments_path_for(const std::filesystem::path& report_path) {
    auto p = report_path;
    p.replace_filename(report_path.stem().string() + "_assignments.csv");
    return p;
}

inline void write_assignments_csv(std::ostream& out, const RunReport& report) {
    out << "object_id,cluster\n";
    const auto& a = report.assignments().assignments;
    for (std::size_t i = 0; i < a.size(); ++i) out << report.object_ids.at(i) << ',' << a[i] << '\n';
}

/// Writes the JSON report to `path` and the first repeat's assignments to `assignments_path`.
inline void emit_report(const RunReport& report, const std::filesystem::path& path,
                        const std::filesystem::path& assignments_path) {
    auto write = [](const std::filesystem::path& p, auto&& body) {
        std::ofstream out(p);
        if (!out) throw Error("cannot open '" + p.string() + "' for writing");
        body(out);
        out.flush();
        if (!out) throw Error("write to '" + p.string() + "' failed");
    };
    write(path, [&](std::ostream& o) { o << report_to_string(report); });
    write(assignments_path, [&](std::ostream& o) { write_assignments_csv(o, report); });
}

inline void emit_report(const RunReport& report, const std::filesystem::path& path) {
    emit_report(report, path, assignments_path_for(path));
}

}  // namespace rpc
