#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rpc/common.hpp"

/**
 * @file uncertain_data.hpp
 *
 * @brief Uncertain objects, possible worlds and their sampling.
 *
 * An uncertain object is either a finite set of instances (optionally weighted)
 * or a Gaussian perturbation of a base point with independent attributes.
 * A possible world takes exactly one instance per object, in object order.
 */
namespace rpc {

using Instance = Vector;

struct EmpiricalModel {
    std::vector<Instance> instances;
    /// Absent means uniform.
    std::optional<std::vector<double>> weights;
};

struct GaussianModel {
    Instance mean;
    Vector stddev;
};

struct UncertainObject {
    std::string id;
    std::variant<EmpiricalModel, GaussianModel> model;

    std::size_t dim() const {
        return std::visit(
            [](const auto& m) -> std::size_t {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, EmpiricalModel>) {
                    return m.instances.empty() ? 0 : static_cast<std::size_t>(m.instances.front().size());
                } else {
                    return static_cast<std::size_t>(m.mean.size());
                }
            },
            model);
    }

    void validate(std::size_t d) const {
        auto fail = [&](const std::string& why) { throw Error("object '" + id + "': " + why); };
        auto check_finite = [&](const Vector& v, const char* what) {
            if (static_cast<std::size_t>(v.size()) != d) {
                fail(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(d));
            }
            if (!v.allFinite()) fail(std::string(what) + " is not finite");
        };
        if (const auto* e = std::get_if<EmpiricalModel>(&model)) {
            if (e->instances.empty()) fail("no instances");
            for (const auto& inst : e->instances) check_finite(inst, "instance");
            if (e->weights) {
                if (e->weights->size() != e->instances.size()) fail("weight count differs from instance count");
                double total = 0.0;
                for (double w : *e->weights) {
                    if (!(w >= 0.0) || !std::isfinite(w)) fail("negative or non-finite weight");
                    total += w;
                }
                if (std::abs(total - 1.0) > 1e-9) fail("weights sum to " + std::to_string(total) + ", not 1");
            }
        } else {
            const auto& g = std::get<GaussianModel>(model);
            check_finite(g.mean, "mean");
            check_finite(g.stddev, "stddev");
            if ((g.stddev.array() < 0.0).any()) fail("negative stddev");
        }
    }
};

struct UncertainDataset {
    std::vector<UncertainObject> objects;
    std::size_t d = 0;
    /// Dense class ids, one per object.
    std::optional<std::vector<int>> labels;
    /// Original label strings, indexed by dense id.
    std::vector<std::string> label_names;

    std::size_t n() const { return objects.size(); }

    void validate() const {
        if (objects.empty()) throw Error("dataset has no objects");
        if (d == 0) throw Error("dataset has zero dimensionality");
        for (const auto& o : objects) o.validate(d);
        if (labels && labels->size() != objects.size()) {
            throw Error("label count " + std::to_string(labels->size()) + " differs from object count " +
                        std::to_string(objects.size()));
        }
    }
};

/// One n x d realization; row i is drawn from object i.
struct PossibleWorld {
    Matrix points;

    std::size_t n() const { return static_cast<std::size_t>(points.rows()); }
    std::size_t d() const { return static_cast<std::size_t>(points.cols()); }
};

struct WorldEnsemble {
    std::vector<PossibleWorld> worlds;
    std::uint64_t seed = 0;

    std::size_t size() const { return worlds.size(); }
};

// ---------------------------------------------------------------------------
// CSV ingestion

enum class DatasetFormat { Auto, Instance, Gaussian };

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_real(std::string_view field, const std::string& where) {
    double value = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw Error(where + ": '" + std::string(field) + "' is not a finite number");
    }
    return value;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

struct CsvLine {
    std::size_t number;
    std::vector<std::string_view> fields;
};

}  // namespace detail

/**
 * @brief Parse an uncertain dataset from CSV text.
 *
 * Instance format: header `object_id,dim_1,...,dim_d[,weight]`, one row per
 * instance; rows sharing an object_id form one empirical object, ordered by
 * first appearance. Gaussian format: header
 * `object_id,mean_1,...,mean_d,std_1,...,std_d`, one row per object.
 *
 * @param source Name used in error messages.
 */
inline UncertainDataset parse_dataset(std::istream& in, const std::string& source,
                                      DatasetFormat format = DatasetFormat::Auto) {
    std::string header_text;
    std::size_t line_no = 0;
    while (std::getline(in, header_text)) {
        ++line_no;
        if (!detail::trim(header_text).empty()) break;
    }
    if (detail::trim(header_text).empty()) throw Error(source + ": empty file");
    // Strip a UTF-8 BOM.
    if (detail::starts_with(header_text, "\xEF\xBB\xBF")) header_text.erase(0, 3);
    const auto header = detail::split_csv(header_text);
    const std::string header_where = source + ":" + std::to_string(line_no);
    if (header.size() < 2 || header.front() != "object_id") {
        throw Error(header_where + ": header must start with object_id followed by at least one attribute");
    }

    if (format == DatasetFormat::Auto) {
        format = detail::starts_with(header[1], "mean_") ? DatasetFormat::Gaussian : DatasetFormat::Instance;
    }

    UncertainDataset ds;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::size_t> last_line;

    std::size_t d = 0;
    bool weighted = false;
    if (format == DatasetFormat::Gaussian) {
        if ((header.size() - 1) % 2 != 0) throw Error(header_where + ": Gaussian header needs equal mean_ and std_ columns");
        d = (header.size() - 1) / 2;
        for (std::size_t j = 0; j < d; ++j) {
            if (!detail::starts_with(header[1 + j], "mean_") || !detail::starts_with(header[1 + d + j], "std_")) {
                throw Error(header_where + ": expected mean_1..mean_d then std_1..std_d columns");
            }
        }
    } else {
        weighted = header.back() == "weight";
        d = header.size() - 1 - (weighted ? 1 : 0);
        if (d == 0) throw Error(header_where + ": no coordinate columns");
    }
    ds.d = d;

    std::string text;
    while (std::getline(in, text)) {
        ++line_no;
        if (detail::trim(text).empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto fields = detail::split_csv(text);
        if (fields.size() != header.size()) {
            throw Error(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()));
        }
        const std::string id(fields[0]);
        if (id.empty()) throw Error(where + ": empty object_id");

        if (format == DatasetFormat::Gaussian) {
            if (index.contains(id)) throw Error(where + ": duplicate object_id '" + id + "' in Gaussian file");
            GaussianModel g{Vector(d), Vector(d)};
            for (std::size_t j = 0; j < d; ++j) {
                g.mean[j] = detail::parse_real(fields[1 + j], where);
                g.stddev[j] = detail::parse_real(fields[1 + d + j], where);
                if (g.stddev[j] < 0.0) throw Error(where + ": negative standard deviation");
            }
            index.emplace(id, ds.objects.size());
            last_line.push_back(line_no);
            ds.objects.push_back({id, std::move(g)});
            continue;
        }

        Instance inst(d);
        for (std::size_t j = 0; j < d; ++j) inst[j] = detail::parse_real(fields[1 + j], where);
        auto [it, inserted] = index.emplace(id, ds.objects.size());
        if (inserted) {
            ds.objects.push_back({id, EmpiricalModel{}});
            last_line.push_back(line_no);
        }
        auto& model = std::get<EmpiricalModel>(ds.objects[it->second].model);
        model.instances.push_back(std::move(inst));
        last_line[it->second] = line_no;
        if (weighted) {
            const double w = detail::parse_real(fields.back(), where);
            if (w < 0.0) throw Error(where + ": negative weight");
            if (!model.weights) model.weights.emplace();
            model.weights->push_back(w);
        }
    }

    if (ds.objects.empty()) throw Error(source + ": no data rows");
    for (std::size_t i = 0; i < ds.objects.size(); ++i) {
        try {
            ds.objects[i].validate(d);
        } catch (const Error& e) {
            throw Error(source + ":" + std::to_string(last_line[i]) + ": " + e.what());
        }
    }
    return ds;
}

inline UncertainDataset load_dataset(const std::string& path, DatasetFormat format = DatasetFormat::Auto) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset '" + path + "'");
    return parse_dataset(in, path, format);
}

/// Attach labels from a `object_id,label` CSV. Labels are mapped to dense ids
/// in order of first appearance in the file.
inline void parse_labels(std::istream& in, const std::string& source, UncertainDataset& ds) {
    std::unordered_map<std::string, std::size_t> object_index;
    for (std::size_t i = 0; i < ds.objects.size(); ++i) object_index.emplace(ds.objects[i].id, i);

    std::string text;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<int> labels(ds.n(), -1);
    std::unordered_map<std::string, int> dense;
    std::vector<std::string> names;
    while (std::getline(in, text)) {
        ++line_no;
        if (detail::trim(text).empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto fields = detail::split_csv(text);
        if (!have_header) {
            if (fields.size() != 2 || fields[0] != "object_id" || fields[1] != "label") {
                throw Error(where + ": labels header must be object_id,label");
            }
            have_header = true;
            continue;
        }
        if (fields.size() != 2) throw Error(where + ": expected 2 fields");
        const auto it = object_index.find(std::string(fields[0]));
        if (it == object_index.end()) throw Error(where + ": unknown object_id '" + std::string(fields[0]) + "'");
        if (labels[it->second] != -1) throw Error(where + ": duplicate label for '" + std::string(fields[0]) + "'");
        const std::string name(fields[1]);
        auto [lit, inserted] = dense.emplace(name, static_cast<int>(names.size()));
        if (inserted) names.push_back(name);
        labels[it->second] = lit->second;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == -1) throw Error(source + ": no label for object '" + ds.objects[i].id + "'");
    }
    ds.labels = std::move(labels);
    ds.label_names = std::move(names);
}

inline void load_labels(const std::string& path, UncertainDataset& ds) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open labels '" + path + "'");
    parse_labels(in, path, ds);
}

inline void write_gaussian_csv(std::ostream& out, const UncertainDataset& ds) {
    out << "object_id";
    for (std::size_t j = 1; j <= ds.d; ++j) out << ",mean_" << j;
    for (std::size_t j = 1; j <= ds.d; ++j) out << ",std_" << j;
    out << '\n' << std::setprecision(17);
    for (const auto& o : ds.objects) {
        const auto* g = std::get_if<GaussianModel>(&o.model);
        if (g == nullptr) throw Error("object '" + o.id + "' is not Gaussian");
        out << o.id;
        for (Eigen::Index j = 0; j < g->mean.size(); ++j) out << ',' << g->mean[j];
        for (Eigen::Index j = 0; j < g->stddev.size(); ++j) out << ',' << g->stddev[j];
        out << '\n';
    }
}

inline void write_instance_csv(std::ostream& out, const UncertainDataset& ds) {
    bool weighted = false;
    for (const auto& o : ds.objects) {
        const auto* e = std::get_if<EmpiricalModel>(&o.model);
        if (e == nullptr) throw Error("object '" + o.id + "' is not empirical");
        weighted = weighted || e->weights.has_value();
    }
    out << "object_id";
    for (std::size_t j = 1; j <= ds.d; ++j) out << ",dim_" << j;
    if (weighted) out << ",weight";
    out << '\n' << std::setprecision(17);
    for (const auto& o : ds.objects) {
        const auto& e = std::get<EmpiricalModel>(o.model);
        for (std::size_t r = 0; r < e.instances.size(); ++r) {
            out << o.id;
            for (Eigen::Index j = 0; j < e.instances[r].size(); ++j) out << ',' << e.instances[r][j];
            if (weighted) out << ',' << (e.weights ? (*e.weights)[r] : 1.0 / static_cast<double>(e.instances.size()));
            out << '\n';
        }
    }
}

inline void write_labels_csv(std::ostream& out, const UncertainDataset& ds) {
    if (!ds.labels) throw Error("dataset has no labels");
    out << "object_id,label\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const int l = (*ds.labels)[i];
        out << ds.objects[i].id << ','
            << (static_cast<std::size_t>(l) < ds.label_names.size() ? ds.label_names[l] : std::to_string(l)) << '\n';
    }
}

/// Returns the points of a dataset whose objects are all single-instance empirical.
inline Matrix as_points(const UncertainDataset& ds) {
    Matrix pts(ds.n(), ds.d);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto* e = std::get_if<EmpiricalModel>(&ds.objects[i].model);
        if (e == nullptr || e->instances.size() != 1) {
            throw Error("object '" + ds.objects[i].id + "' is not a single deterministic point");
        }
        pts.row(i) = e->instances.front().transpose();
    }
    return pts;
}

/**
 * @brief Attach Gaussian uncertainty to a point set.
 *
 * Object i becomes N(points.row(i), diag(s^2)) where
 * s_j = noise_factor * (population standard deviation of column j).
 * Constant columns get s_j = 0.
 */
inline UncertainDataset gaussianize(const Matrix& points, const std::optional<std::vector<int>>& labels,
                                    double noise_factor, const std::vector<std::string>& ids = {}) {
    if (points.rows() == 0 || points.cols() == 0) throw Error("gaussianize: empty point set");
    if (!points.allFinite()) throw Error("gaussianize: non-finite coordinates");
    if (!(noise_factor > 0.0) || !std::isfinite(noise_factor)) throw Error("gaussianize: noise_factor must be positive");
    if (!ids.empty() && ids.size() != static_cast<std::size_t>(points.rows())) {
        throw Error("gaussianize: id count differs from point count");
    }

    const Eigen::RowVectorXd mean = points.colwise().mean();
    const Eigen::RowVectorXd spread =
        ((points.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(points.rows())).sqrt();
    Vector stddev = noise_factor * spread.transpose();
    for (Eigen::Index j = 0; j < stddev.size(); ++j) {
        if (spread[j] == 0.0) stddev[j] = 0.0;
    }

    UncertainDataset ds;
    ds.d = static_cast<std::size_t>(points.cols());
    ds.objects.reserve(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        std::string id = ids.empty() ? std::to_string(i) : ids[i];
        ds.objects.push_back({std::move(id), GaussianModel{points.row(i).transpose(), stddev}});
    }
    ds.labels = labels;
    if (labels && labels->size() != ds.objects.size()) throw Error("gaussianize: label count differs from point count");
    return ds;
}

/// Gaussianize a dataset of deterministic points, keeping ids and labels.
inline UncertainDataset gaussianize(const UncertainDataset& points_ds, double noise_factor) {
    std::vector<std::string> ids;
    ids.reserve(points_ds.n());
    for (const auto& o : points_ds.objects) ids.push_back(o.id);
    auto ds = gaussianize(as_points(points_ds), points_ds.labels, noise_factor, ids);
    ds.label_names = points_ds.label_names;
    return ds;
}

// ---------------------------------------------------------------------------
// Sampling

template <typename Rng>
PossibleWorld sample_world(const UncertainDataset& ds, Rng& rng) {
    PossibleWorld world{Matrix(ds.n(), ds.d)};
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto& object = ds.objects[i];
        if (const auto* e = std::get_if<EmpiricalModel>(&object.model)) {
            std::size_t pick = 0;
            if (e->instances.size() > 1) {
                if (e->weights) {
                    std::discrete_distribution<std::size_t> choose(e->weights->begin(), e->weights->end());
                    pick = choose(rng);
                } else {
                    std::uniform_int_distribution<std::size_t> choose(0, e->instances.size() - 1);
                    pick = choose(rng);
                }
            }
            world.points.row(i) = e->instances[pick].transpose();
        } else {
            const auto& g = std::get<GaussianModel>(object.model);
            for (std::size_t j = 0; j < ds.d; ++j) {
                if (g.stddev[j] > 0.0) {
                    std::normal_distribution<double> draw(g.mean[j], g.stddev[j]);
                    world.points(i, j) = draw(rng);
                } else {
                    world.points(i, j) = g.mean[j];
                }
            }
        }
    }
    return world;
}

/// M i.i.d. worlds; world m uses its own generator seeded by derive_seed(seed, Ensemble, m).
inline WorldEnsemble sample_ensemble(const UncertainDataset& ds, std::size_t m, std::uint64_t seed) {
    if (m == 0) throw Error("sample_ensemble: M must be at least 1");
    ds.validate();
    WorldEnsemble ensemble;
    ensemble.seed = seed;
    ensemble.worlds.reserve(m);
    for (std::size_t w = 0; w < m; ++w) {
        std::mt19937_64 rng(derive_seed(seed, SeedStream::Ensemble, w));
        ensemble.worlds.push_back(sample_world(ds, rng));
    }
    return ensemble;
}

}  // namespace rpc
