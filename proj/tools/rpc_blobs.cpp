// Writes a planted Gaussian-blob dataset for trying out the rpc tool.
//
//   rpc_blobs --n 150 --k 3 --out points.csv --labels labels.csv
//   rpc_blobs --n 150 --k 3 --noise-factor 0.1 --out gaussian.csv --labels labels.csv

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rpc/rpc.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate planted Gaussian blobs"};
    std::size_t n = 150;
    int k = 3;
    std::size_t d = 2;
    double separation = 10.0;
    double noise_factor = 0.0;
    std::uint64_t seed = 7;
    std::string out_path;
    std::string labels_path;
    app.add_option("--n", n, "Number of objects")->capture_default_str();
    app.add_option("--k", k, "Number of blobs")->capture_default_str();
    app.add_option("--d", d, "Dimensionality")->capture_default_str();
    app.add_option("--separation", separation, "Distance between neighbouring centers, in blob stddevs")
        ->capture_default_str();
    app.add_option("--noise-factor", noise_factor, "If positive, write a Gaussian-uncertainty CSV")
        ->capture_default_str();
    app.add_option("--seed", seed, "RNG seed")->capture_default_str();
    app.add_option("--out", out_path, "Dataset CSV")->required();
    app.add_option("--labels", labels_path, "Labels CSV");
    CLI11_PARSE(app, argc, argv);

    try {
        auto ds = rpc::blobs_as_points(rpc::make_blobs(n, k, d, separation, seed));
        std::ofstream out(out_path);
        if (!out) throw rpc::Error("cannot open '" + out_path + "'");
        if (noise_factor > 0.0) {
            ds = rpc::gaussianize(ds, noise_factor);
            rpc::write_gaussian_csv(out, ds);
        } else {
            rpc::write_instance_csv(out, ds);
        }
        if (!labels_path.empty()) {
            std::ofstream lab(labels_path);
            if (!lab) throw rpc::Error("cannot open '" + labels_path + "'");
            rpc::write_labels_csv(lab, ds);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
