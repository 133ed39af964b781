#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised for any violated precondition or malformed input.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A flat cluster assignment, one id in [0, k) per object.
struct Clustering {
    std::vector<int> assignments;

    std::size_t size() const { return assignments.size(); }
    bool operator==(const Clustering&) const = default;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed streams. A derived seed depends only on (master, stream, index), so
/// worlds and repeats can be generated in any order without changing results.
enum class SeedStream : std::uint64_t {
    Ensemble = 1,
    Clustering = 2,
    Resample = 3,
    KmeansRestart = 4,
};

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index) {
    const std::uint64_t base = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream)));
    return splitmix64(base + index);
}

}  // namespace rpc
