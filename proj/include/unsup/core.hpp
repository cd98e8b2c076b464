#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace unsup {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Raised when an argument violates an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when an iterative numerical routine exhausts its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

// A sequence of one-hot vectors stored by hot position.
struct OneHotSequence {
  std::vector<int> indices;
  int dimension = 0;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  int operator[](std::size_t t) const { return indices[t]; }

  void validate() const {
    require(dimension > 0, "one-hot dimension must be positive");
    for (int i : indices) {
      require(i >= 0 && i < dimension, "one-hot index " + std::to_string(i) +
                                           " outside [0, " + std::to_string(dimension) + ")");
    }
  }

  OneHotSequence slice(std::size_t begin, std::size_t end) const {
    return {std::vector<int>(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                             indices.begin() + static_cast<std::ptrdiff_t>(end)),
            dimension};
  }
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; derives independent sub-seeds from a parent seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Draws an index from a discrete distribution by inversion. Used instead of
// std::discrete_distribution so that sampling depends only on one uniform draw.
inline int sample_index(const Vector& probabilities, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * probabilities.sum();
  double cumulative = 0.0;
  const int n = static_cast<int>(probabilities.size());
  for (int i = 0; i < n; ++i) {
    cumulative += probabilities(i);
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap at the top; return the last nonzero entry.
  for (int i = n - 1; i >= 0; --i) {
    if (probabilities(i) > 0.0) return i;
  }
  return n - 1;
}

}  // namespace unsup
