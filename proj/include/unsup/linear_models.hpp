#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "unsup/core.hpp"

namespace unsup {

// p(y | x = e_m) = softmax(sharpness * W.col(m)); weights are C x M.
struct PredictorParams {
  Matrix weights;
  double sharpness = 1.0;

  int num_classes() const { return static_cast<int>(weights.rows()); }
  int input_dim() const { return static_cast<int>(weights.cols()); }
};

// p(x | y = e_j) = softmax(sharpness * W.col(j)); weights are M x C.
struct GeneratorParams {
  Matrix weights;
  double sharpness = 1.0;

  int input_dim() const { return static_cast<int>(weights.rows()); }
  int num_classes() const { return static_cast<int>(weights.cols()); }
};

inline void validate_params(const Matrix& weights, double sharpness, const char* what) {
  require(weights.size() > 0, std::string(what) + " weights are empty");
  require(weights.allFinite(), std::string(what) + " weights have non-finite entries");
  require(sharpness > 0.0 && std::isfinite(sharpness),
          std::string(what) + " sharpness must be positive");
}

namespace detail {

inline Vector softmax(const Vector& logits) {
  const Vector shifted = (logits.array() - logits.maxCoeff()).exp();
  return shifted / shifted.sum();
}

inline Vector log_softmax(const Vector& logits) {
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return logits.array() - lse;
}

}  // namespace detail

inline Vector predict_dist(const PredictorParams& params, int input_index) {
  require(input_index >= 0 && input_index < params.input_dim(),
          "input index " + std::to_string(input_index) + " out of range");
  return detail::softmax(params.sharpness * params.weights.col(input_index));
}

inline Vector generate_log_dist(const GeneratorParams& params, int label_index) {
  require(label_index >= 0 && label_index < params.num_classes(),
          "label index " + std::to_string(label_index) + " out of range");
  return detail::log_softmax(params.sharpness * params.weights.col(label_index));
}

// Column m is predict_dist(params, m).
inline Matrix predict_table(const PredictorParams& params) {
  Matrix q(params.num_classes(), params.input_dim());
  for (int m = 0; m < params.input_dim(); ++m) q.col(m) = predict_dist(params, m);
  return q;
}

// Entry (m, j) is ln p(x = e_m | y = e_j).
inline Matrix generate_log_table(const GeneratorParams& params) {
  Matrix s(params.input_dim(), params.num_classes());
  for (int j = 0; j < params.num_classes(); ++j) s.col(j) = generate_log_dist(params, j);
  return s;
}

// Permutation arrays map a column index to a row index: perm[col] = row.
using Permutation = std::vector<int>;

inline Permutation invert_permutation(const Permutation& p) {
  Permutation inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] >= 0 && static_cast<std::size_t>(p[i]) < p.size(), "not a permutation");
    inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  }
  return inv;
}

inline bool is_bijection(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (int v : p) {
    if (v < 0 || static_cast<std::size_t>(v) >= p.size() || seen[static_cast<std::size_t>(v)])
      return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

inline Matrix permutation_matrix(const Permutation& perm) {
  const int n = static_cast<int>(perm.size());
  Matrix m = Matrix::Zero(n, n);
  for (int col = 0; col < n; ++col) {
    require(perm[col] >= 0 && perm[col] < n, "permutation entry out of range");
    m(perm[col], col) = 1.0;
  }
  return m;
}

struct GaussianInit {
  double sigma = 0.1;
};
struct ZerosInit {};
struct PermutationInit {
  Permutation perm;
  double scale = 1.0;
};
using InitScheme = std::variant<GaussianInit, ZerosInit, PermutationInit>;

inline Matrix init_params(int rows, int cols, const InitScheme& scheme, std::uint64_t seed) {
  require(rows > 0 && cols > 0, "parameter shape must be positive");
  if (const auto* g = std::get_if<GaussianInit>(&scheme)) {
    require(g->sigma >= 0.0, "init sigma must be nonnegative");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    // Fill row-major so the draw order matches the serialized layout.
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = g->sigma * normal(rng);
    return m;
  }
  if (std::holds_alternative<ZerosInit>(scheme)) return Matrix::Zero(rows, cols);
  const auto& p = std::get<PermutationInit>(scheme);
  require(rows == cols && static_cast<int>(p.perm.size()) == rows,
          "permutation init needs a square shape matching the permutation");
  return p.scale * permutation_matrix(p.perm);
}

}  // namespace unsup
