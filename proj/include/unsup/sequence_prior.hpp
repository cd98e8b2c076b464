#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "unsup/core.hpp"

namespace unsup {

inline constexpr double kLogFloor = 1e-12;
inline constexpr double kPerturbClip = 1e-6;
inline constexpr double kStochasticTolerance = 1e-9;
inline constexpr int kPowerIterationCap = 10000;
inline constexpr double kPowerIterationTolerance = 1e-12;

inline double floored_log(double p) { return std::log(std::max(p, kLogFloor)); }

Vector stationary_distribution(const Matrix& matrix);

// Order-1 Markov chain over C classes. Entry (i, j) of the matrix is
// p(y_t = i | y_{t-1} = j), so every column is a distribution.
class TransitionModel {
 public:
  TransitionModel(Matrix matrix, Vector initial_dist)
      : matrix_(std::move(matrix)), initial_dist_(std::move(initial_dist)) {
    validate();
    log_matrix_ = matrix_.unaryExpr(&floored_log);
    log_initial_ = initial_dist_.unaryExpr(&floored_log);
  }

  // Initial distribution set to the chain's stationary distribution.
  static TransitionModel with_stationary_start(Matrix matrix) {
    check_column_stochastic(matrix);
    Vector pi = stationary_distribution(matrix);
    return TransitionModel(std::move(matrix), std::move(pi));
  }

  int num_classes() const { return static_cast<int>(matrix_.rows()); }
  const Matrix& matrix() const { return matrix_; }
  const Matrix& log_matrix() const { return log_matrix_; }
  const Vector& initial_dist() const { return initial_dist_; }
  const Vector& log_initial() const { return log_initial_; }

  static void check_column_stochastic(const Matrix& m) {
    require(m.rows() > 0 && m.rows() == m.cols(), "transition matrix must be square and nonempty");
    require(m.allFinite(), "transition matrix has non-finite entries");
    require((m.array() >= 0.0).all(), "transition matrix has negative entries");
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double s = m.col(j).sum();
      require(std::abs(s - 1.0) <= kStochasticTolerance,
              "transition column " + std::to_string(j) + " sums to " + std::to_string(s));
    }
  }

 private:
  void validate() const {
    check_column_stochastic(matrix_);
    require(initial_dist_.size() == matrix_.rows(), "initial distribution has wrong length");
    require(initial_dist_.allFinite() && (initial_dist_.array() >= 0.0).all(),
            "initial distribution has negative or non-finite entries");
    require(std::abs(initial_dist_.sum() - 1.0) <= kStochasticTolerance,
            "initial distribution does not sum to 1");
  }

  Matrix matrix_;
  Vector initial_dist_;
  Matrix log_matrix_;
  Vector log_initial_;
};

// Power iteration on the lazy chain (P + I) / 2, which has the same fixed
// point as P but no periodic components.
inline Vector stationary_distribution(const Matrix& matrix) {
  TransitionModel::check_column_stochastic(matrix);
  const Eigen::Index n = matrix.rows();
  Vector pi = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (int iter = 0; iter < kPowerIterationCap; ++iter) {
    const Vector moved = matrix * pi;
    if ((moved - pi).lpNorm<Eigen::Infinity>() <= kPowerIterationTolerance) {
      return moved / moved.sum();
    }
    pi = 0.5 * (moved + pi);
    pi /= pi.sum();
  }
  throw ConvergenceError("stationary distribution did not converge within " +
                         std::to_string(kPowerIterationCap) + " power iterations");
}

inline OneHotSequence sample_chain(const TransitionModel& model, std::size_t length,
                                   std::uint64_t seed) {
  require(length >= 1, "chain length must be at least 1");
  Rng rng(seed);
  OneHotSequence out{std::vector<int>(length), model.num_classes()};
  out.indices[0] = sample_index(model.initial_dist(), rng);
  for (std::size_t t = 1; t < length; ++t) {
    out.indices[t] = sample_index(model.matrix().col(out.indices[t - 1]), rng);
  }
  return out;
}

struct TransitionEstimate {
  TransitionModel model;
  // Columns that had no outgoing transitions and no smoothing mass; set to uniform.
  std::vector<int> defaulted_columns;
};

inline TransitionEstimate estimate_transition(const OneHotSequence& labels, double smoothing) {
  labels.validate();
  require(labels.size() >= 2, "estimating transitions needs at least two labels");
  require(smoothing >= 0.0 && std::isfinite(smoothing), "smoothing must be nonnegative");
  const int c = labels.dimension;
  Matrix counts = Matrix::Zero(c, c);
  for (std::size_t t = 1; t < labels.size(); ++t) counts(labels[t], labels[t - 1]) += 1.0;

  Matrix matrix(c, c);
  std::vector<int> defaulted;
  for (int j = 0; j < c; ++j) {
    const double denom = counts.col(j).sum() + c * smoothing;
    if (denom <= 0.0) {
      matrix.col(j).setConstant(1.0 / c);
      defaulted.push_back(j);
    } else {
      matrix.col(j) = (counts.col(j).array() + smoothing) / denom;
    }
  }
  return {TransitionModel::with_stationary_start(std::move(matrix)), std::move(defaulted)};
}

// Adds i.i.d. N(0, sigma_p^2) noise to every entry, clips below at kPerturbClip
// and renormalizes columns. The initial distribution of the result is the
// stationary distribution of the perturbed matrix.
inline TransitionModel perturb_transition(const TransitionModel& model, double sigma_p,
                                          std::uint64_t seed) {
  require(sigma_p >= 0.0 && std::isfinite(sigma_p), "sigma_p must be nonnegative");
  if (sigma_p == 0.0) return model;
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma_p);
  Matrix m = model.matrix();
  const Eigen::Index c = m.rows();
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < c; ++i) m(i, j) = std::max(m(i, j) + noise(rng), kPerturbClip);
    m.col(j) /= m.col(j).sum();
  }
  return TransitionModel::with_stationary_start(std::move(m));
}

// Column-wise Dirichlet(concentration) draw, floored and renormalized.
inline Matrix dirichlet_transition_matrix(int num_classes, double concentration, double floor,
                                          std::uint64_t seed) {
  require(num_classes >= 1, "need at least one class");
  require(concentration > 0.0, "Dirichlet concentration must be positive");
  Rng rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Matrix m(num_classes, num_classes);
  for (int j = 0; j < num_classes; ++j) {
    for (int i = 0; i < num_classes; ++i) m(i, j) = gamma(rng);
    m.col(j) /= m.col(j).sum();
    m.col(j) = m.col(j).cwiseMax(floor);
    m.col(j) /= m.col(j).sum();
  }
  return m;
}

inline constexpr int kDefaultNumClasses = 4;
inline constexpr double kDefaultDirichletConcentration = 0.5;
inline constexpr double kDefaultDirichletFloor = 0.01;
inline constexpr std::uint64_t kDefaultPriorSeed = 3038;

// The benchmark prior used by the experiments unless another is supplied.
inline TransitionModel default_transition_model() {
  return TransitionModel::with_stationary_start(
      dirichlet_transition_matrix(kDefaultNumClasses, kDefaultDirichletConcentration,
                                  kDefaultDirichletFloor, kDefaultPriorSeed));
}

}  // namespace unsup
