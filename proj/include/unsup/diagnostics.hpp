#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "unsup/core.hpp"
#include "unsup/linear_models.hpp"
#include "unsup/objective.hpp"
#include "unsup/sequence_prior.hpp"

namespace unsup {

inline constexpr int kJacobiSweepCap = 100;
inline constexpr double kJacobiTolerance = 1e-14;

// One-sided (Hestenes) Jacobi: plane rotations chosen to diagonalize the Gram
// matrix A^T A, applied to the columns of A so that the singular values come
// out as column norms without squaring the condition number.
inline std::vector<double> singular_values(const Matrix& matrix) {
  require(matrix.allFinite(), "matrix has non-finite entries");
  Matrix a = matrix.rows() >= matrix.cols() ? matrix : Matrix(matrix.transpose());
  const Eigen::Index n = a.cols();

  bool converged = n <= 1;
  for (int sweep = 0; sweep < kJacobiSweepCap && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double alpha = a.col(i).squaredNorm();
        const double beta = a.col(j).squaredNorm();
        const double gamma = a.col(i).dot(a.col(j));
        if (gamma == 0.0 || std::abs(gamma) <= kJacobiTolerance * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        const Vector ci = a.col(i);
        a.col(i) = c * ci - s * a.col(j);
        a.col(j) = s * ci + c * a.col(j);
      }
    }
  }
  if (!converged) {
    throw ConvergenceError("Jacobi singular value iteration did not converge within " +
                           std::to_string(kJacobiSweepCap) + " sweeps");
  }
  std::vector<double> sv(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) sv[static_cast<std::size_t>(k)] = a.col(k).norm();
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

// sigma_2 / sigma_1; zero when the matrix has rank one.
inline double rank1_score(const Matrix& matrix) {
  const auto sv = singular_values(matrix);
  require(!sv.empty() && sv[0] > 0.0, "rank-1 score of a zero matrix is undefined");
  return sv.size() < 2 ? 0.0 : sv[1] / sv[0];
}

// Lowest index among the maxima.
inline int argmax_lowest(const Vector& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

inline double test_error(const PredictorParams& predictor, const OneHotSequence& observations,
                         const OneHotSequence& labels) {
  require(observations.size() == labels.size(), "observations and labels differ in length");
  require(!observations.empty(), "test error of an empty sequence is undefined");
  observations.validate();
  labels.validate();
  std::vector<int> decision(static_cast<std::size_t>(predictor.input_dim()));
  for (int m = 0; m < predictor.input_dim(); ++m) {
    decision[static_cast<std::size_t>(m)] = argmax_lowest(predict_dist(predictor, m));
  }
  std::size_t wrong = 0;
  for (std::size_t t = 0; t < observations.size(); ++t) {
    if (decision[static_cast<std::size_t>(observations[t])] != labels[t]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(observations.size());
}

// Largest total-variation distance between the predicted distributions of any
// two inputs. Zero means the predictor ignores its input.
inline double max_prediction_tv(const PredictorParams& predictor) {
  const Matrix q = predict_table(predictor);
  double worst = 0.0;
  for (Eigen::Index a = 0; a < q.cols(); ++a)
    for (Eigen::Index b = a + 1; b < q.cols(); ++b)
      worst = std::max(worst, 0.5 * (q.col(a) - q.col(b)).lpNorm<1>());
  return worst;
}

// ---------------------------------------------------------------------------
// Landscape probes

struct LabeledObjective {
  std::string label;
  std::function<double(const Matrix&)> objective;  // value to maximize at W_d
};

struct LandscapeProbe {
  std::vector<std::string> labels;
  std::vector<double> grid;
  std::vector<std::vector<double>> values;  // values[row][curve], negated objectives
};

inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  require(step > 0.0 && hi >= lo, "grid needs lo <= hi and a positive step");
  const auto n = static_cast<long>(std::llround((hi - lo) / step));
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n + 1));
  for (long i = 0; i <= n; ++i) {
    grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(std::max(n, 1L)));
  }
  return grid;
}

// Evaluates every objective at t * A + (1 - t) * B and records its negative.
inline LandscapeProbe landscape_line(const Matrix& endpoint_a, const Matrix& endpoint_b,
                                     const std::vector<double>& grid,
                                     const std::vector<LabeledObjective>& evaluators) {
  require(endpoint_a.rows() == endpoint_b.rows() && endpoint_a.cols() == endpoint_b.cols(),
          "landscape endpoints differ in shape");
  require(!grid.empty(), "landscape grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    require(grid[i] > grid[i - 1], "landscape grid must be strictly increasing");
  }
  LandscapeProbe probe;
  probe.grid = grid;
  for (const auto& e : evaluators) probe.labels.push_back(e.label);
  for (double t : grid) {
    Matrix w;
    if (t == 1.0) {
      w = endpoint_a;
    } else if (t == 0.0) {
      w = endpoint_b;
    } else {
      w = t * endpoint_a + (1.0 - t) * endpoint_b;
    }
    std::vector<double> row;
    row.reserve(evaluators.size());
    for (const auto& e : evaluators) row.push_back(-e.objective(w));
    probe.values.push_back(std::move(row));
  }
  return probe;
}

inline Matrix random_line_endpoint(const Matrix& anchor, double scale, std::uint64_t seed) {
  require(scale >= 0.0, "random line scale must be nonnegative");
  Matrix out = anchor;
  if (scale == 0.0) return out;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += scale * normal(rng);
  return out;
}

// f(t_{i-1}) - 2 f(t_i) + f(t_{i+1}) for one curve of a probe.
inline std::vector<double> second_differences(const LandscapeProbe& probe, std::size_t curve) {
  std::vector<double> d;
  for (std::size_t i = 1; i + 1 < probe.values.size(); ++i) {
    d.push_back(probe.values[i - 1][curve] - 2.0 * probe.values[i][curve] +
                probe.values[i + 1][curve]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Exhaustive search over hard (one-hot) classifiers

inline constexpr int kOracleMaxClasses = 8;
inline constexpr double kIdentifiabilityMargin = 1e-9;

struct OracleResult {
  std::vector<Permutation> permutations;  // lexicographic order
  std::vector<double> scores;
  std::size_t best = 0;
  double margin = 0.0;  // best score minus the runner-up

  const Permutation& best_permutation() const { return permutations[best]; }
  bool identifiable() const { return margin > kIdentifiabilityMargin; }
};

// Fitness of the saturated predictor q_t = e_{R(x_t)}, computed directly from
// the floored log transition terms.
inline double hard_assignment_fitness(const Permutation& assignment, const SequenceStats& inputs,
                                      const TransitionModel& prior) {
  const Matrix& log_p = prior.log_matrix();
  double score = prior.log_initial()(assignment[static_cast<std::size_t>(inputs.first)]);
  for (int a = 0; a < inputs.dimension; ++a) {
    for (int b = 0; b < inputs.dimension; ++b) {
      const double n = inputs.bigram(a, b);
      if (n != 0.0) {
        score += n * log_p(assignment[static_cast<std::size_t>(b)],
                           assignment[static_cast<std::size_t>(a)]);
      }
    }
  }
  return score;
}

// Scores every bijection R: input index -> class index.
inline OracleResult permutation_oracle(const OneHotSequence& observations,
                                       const TransitionModel& prior) {
  const int c = prior.num_classes();
  require(c <= kOracleMaxClasses,
          "permutation oracle supports at most " + std::to_string(kOracleMaxClasses) + " classes");
  require(observations.dimension == c, "observation dimension must equal the number of classes");
  const SequenceStats stats = SequenceStats::from(observations);

  OracleResult out;
  Permutation r(static_cast<std::size_t>(c));
  std::iota(r.begin(), r.end(), 0);
  do {
    out.permutations.push_back(r);
    out.scores.push_back(hard_assignment_fitness(r, stats, prior));
  } while (std::next_permutation(r.begin(), r.end()));

  out.best = 0;
  for (std::size_t k = 1; k < out.scores.size(); ++k) {
    if (out.scores[k] > out.scores[out.best]) out.best = k;
  }
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < out.scores.size(); ++k) {
    if (k != out.best) runner_up = std::max(runner_up, out.scores[k]);
  }
  out.margin = out.scores.size() > 1 ? out.scores[out.best] - runner_up
                                     : std::numeric_limits<double>::infinity();
  return out;
}

inline std::string one_line_notation(const Permutation& p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(p[i]);
  }
  return s;
}

}  // namespace unsup
