#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "unsup/core.hpp"
#include "unsup/diagnostics.hpp"
#include "unsup/linear_models.hpp"
#include "unsup/objective.hpp"
#include "unsup/sequence_prior.hpp"

namespace unsup {

inline constexpr std::size_t kFullBatch = 0;

struct TrainConfig {
  double lambda = 0.0;
  double learning_rate = 0.1;
  int epochs = 2000;
  std::size_t window_length = kFullBatch;  // kFullBatch or a positive length
  double gamma_d = 1.0;
  double gamma_g = 1.0;
  InitScheme init = GaussianInit{0.1};
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
  int eval_every = 10;

  void validate() const {
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative");
    require(learning_rate >= 0.0 && std::isfinite(learning_rate),
            "learning rate must be nonnegative");
    require(epochs >= 1, "epochs must be positive");
    require(gamma_d > 0.0 && gamma_g > 0.0, "sharpness values must be positive");
    require(eval_every >= 1, "eval_every must be positive");
  }
};

struct TraceRow {
  int epoch = 0;
  double fitness = 0.0;
  double regularization = 0.0;
  double total = 0.0;
  double test_error = std::numeric_limits<double>::quiet_NaN();
  double rank1_score = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = 0.0;
};

using TrainTrace = std::vector<TraceRow>;

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, TrainTrace last_finite)
      : std::runtime_error(what), trace_(std::move(last_finite)) {}
  const TrainTrace& trace() const { return trace_; }

 private:
  TrainTrace trace_;
};

struct UnsupervisedResult {
  PredictorParams predictor;
  GeneratorParams generator;
  TrainTrace trace;
};

struct SupervisedResult {
  PredictorParams predictor;
  TrainTrace trace;
};

// Paired held-out data used only to fill the test_error column.
struct EvalPairs {
  OneHotSequence observations;
  OneHotSequence labels;
};

namespace detail {

inline double safe_rank1(const Matrix& w) {
  if (!w.allFinite() || w.isZero(0.0)) return std::numeric_limits<double>::quiet_NaN();
  return rank1_score(w);
}

// Contiguous [begin, end) windows covering the sequence.
inline std::vector<std::pair<std::size_t, std::size_t>> windows(std::size_t length,
                                                                std::size_t window_length) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (window_length == kFullBatch || window_length >= length) {
    out.emplace_back(0, length);
    return out;
  }
  for (std::size_t b = 0; b < length; b += window_length) {
    out.emplace_back(b, std::min(length, b + window_length));
  }
  return out;
}

inline bool record_epoch(int epoch, const TrainConfig& config) {
  return epoch == 0 || epoch == config.epochs || epoch % config.eval_every == 0;
}

}  // namespace detail

inline std::pair<PredictorParams, GeneratorParams> initial_params(const TrainConfig& config,
                                                                  int num_classes,
                                                                  int input_dim) {
  PredictorParams predictor{init_params(num_classes, input_dim, config.init, config.init_seed),
                            config.gamma_d};
  InitScheme gen_scheme = config.init;
  if (const auto* p = std::get_if<PermutationInit>(&config.init)) {
    gen_scheme = PermutationInit{invert_permutation(p->perm), p->scale};
  }
  GeneratorParams generator{
      init_params(input_dim, num_classes, gen_scheme, derive_seed(config.init_seed, 1)),
      config.gamma_g};
  return {std::move(predictor), std::move(generator)};
}

// Gradient ascent on fitness + lambda * regularization. Each step moves along
// the gradient of the window's objective divided by the window length, so the
// learning rate is per position.
inline UnsupervisedResult train_unsupervised(const TrainConfig& config,
                                             const OneHotSequence& observations,
                                             const TransitionModel& prior,
                                             PredictorParams predictor, GeneratorParams generator,
                                             const std::optional<EvalPairs>& eval = std::nullopt) {
  config.validate();
  observations.validate();
  require(observations.size() >= 2, "training needs at least two observations");
  const SequenceStats full = SequenceStats::from(observations);
  std::vector<SequenceStats> window_stats;
  for (auto [b, e] : detail::windows(observations.size(), config.window_length)) {
    window_stats.push_back(SequenceStats::from(observations.slice(b, e)));
  }
  std::vector<std::size_t> order(window_stats.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.shuffle_seed);

  TrainTrace trace;
  auto evaluate = [&](int epoch) {
    const ObjectiveBreakdown obj =
        unsupervised_objective(predictor, generator, full, prior, config.lambda);
    if (!std::isfinite(obj.total)) {
      throw TrainingDiverged("objective became non-finite at epoch " + std::to_string(epoch),
                             trace);
    }
    return obj;
  };
  auto record = [&](int epoch, const ObjectiveBreakdown& obj) {
    TraceRow row;
    row.epoch = epoch;
    row.fitness = obj.fitness;
    row.regularization = obj.regularization;
    row.total = obj.total;
    row.grad_norm = analytic_gradient(predictor, generator, full, prior, config.lambda).norm();
    row.rank1_score = detail::safe_rank1(predictor.weights);
    if (eval) row.test_error = test_error(predictor, eval->observations, eval->labels);
    trace.push_back(row);
  };

  record(0, evaluate(0));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (order.size() > 1) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t w : order) {
      const SequenceStats& stats = window_stats[w];
      const GradientPair g = analytic_gradient(predictor, generator, stats, prior, config.lambda);
      const double step = config.learning_rate / static_cast<double>(stats.length);
      predictor.weights += step * g.d_predictor;
      generator.weights += step * g.d_generator;
      if (!predictor.weights.allFinite() || !generator.weights.allFinite()) {
        throw TrainingDiverged("parameters became non-finite at epoch " + std::to_string(epoch),
                               trace);
      }
    }
    const ObjectiveBreakdown obj = evaluate(epoch);
    if (detail::record_epoch(epoch, config)) record(epoch, obj);
  }
  return {std::move(predictor), std::move(generator), std::move(trace)};
}

inline UnsupervisedResult train_unsupervised(const TrainConfig& config,
                                             const OneHotSequence& observations,
                                             const TransitionModel& prior,
                                             const std::optional<EvalPairs>& eval = std::nullopt) {
  config.validate();
  auto [predictor, generator] =
      initial_params(config, prior.num_classes(), observations.dimension);
  return train_unsupervised(config, observations, prior, std::move(predictor),
                            std::move(generator), eval);
}

// Gradient ascent on sum_t ln q_t(y_t). The trace's fitness column holds the
// supervised objective; the regularization column is zero.
inline SupervisedResult train_supervised(const TrainConfig& config,
                                         const OneHotSequence& observations,
                                         const OneHotSequence& labels,
                                         const std::optional<EvalPairs>& eval = std::nullopt) {
  config.validate();
  require(observations.size() == labels.size(), "supervised pairs differ in length");
  require(!observations.empty(), "supervised training needs at least one pair");
  const PairStats full = PairStats::from(observations, labels);
  std::vector<PairStats> window_stats;
  for (auto [b, e] : detail::windows(observations.size(), config.window_length)) {
    window_stats.push_back(PairStats::from(observations.slice(b, e), labels.slice(b, e)));
  }
  std::vector<std::size_t> order(window_stats.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.shuffle_seed);

  PredictorParams predictor{
      init_params(labels.dimension, observations.dimension, config.init, config.init_seed),
      config.gamma_d};
  TrainTrace trace;
  auto record = [&](int epoch, double value) {
    TraceRow row;
    row.epoch = epoch;
    row.fitness = value;
    row.total = value;
    row.grad_norm = supervised_gradient(predictor, full).norm();
    row.rank1_score = detail::safe_rank1(predictor.weights);
    if (eval) row.test_error = test_error(predictor, eval->observations, eval->labels);
    trace.push_back(row);
  };
  auto evaluate = [&](int epoch) {
    const double v = supervised_cross_entropy(predictor, full);
    if (!std::isfinite(v)) {
      throw TrainingDiverged("objective became non-finite at epoch " + std::to_string(epoch),
                             trace);
    }
    return v;
  };

  record(0, evaluate(0));
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (order.size() > 1) std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t w : order) {
      const PairStats& stats = window_stats[w];
      predictor.weights += config.learning_rate / static_cast<double>(stats.length) *
                           supervised_gradient(predictor, stats);
      if (!predictor.weights.allFinite()) {
        throw TrainingDiverged("parameters became non-finite at epoch " + std::to_string(epoch),
                               trace);
      }
    }
    const double v = evaluate(epoch);
    if (detail::record_epoch(epoch, config)) record(epoch, v);
  }
  return {std::move(predictor), std::move(trace)};
}

}  // namespace unsup
