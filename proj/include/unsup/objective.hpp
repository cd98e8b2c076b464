#pragma once

#include <cmath>
#include <string>

#include "unsup/core.hpp"
#include "unsup/linear_models.hpp"
#include "unsup/sequence_prior.hpp"

namespace unsup {

// Sufficient statistics of an input sequence for an order-1 prior. Since the
// inputs are one-hot, q_t depends on t only through x_t, and every sum over
// positions collapses onto unigram and bigram counts of input indices.
struct SequenceStats {
  int dimension = 0;
  std::size_t length = 0;
  int first = 0;
  Vector unigram;  // unigram(m) = #{t : x_t = m}
  Matrix bigram;   // bigram(a, b) = #{t >= 2 : x_{t-1} = a, x_t = b}

  static SequenceStats from(const OneHotSequence& seq) {
    seq.validate();
    require(!seq.empty(), "input sequence is empty");
    SequenceStats s;
    s.dimension = seq.dimension;
    s.length = seq.size();
    s.first = seq[0];
    s.unigram = Vector::Zero(seq.dimension);
    s.bigram = Matrix::Zero(seq.dimension, seq.dimension);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      s.unigram(seq[t]) += 1.0;
      if (t > 0) s.bigram(seq[t - 1], seq[t]) += 1.0;
    }
    return s;
  }
};

struct ObjectiveBreakdown {
  double fitness = 0.0;
  double regularization = 0.0;
  double lambda = 0.0;
  double total = 0.0;

  static ObjectiveBreakdown combine(double fitness, double regularization, double lambda) {
    return {fitness, regularization, lambda, fitness + lambda * regularization};
  }
};

// Ascent directions of ObjectiveBreakdown::total.
struct GradientPair {
  Matrix d_predictor;  // C x M
  Matrix d_generator;  // M x C

  double norm() const {
    return std::sqrt(d_predictor.squaredNorm() + d_generator.squaredNorm());
  }
};

namespace detail {

inline void check_predictor(const PredictorParams& predictor, const SequenceStats& inputs) {
  validate_params(predictor.weights, predictor.sharpness, "predictor");
  require(predictor.input_dim() == inputs.dimension,
          "predictor has " + std::to_string(predictor.input_dim()) +
              " input columns but inputs have dimension " + std::to_string(inputs.dimension));
}

inline void check_prior(const PredictorParams& predictor, const TransitionModel& prior) {
  require(predictor.num_classes() == prior.num_classes(),
          "predictor has " + std::to_string(predictor.num_classes()) +
              " classes but the prior has " + std::to_string(prior.num_classes()));
}

inline void check_generator(const PredictorParams& predictor, const GeneratorParams& generator) {
  validate_params(generator.weights, generator.sharpness, "generator");
  require(generator.num_classes() == predictor.num_classes() &&
              generator.input_dim() == predictor.input_dim(),
          "generator shape must be the transpose of the predictor shape");
}

inline double fitness_from_table(const Matrix& q, const SequenceStats& inputs,
                                 const TransitionModel& prior) {
  // pair(b, a) = q_b^T ln(P) q_a, the expected log transition a -> b.
  const Matrix pair = q.transpose() * prior.log_matrix() * q;
  return q.col(inputs.first).dot(prior.log_initial()) +
         inputs.bigram.cwiseProduct(pair.transpose()).sum();
}

inline double regularization_from_tables(const Matrix& q, const Matrix& log_gen,
                                         const SequenceStats& inputs) {
  // per_input(m) = sum_j q_m(j) ln p(x = e_m | y = e_j)
  const Vector per_input = q.transpose().cwiseProduct(log_gen).rowwise().sum();
  return inputs.unigram.dot(per_input);
}

}  // namespace detail

// Expected log-likelihood of the predicted output sequence under the prior:
// q_1^T ln(pi) + sum_{t>=2} q_t^T ln(P) q_{t-1}.
inline double fitness_term(const PredictorParams& predictor, const SequenceStats& inputs,
                           const TransitionModel& prior) {
  detail::check_predictor(predictor, inputs);
  detail::check_prior(predictor, prior);
  return detail::fitness_from_table(predict_table(predictor), inputs, prior);
}

inline double fitness_term(const PredictorParams& predictor, const OneHotSequence& inputs,
                           const TransitionModel& prior) {
  return fitness_term(predictor, SequenceStats::from(inputs), prior);
}

// sum_t sum_j q_t(j) ln p(x_t | y = e_j, W_g)
inline double regularization_term(const PredictorParams& predictor,
                                  const GeneratorParams& generator, const SequenceStats& inputs) {
  detail::check_predictor(predictor, inputs);
  detail::check_generator(predictor, generator);
  return detail::regularization_from_tables(predict_table(predictor),
                                            generate_log_table(generator), inputs);
}

inline double regularization_term(const PredictorParams& predictor,
                                  const GeneratorParams& generator, const OneHotSequence& inputs) {
  return regularization_term(predictor, generator, SequenceStats::from(inputs));
}

inline ObjectiveBreakdown unsupervised_objective(const PredictorParams& predictor,
                                                 const GeneratorParams& generator,
                                                 const SequenceStats& inputs,
                                                 const TransitionModel& prior, double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative");
  detail::check_predictor(predictor, inputs);
  detail::check_prior(predictor, prior);
  detail::check_generator(predictor, generator);
  const Matrix q = predict_table(predictor);
  return ObjectiveBreakdown::combine(
      detail::fitness_from_table(q, inputs, prior),
      detail::regularization_from_tables(q, generate_log_table(generator), inputs), lambda);
}

inline ObjectiveBreakdown unsupervised_objective(const PredictorParams& predictor,
                                                 const GeneratorParams& generator,
                                                 const OneHotSequence& inputs,
                                                 const TransitionModel& prior, double lambda) {
  return unsupervised_objective(predictor, generator, SequenceStats::from(inputs), prior, lambda);
}

inline GradientPair analytic_gradient(const PredictorParams& predictor,
                                      const GeneratorParams& generator,
                                      const SequenceStats& inputs, const TransitionModel& prior,
                                      double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be nonnegative");
  detail::check_predictor(predictor, inputs);
  detail::check_prior(predictor, prior);
  detail::check_generator(predictor, generator);

  const int c = predictor.num_classes();
  const int m_dim = predictor.input_dim();
  const Matrix q = predict_table(predictor);
  const Matrix log_gen = generate_log_table(generator);
  const Matrix& log_p = prior.log_matrix();

  // Column m accumulates sum_{t : x_t = m} of the gradient of the total with
  // respect to q_t: previous-step, next-step, first-step and regularizer parts.
  Matrix dq = log_p * (q * inputs.bigram) + log_p.transpose() * (q * inputs.bigram.transpose());
  dq.col(inputs.first) += prior.log_initial();
  if (lambda != 0.0) {
    dq += lambda * (log_gen.transpose() * inputs.unigram.asDiagonal());
  }

  GradientPair g;
  g.d_predictor.resize(c, m_dim);
  for (int m = 0; m < m_dim; ++m) {
    const Vector& qm = q.col(m);
    const Vector upstream = dq.col(m);
    // (diag(q) - q q^T) v
    g.d_predictor.col(m) =
        predictor.sharpness * (qm.cwiseProduct(upstream) - qm * qm.dot(upstream));
  }

  g.d_generator = Matrix::Zero(m_dim, c);
  if (lambda != 0.0) {
    const Matrix r = log_gen.array().exp();
    for (int j = 0; j < c; ++j) {
      // sum_m n_m q_m(j) (e_m - r_j)
      const Vector weight = inputs.unigram.cwiseProduct(q.row(j).transpose());
      g.d_generator.col(j) =
          lambda * generator.sharpness * (weight - r.col(j) * weight.sum());
    }
  }
  return g;
}

inline GradientPair analytic_gradient(const PredictorParams& predictor,
                                      const GeneratorParams& generator,
                                      const OneHotSequence& inputs, const TransitionModel& prior,
                                      double lambda) {
  return analytic_gradient(predictor, generator, SequenceStats::from(inputs), prior, lambda);
}

// Counts of (label, input) co-occurrences for the supervised objective.
struct PairStats {
  Matrix counts;  // counts(y, m)
  std::size_t length = 0;

  static PairStats from(const OneHotSequence& inputs, const OneHotSequence& labels) {
    inputs.validate();
    labels.validate();
    require(inputs.size() == labels.size(), "inputs and labels differ in length");
    PairStats p;
    p.counts = Matrix::Zero(labels.dimension, inputs.dimension);
    p.length = inputs.size();
    for (std::size_t t = 0; t < inputs.size(); ++t) p.counts(labels[t], inputs[t]) += 1.0;
    return p;
  }
};

// sum_t ln q_t(y_t); to be maximized.
inline double supervised_cross_entropy(const PredictorParams& predictor, const PairStats& pairs) {
  validate_params(predictor.weights, predictor.sharpness, "predictor");
  require(pairs.counts.rows() == predictor.num_classes() &&
              pairs.counts.cols() == predictor.input_dim(),
          "pair statistics do not match the predictor shape");
  double total = 0.0;
  for (int m = 0; m < predictor.input_dim(); ++m) {
    const Vector logq = detail::log_softmax(predictor.sharpness * predictor.weights.col(m));
    total += pairs.counts.col(m).dot(logq);
  }
  return total;
}

inline double supervised_cross_entropy(const PredictorParams& predictor,
                                       const OneHotSequence& inputs,
                                       const OneHotSequence& labels) {
  return supervised_cross_entropy(predictor, PairStats::from(inputs, labels));
}

inline Matrix supervised_gradient(const PredictorParams& predictor, const PairStats& pairs) {
  const Matrix q = predict_table(predictor);
  Matrix g(q.rows(), q.cols());
  for (Eigen::Index m = 0; m < q.cols(); ++m) {
    g.col(m) = predictor.sharpness * (pairs.counts.col(m) - q.col(m) * pairs.counts.col(m).sum());
  }
  return g;
}

}  // namespace unsup
