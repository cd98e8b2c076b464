#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "unsup/diagnostics.hpp"
#include "unsup/synthetic_data.hpp"
#include "unsup/trainer.hpp"

namespace unsup {
namespace {

struct Benchmark {
  TransitionModel prior = default_transition_model();
  SyntheticDataset data = make_dataset(prior, 10000, 0.8, 0);
  EvalPairs eval{data.test_observations(), data.test_labels()};
};

const Benchmark& benchmark() {
  static const Benchmark b;
  return b;
}

TEST(TrainUnsupervised, ZeroLearningRateLeavesParametersUnchanged) {
  const auto& b = benchmark();
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 5;
  cfg.init_seed = 3;
  const auto [pred0, gen0] = initial_params(cfg, 4, 4);
  const auto out = train_unsupervised(cfg, b.data.train_observations(), b.prior);
  EXPECT_EQ(out.predictor.weights, pred0.weights);
  EXPECT_EQ(out.generator.weights, gen0.weights);
}

TEST(TrainUnsupervised, SmallStepsNeverDecreaseTheObjective) {
  const auto& b = benchmark();
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 300;
  cfg.eval_every = 1;
  cfg.lambda = 1.0;
  cfg.init_seed = 7;
  const auto out = train_unsupervised(cfg, b.data.train_observations(), b.prior);
  ASSERT_EQ(out.trace.size(), 301u);
  for (std::size_t i = 1; i < out.trace.size(); ++i) {
    EXPECT_GE(out.trace[i].total - out.trace[i - 1].total, -1e-8) << "epoch " << i;
  }
}

TEST(TrainUnsupervised, TraceLayoutAndDeterminism) {
  const auto& b = benchmark();
  TrainConfig cfg;
  cfg.epochs = 25;
  cfg.eval_every = 10;
  cfg.window_length = 1000;
  cfg.lambda = 30.0;
  const auto a = train_unsupervised(cfg, b.data.train_observations(), b.prior, b.eval);
  const auto c = train_unsupervised(cfg, b.data.train_observations(), b.prior, b.eval);
  ASSERT_EQ(a.trace.size(), 4u);
  EXPECT_EQ(a.trace[0].epoch, 0);
  EXPECT_EQ(a.trace[3].epoch, 25);
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].total, c.trace[i].total);
    EXPECT_EQ(a.trace[i].test_error, c.trace[i].test_error);
    EXPECT_FALSE(std::isnan(a.trace[i].test_error));
    EXPECT_NEAR(a.trace[i].total, a.trace[i].fitness + 30.0 * a.trace[i].regularization,
                1e-9 * std::abs(a.trace[i].total));
  }
  EXPECT_EQ(a.predictor.weights, c.predictor.weights);
  const auto untouched = train_unsupervised(cfg, b.data.train_observations(), b.prior);
  EXPECT_TRUE(std::isnan(untouched.trace.back().test_error));
}

TEST(TrainUnsupervised, ShuffleSeedChangesWindowOrder) {
  const auto& b = benchmark();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.window_length = 500;
  cfg.shuffle_seed = 1;
  const auto a = train_unsupervised(cfg, b.data.train_observations(), b.prior);
  cfg.shuffle_seed = 2;
  const auto c = train_unsupervised(cfg, b.data.train_observations(), b.prior);
  EXPECT_NE(a.predictor.weights, c.predictor.weights);
}

TEST(TrainUnsupervised, RankOneStartStaysRankOneOnBalancedInputs) {
  // Doubly stochastic prior, so its stationary start is uniform.
  Matrix p(4, 4);
  p << 0.1, 0.2, 0.3, 0.4,
       0.4, 0.1, 0.2, 0.3,
       0.3, 0.4, 0.1, 0.2,
       0.2, 0.3, 0.4, 0.1;
  const auto prior = TransitionModel::with_stationary_start(p);
  // Closed cycle: every input has the same number of predecessors and successors.
  OneHotSequence x{{}, 4};
  for (int t = 0; t < 401; ++t) x.indices.push_back(t % 4);
  Vector a(4);
  a << 0.5, -0.2, 0.1, 0.3;
  TrainConfig cfg;
  cfg.epochs = 100;
  auto out = train_unsupervised(cfg, x, prior, PredictorParams{a * Eigen::RowVectorXd::Ones(4), 1.0},
                                GeneratorParams{Matrix::Zero(4, 4), 1.0});
  EXPECT_LT(max_prediction_tv(out.predictor), 1e-6);
  EXPECT_NE(out.predictor.weights.col(0), a);
}

TEST(TrainUnsupervised, PermutationInitUsesInverseForGenerator) {
  TrainConfig cfg;
  cfg.init = PermutationInit{{1, 2, 3, 0}, 2.0};
  const auto [pred, gen] = initial_params(cfg, 4, 4);
  EXPECT_EQ(gen.weights, pred.weights.transpose());
}

TEST(TrainUnsupervised, RejectsBadConfig) {
  const auto& b = benchmark();
  TrainConfig cfg;
  cfg.learning_rate = -1.0;
  EXPECT_THROW(train_unsupervised(cfg, b.data.train_observations(), b.prior), PreconditionError);
  cfg = TrainConfig{};
  cfg.epochs = 0;
  EXPECT_THROW(train_unsupervised(cfg, b.data.train_observations(), b.prior), PreconditionError);
  EXPECT_THROW(train_unsupervised(TrainConfig{}, OneHotSequence{{1}, 4}, b.prior), PreconditionError);
}

TEST(TrainUnsupervised, HugeStepsReportDivergenceWithPartialTrace) {
  const auto& b = benchmark();
  TrainConfig cfg;
  // Logits overflow once the first step lands.
  cfg.init = ZerosInit{};
  cfg.gamma_d = 1e300;
  cfg.learning_rate = 1.0;
  cfg.epochs = 10;
  try {
    train_unsupervised(cfg, b.data.train_observations(), b.prior);
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    ASSERT_FALSE(e.trace().empty());
    EXPECT_EQ(e.trace()[0].epoch, 0);
  }
}

TEST(TrainSupervised, FitsTheBenchmark) {
  const auto& b = benchmark();
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 500;
  const auto out = train_supervised(cfg, b.data.train_observations(), b.data.train_labels(), b.eval);
  EXPECT_EQ(test_error(out.predictor, b.data.train_observations(), b.data.train_labels()), 0.0);
  EXPECT_EQ(out.trace.back().test_error, 0.0);
  EXPECT_EQ(out.trace.back().regularization, 0.0);
  EXPECT_GT(out.trace.back().fitness, out.trace.front().fitness);
}

TEST(TrainSupervised, RandomLabelsReachMajorityRate) {
  const auto& b = benchmark();
  std::mt19937_64 rng(3);
  std::discrete_distribution<int> pick({0.4, 0.3, 0.2, 0.1});
  OneHotSequence labels{{}, 4};
  for (std::size_t t = 0; t < b.data.split; ++t) labels.indices.push_back(pick(rng));
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 500;
  const auto out = train_supervised(cfg, b.data.train_observations(), labels);
  double majority = 0.0;
  for (int v : labels.indices) majority += v == 0;
  majority /= static_cast<double>(labels.size());
  const double accuracy = 1.0 - test_error(out.predictor, b.data.train_observations(), labels);
  EXPECT_NEAR(accuracy, majority, 0.05);
}

TEST(TrainSupervised, SinglePair) {
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 50;
  const auto out = train_supervised(cfg, OneHotSequence{{0}, 4}, OneHotSequence{{1}, 4});
  EXPECT_EQ(argmax_lowest(predict_dist(out.predictor, 0)), 1);
  EXPECT_THROW(train_supervised(cfg, OneHotSequence{{}, 4}, OneHotSequence{{}, 4}), PreconditionError);
}

TEST(TrainSupervised, ObjectiveIsConcaveAlongLines) {
  const auto& b = benchmark();
  const auto pairs = PairStats::from(b.data.train_observations(), b.data.train_labels());
  const LabeledObjective sup{"supervised",
                             [&](const Matrix& w) { return supervised_cross_entropy({w, 1.0}, pairs); }};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_line_endpoint(Matrix::Zero(4, 4), 2.0, 100 + seed);
    const Matrix c = random_line_endpoint(Matrix::Zero(4, 4), 2.0, 200 + seed);
    const auto probe = landscape_line(a, c, uniform_grid(-0.5, 1.5, 0.05), {sup});
    for (double dd : second_differences(probe, 0)) EXPECT_GE(dd, -1e-9);
  }
}

}  // namespace
}  // namespace unsup
