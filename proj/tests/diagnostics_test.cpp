#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "unsup/diagnostics.hpp"
#include "unsup/objective.hpp"
#include "unsup/synthetic_data.hpp"

namespace unsup {
namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

TEST(SingularValues, Identity) {
  for (double s : singular_values(Matrix::Identity(4, 4))) EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(SingularValues, OuterProduct) {
  Vector a(4), b(4);
  a << 1, 2, 3, 4;
  b << 4, 3, 2, 1;
  const auto sv = singular_values(a * b.transpose());
  EXPECT_NEAR(sv[0], a.norm() * b.norm(), 1e-10);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(sv[k], 0.0, 1e-10);
}

TEST(SingularValues, AgreeWithEigenAndFrobeniusNorm) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(2 + trial % 5, 2 + (trial / 5) % 5, rng, 3.0);
    const auto sv = singular_values(a);
    double sumsq = 0.0;
    for (double s : sv) sumsq += s * s;
    EXPECT_NEAR(sumsq, a.squaredNorm(), 1e-9 * std::max(1.0, a.squaredNorm()));
    const Vector ref = Eigen::JacobiSVD<Matrix>(a).singularValues();
    ASSERT_EQ(static_cast<Eigen::Index>(sv.size()), ref.size());
    for (std::size_t k = 0; k < sv.size(); ++k) EXPECT_NEAR(sv[k], ref(static_cast<Eigen::Index>(k)), 1e-10);
    for (std::size_t k = 1; k < sv.size(); ++k) EXPECT_GE(sv[k - 1], sv[k]);
  }
}

TEST(SingularValues, InvariantToRowAndColumnPermutations) {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(4, 4, rng);
  const Matrix p = permutation_matrix({2, 0, 3, 1});
  const auto base = singular_values(a);
  const auto perm = singular_values(p * a * p.transpose());
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(base[k], perm[k], 1e-12);
}

TEST(Rank1Score, KnownCases) {
  Vector a(3), b(4);
  a << 1, -2, 0.5;
  b << 0.3, 1, 2, -1;
  EXPECT_NEAR(rank1_score(a * b.transpose()), 0.0, 1e-12);
  EXPECT_NEAR(rank1_score(Matrix::Identity(4, 4)), 1.0, 1e-12);
  EXPECT_NEAR(rank1_score(5.0 * permutation_matrix({1, 3, 0, 2})), 1.0, 1e-12);
  EXPECT_THROW(rank1_score(Matrix::Zero(3, 3)), PreconditionError);
}

TEST(TestError, PerfectConstantAndWrong) {
  const auto d = make_dataset(default_transition_model(), 2000, 0.5, 3);
  const auto x = d.test_observations();
  const auto y = d.test_labels();
  EXPECT_EQ(test_error({d.ground_truth_predictor(1.0), 1.0}, x, y), 0.0);

  // Every input predicts class 2.
  Matrix w = Matrix::Zero(4, 4);
  w.row(2).setConstant(1.0);
  double freq2 = 0.0;
  for (int v : y.indices) freq2 += v == 2;
  EXPECT_NEAR(test_error({w, 1.0}, x, y), 1.0 - freq2 / static_cast<double>(y.size()), 1e-15);

  // A derangement composed with the truth is wrong everywhere.
  const Matrix shift = permutation_matrix({1, 2, 3, 0});
  EXPECT_EQ(test_error({shift * d.ground_truth_predictor(1.0), 1.0}, x, y), 1.0);
}

TEST(TestError, TiesGoToLowestIndexAndEmptyIsRejected) {
  const OneHotSequence x{{0, 1, 2}, 3};
  EXPECT_NEAR(test_error({Matrix::Zero(3, 3), 1.0}, x, OneHotSequence{{0, 0, 1}, 3}), 1.0 / 3.0, 1e-15);
  EXPECT_THROW(test_error({Matrix::Zero(3, 3), 1.0}, OneHotSequence{{}, 3}, OneHotSequence{{}, 3}),
               PreconditionError);
}

TEST(MaxPredictionTv, RankOneIsZero) {
  Vector a(4);
  a << 0.3, -1, 2, 0;
  EXPECT_LT(max_prediction_tv({a * Eigen::RowVectorXd::Ones(4), 1.0}), 1e-15);
  EXPECT_GT(max_prediction_tv({10.0 * Matrix::Identity(4, 4), 1.0}), 0.99);
}

TEST(UniformGrid, EndpointsExact) {
  const auto g = uniform_grid(-0.5, 1.5, 0.02);
  EXPECT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), -0.5);
  EXPECT_EQ(g.back(), 1.5);
  EXPECT_NE(std::find(g.begin(), g.end(), 0.0), g.end());
  EXPECT_NE(std::find(g.begin(), g.end(), 1.0), g.end());
}

TEST(LandscapeLine, EndpointsEvaluateExactly) {
  std::mt19937_64 rng(4);
  const Matrix a = random_matrix(4, 4, rng);
  const Matrix b = random_matrix(4, 4, rng);
  const auto f = [](const Matrix& w) { return std::sin(w.sum()) + w.squaredNorm(); };
  const auto probe = landscape_line(a, b, uniform_grid(-0.5, 1.5, 0.25), {{"f", f}});
  for (std::size_t i = 0; i < probe.grid.size(); ++i) {
    if (probe.grid[i] == 1.0) {
      EXPECT_EQ(probe.values[i][0], -f(a));
    }
    if (probe.grid[i] == 0.0) {
      EXPECT_EQ(probe.values[i][0], -f(b));
    }
  }
  EXPECT_THROW(landscape_line(a, Matrix::Zero(3, 4), {0.0}, {{"f", f}}), PreconditionError);
  EXPECT_THROW(landscape_line(a, b, {0.0, 0.0}, {{"f", f}}), PreconditionError);
}

TEST(LandscapeLine, SupervisedCurveIsConvex) {
  const auto d = make_dataset(default_transition_model(), 3000, 0.8, 6);
  const auto pairs = PairStats::from(d.train_observations(), d.train_labels());
  const LabeledObjective sup{"supervised",
                             [&](const Matrix& w) { return supervised_cross_entropy({w, 1.0}, pairs); }};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix truth = d.ground_truth_predictor(5.0);
    const auto probe =
        landscape_line(truth, random_line_endpoint(truth, 3.0, seed), uniform_grid(-0.5, 1.5, 0.02), {sup});
    for (double dd : second_differences(probe, 0)) EXPECT_GE(dd, -1e-9);
  }
}

TEST(RandomLineEndpoint, ScaleBehaviour) {
  std::mt19937_64 rng(5);
  const Matrix anchor = random_matrix(4, 4, rng);
  EXPECT_EQ(random_line_endpoint(anchor, 0.0, 3), anchor);
  EXPECT_EQ(random_line_endpoint(anchor, 1.0, 3), random_line_endpoint(anchor, 1.0, 3));
  const Matrix d1 = random_line_endpoint(anchor, 1.0, 3) - anchor;
  const Matrix d2 = random_line_endpoint(anchor, 2.0, 3) - anchor;
  EXPECT_LT((d2 - 2.0 * d1).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SecondDifferences, Quadratic) {
  LandscapeProbe probe;
  probe.labels = {"q"};
  for (int i = 0; i < 5; ++i) {
    probe.grid.push_back(i);
    probe.values.push_back({static_cast<double>(i * i)});
  }
  for (double dd : second_differences(probe, 0)) EXPECT_EQ(dd, 2.0);
}

TEST(PermutationOracle, CyclePriorIdentity) {
  Matrix p = Matrix::Zero(4, 4);
  p(1, 0) = p(2, 1) = p(3, 2) = p(0, 3) = 1.0;
  const TransitionModel prior(p, Vector::Unit(4, 0));
  const auto d = make_dataset(prior, 20, 1.0, 0, Permutation{0, 1, 2, 3});
  const auto result = permutation_oracle(d.observations, prior);
  EXPECT_EQ(result.permutations.size(), 24u);
  EXPECT_EQ(result.best_permutation(), (Permutation{0, 1, 2, 3}));
  EXPECT_TRUE(result.identifiable());
}

TEST(PermutationOracle, RecoversInverseOnBenchmark) {
  const auto prior = default_transition_model();
  const auto d = make_dataset(prior, 5000, 1.0, 0);
  const auto result = permutation_oracle(d.observations, prior);
  EXPECT_EQ(result.best_permutation(), invert_permutation(d.permutation));
  EXPECT_GT(result.margin, 0.0);
}

TEST(PermutationOracle, UniformPriorIsNonIdentifiable) {
  const TransitionModel prior(Matrix::Constant(4, 4, 0.25), Vector::Constant(4, 0.25));
  const auto d = make_dataset(prior, 500, 1.0, 1);
  const auto result = permutation_oracle(d.observations, prior);
  for (double s : result.scores) EXPECT_NEAR(s, result.scores[0], 1e-9);
  EXPECT_FALSE(result.identifiable());
}

TEST(PermutationOracle, ScoresEqualSaturatedFitness) {
  const auto prior = default_transition_model();
  const auto d = make_dataset(prior, 800, 1.0, 2);
  const auto result = permutation_oracle(d.observations, prior);
  for (std::size_t k = 0; k < result.permutations.size(); k += 5) {
    const PredictorParams saturated{60.0 * permutation_matrix(result.permutations[k]), 1.0};
    EXPECT_NEAR(result.scores[k], fitness_term(saturated, d.observations, prior), 1e-9);
  }
}

TEST(PermutationOracle, PositiveMarginForDirichletPriors) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto prior =
        TransitionModel::with_stationary_start(dirichlet_transition_matrix(4, 0.5, 0.01, seed));
    const auto d = make_dataset(prior, 3000, 1.0, seed);
    EXPECT_GT(permutation_oracle(d.observations, prior).margin, 0.0);
  }
}

TEST(PermutationOracle, RejectsTooManyClasses) {
  const TransitionModel prior(Matrix::Constant(9, 9, 1.0 / 9), Vector::Constant(9, 1.0 / 9));
  EXPECT_THROW(permutation_oracle(OneHotSequence{{0, 1}, 9}, prior), PreconditionError);
}

TEST(OneLineNotation, Format) { EXPECT_EQ(one_line_notation({2, 0, 3, 1}), "2,0,3,1"); }

}  // namespace
}  // namespace unsup
