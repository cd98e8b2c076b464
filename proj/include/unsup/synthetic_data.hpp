#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>

#include "unsup/core.hpp"
#include "unsup/linear_models.hpp"
#include "unsup/sequence_prior.hpp"

namespace unsup {

inline constexpr std::size_t kDefaultLength = 10000;
inline constexpr double kDefaultTrainFraction = 0.8;
inline constexpr std::size_t kDefaultUnpairedLength = 10000;

// Sub-seed streams derived from a dataset seed.
enum class SeedStream : std::uint64_t { kLabels = 1, kPermutation = 2, kUnpaired = 3 };

inline std::uint64_t stream_seed(std::uint64_t seed, SeedStream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

// Fisher-Yates shuffle of the identity.
inline Permutation random_permutation(int size, std::uint64_t seed) {
  require(size >= 1, "permutation size must be at least 1");
  Permutation p(static_cast<std::size_t>(size));
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (int i = size - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(pick(rng))]);
  }
  return p;
}

// Labels y_t from the Markov prior and observations x_t = Q y_t, where the
// permutation maps a label index to its observation index.
struct SyntheticDataset {
  OneHotSequence labels;
  OneHotSequence observations;
  Permutation permutation;
  std::size_t split = 0;

  void validate() const {
    labels.validate();
    observations.validate();
    require(is_bijection(permutation), "dataset permutation is not a bijection");
    require(static_cast<int>(permutation.size()) == labels.dimension &&
                observations.dimension == labels.dimension,
            "dataset dimensions disagree");
    require(labels.size() == observations.size(), "labels and observations differ in length");
    require(split <= labels.size(), "split point beyond the sequence end");
    for (std::size_t t = 0; t < labels.size(); ++t) {
      require(observations[t] == permutation[static_cast<std::size_t>(labels[t])],
              "observation " + std::to_string(t) + " is not the permuted label");
    }
  }

  OneHotSequence train_observations() const { return observations.slice(0, split); }
  OneHotSequence train_labels() const { return labels.slice(0, split); }
  OneHotSequence test_observations() const { return observations.slice(split, observations.size()); }
  OneHotSequence test_labels() const { return labels.slice(split, labels.size()); }

  // The predictor that inverts the channel: W(sigma^-1(m), m) = scale.
  Matrix ground_truth_predictor(double scale) const {
    return scale * permutation_matrix(invert_permutation(permutation));
  }
  // The generator that reproduces the channel: W(sigma(j), j) = scale.
  Matrix ground_truth_generator(double scale) const {
    return scale * permutation_matrix(permutation);
  }
};

inline SyntheticDataset make_dataset(const TransitionModel& prior, std::size_t length,
                                     double train_fraction, std::uint64_t seed,
                                     std::optional<Permutation> forced_permutation = std::nullopt) {
  require(length >= 2, "dataset length must be at least 2");
  require(train_fraction > 0.0 && train_fraction <= 1.0, "train fraction must be in (0, 1]");
  SyntheticDataset d;
  d.labels = sample_chain(prior, length, stream_seed(seed, SeedStream::kLabels));
  d.permutation = forced_permutation
                      ? *forced_permutation
                      : random_permutation(prior.num_classes(),
                                           stream_seed(seed, SeedStream::kPermutation));
  require(static_cast<int>(d.permutation.size()) == prior.num_classes() &&
              is_bijection(d.permutation),
          "forced permutation is not a bijection of the label set");
  d.observations.dimension = prior.num_classes();
  d.observations.indices.reserve(length);
  for (int y : d.labels.indices) d.observations.indices.push_back(d.permutation[static_cast<std::size_t>(y)]);
  d.split = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(length)));
  return d;
}

// What an unsupervised learner may see: observations and an unrelated label
// corpus drawn from the same prior.
struct LearnerView {
  OneHotSequence observations;
  OneHotSequence unpaired_labels;
};

inline LearnerView learner_view(const SyntheticDataset& dataset, const TransitionModel& prior,
                                std::uint64_t seed,
                                std::size_t unpaired_length = kDefaultUnpairedLength) {
  return {dataset.train_observations(),
          sample_chain(prior, unpaired_length, stream_seed(seed, SeedStream::kUnpaired))};
}

// Held-out pairs, for scoring only.
struct EvaluationView {
  OneHotSequence observations;
  OneHotSequence labels;
};

inline EvaluationView evaluation_view(const SyntheticDataset& dataset) {
  return {dataset.test_observations(), dataset.test_labels()};
}

}  // namespace unsup
