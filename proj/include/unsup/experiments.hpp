#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "unsup/diagnostics.hpp"
#include "unsup/io.hpp"
#include "unsup/linear_models.hpp"
#include "unsup/objective.hpp"
#include "unsup/sequence_prior.hpp"
#include "unsup/synthetic_data.hpp"
#include "unsup/trainer.hpp"

// Wiring of the library into the command-line experiments. Every command
// takes an ExperimentConfig plus directories and returns a process exit code.
namespace unsup::experiments {

namespace fs = std::filesystem;
using io::json;

inline constexpr const char* kPriorFile = "prior.json";
inline constexpr const char* kObservationsFile = "observations.json";
inline constexpr const char* kUnpairedLabelsFile = "unpaired_labels.json";
inline constexpr const char* kAnswerKeyFile = "answer_key.json";
inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kTraceFile = "trace.csv";
inline constexpr const char* kLandscapeFile = "landscape.csv";
inline constexpr const char* kSweepFile = "sweep_noise.csv";
inline constexpr const char* kOracleFile = "oracle.csv";
inline constexpr const char* kEvalFile = "eval.csv";
inline constexpr const char* kOutputDirEnv = "UNSUP_OUTPUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDiverged = 3;

enum class PriorSource { kDataDir, kFile, kInline, kEstimate, kDefault };

struct ExperimentConfig {
  // Prior. kDataDir reads prior.json next to the observations.
  PriorSource prior_source = PriorSource::kDataDir;
  std::string prior_file;
  json prior_inline;
  double smoothing = 1.0;

  // Dataset.
  std::size_t length = kDefaultLength;
  double train_fraction = kDefaultTrainFraction;
  std::uint64_t data_seed = 0;
  std::size_t unpaired_length = kDefaultUnpairedLength;
  std::uint64_t prior_seed = kDefaultPriorSeed;

  TrainConfig train;

  // Experiment grids.
  std::vector<double> lambda_grid{0.0, 1.0, 10.0, 30.0, 100.0};
  std::vector<double> sigma_p_grid{0.0, 0.1, 0.3};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double landscape_lo = -0.5;
  double landscape_hi = 1.5;
  double landscape_step = 0.02;
  double landscape_lambda = 30.0;
  double line_scale = 1.0;
  std::uint64_t line_seed = 0;
  double truth_scale = 5.0;
  int jobs = 1;

  void validate() const {
    train.validate();
    require(length >= 2, "length must be at least 2");
    require(train_fraction > 0.0 && train_fraction <= 1.0, "train-fraction must be in (0, 1]");
    require(!lambda_grid.empty() && !sigma_p_grid.empty() && !seeds.empty(),
            "experiment grids must be nonempty");
    for (std::size_t i = 0; i < seeds.size(); ++i)
      for (std::size_t k = i + 1; k < seeds.size(); ++k)
        require(seeds[i] != seeds[k], "seeds must be distinct");
    require(jobs >= 1, "jobs must be positive");
    require(truth_scale > 0.0, "truth-scale must be positive");
  }

  // Applies the keys present in a JSON object; keys are the long flag names.
  void apply(const json& j) {
    try {
      for (const auto& [key, v] : j.items()) {
        if (key == "prior") {
          if (v.is_object()) {
            prior_source = PriorSource::kInline;
            prior_inline = v;
          } else if (v.get<std::string>() == "estimate-from-unpaired") {
            prior_source = PriorSource::kEstimate;
          } else if (v.get<std::string>() == "default") {
            prior_source = PriorSource::kDefault;
          } else {
            prior_source = PriorSource::kFile;
            prior_file = v.get<std::string>();
          }
        } else if (key == "alpha") smoothing = v.get<double>();
        else if (key == "length") length = v.get<std::size_t>();
        else if (key == "train-fraction") train_fraction = v.get<double>();
        else if (key == "data-seed") data_seed = v.get<std::uint64_t>();
        else if (key == "unpaired-length") unpaired_length = v.get<std::size_t>();
        else if (key == "prior-seed") prior_seed = v.get<std::uint64_t>();
        else if (key == "lambda") train.lambda = v.get<double>();
        else if (key == "lr") train.learning_rate = v.get<double>();
        else if (key == "epochs") train.epochs = v.get<int>();
        else if (key == "window") train.window_length = v.get<std::size_t>();
        else if (key == "gamma-d") train.gamma_d = v.get<double>();
        else if (key == "gamma-g") train.gamma_g = v.get<double>();
        else if (key == "init") {
          const auto name = v.get<std::string>();
          if (name == "zeros") train.init = ZerosInit{};
          else if (name == "gaussian") train.init = GaussianInit{init_sigma()};
          else throw PreconditionError("unknown init scheme '" + name + "'");
        } else if (key == "init-sigma") {
          if (auto* g = std::get_if<GaussianInit>(&train.init)) g->sigma = v.get<double>();
        } else if (key == "init-seed") train.init_seed = v.get<std::uint64_t>();
        else if (key == "shuffle-seed") train.shuffle_seed = v.get<std::uint64_t>();
        else if (key == "eval-every") train.eval_every = v.get<int>();
        else if (key == "lambda-grid") lambda_grid = v.get<std::vector<double>>();
        else if (key == "sigma-p-grid") sigma_p_grid = v.get<std::vector<double>>();
        else if (key == "seeds") seeds = v.get<std::vector<std::uint64_t>>();
        else if (key == "t-min") landscape_lo = v.get<double>();
        else if (key == "t-max") landscape_hi = v.get<double>();
        else if (key == "t-step") landscape_step = v.get<double>();
        else if (key == "landscape-lambda") landscape_lambda = v.get<double>();
        else if (key == "line-scale") line_scale = v.get<double>();
        else if (key == "line-seed") line_seed = v.get<std::uint64_t>();
        else if (key == "truth-scale") truth_scale = v.get<double>();
        else if (key == "jobs") jobs = v.get<int>();
        else throw PreconditionError("unknown configuration key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw PreconditionError(std::string("bad configuration value: ") + e.what());
    }
  }

 private:
  double init_sigma() const {
    if (const auto* g = std::get_if<GaussianInit>(&train.init)) return g->sigma;
    return 0.1;
  }
};

inline fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "unsup_out";
}

// ---------------------------------------------------------------------------
// Loading helpers

inline OneHotSequence load_observations(const fs::path& data_dir) {
  return io::sequence_from_json(io::read_json(data_dir / kObservationsFile), "observations");
}

inline OneHotSequence load_unpaired_labels(const fs::path& data_dir) {
  return io::sequence_from_json(io::read_json(data_dir / kUnpairedLabelsFile), "labels");
}

inline SyntheticDataset load_answer_key(const fs::path& data_dir) {
  const fs::path key = data_dir / kAnswerKeyFile;
  if (!fs::exists(key)) {
    throw io::IoError("answer key " + key.string() +
                      " not found; run the generate command to create it");
  }
  return io::dataset_from_json(io::read_json(key));
}

inline TransitionModel resolve_prior(const ExperimentConfig& cfg, const fs::path& data_dir) {
  switch (cfg.prior_source) {
    case PriorSource::kFile:
      return io::transition_model_from_json(io::read_json(cfg.prior_file));
    case PriorSource::kInline:
      return io::transition_model_from_json(cfg.prior_inline);
    case PriorSource::kEstimate:
      return estimate_transition(load_unpaired_labels(data_dir), cfg.smoothing).model;
    case PriorSource::kDefault:
      return TransitionModel::with_stationary_start(dirichlet_transition_matrix(
          kDefaultNumClasses, kDefaultDirichletConcentration, kDefaultDirichletFloor,
          cfg.prior_seed));
    case PriorSource::kDataDir:
      break;
  }
  return io::transition_model_from_json(io::read_json(data_dir / kPriorFile));
}

inline json model_json(const PredictorParams& predictor, const GeneratorParams* generator) {
  json j{{"predictor", io::to_json(predictor)}};
  if (generator) j["generator"] = io::to_json(*generator);
  return j;
}

inline std::pair<PredictorParams, std::optional<GeneratorParams>> load_model(const fs::path& path) {
  const json j = io::read_json(path);
  const auto p = io::weights_from_json(j.at("predictor"));
  std::optional<GeneratorParams> g;
  if (j.contains("generator")) {
    const auto w = io::weights_from_json(j.at("generator"));
    g = GeneratorParams{w.matrix, w.sharpness};
  }
  return {PredictorParams{p.matrix, p.sharpness}, g};
}

// ---------------------------------------------------------------------------
// Commands

// Writes the learner-facing files (prior, observations, an unpaired label
// corpus) and, separately, the answer key holding the paired labels and the
// hidden permutation.
inline int cmd_generate(const ExperimentConfig& cfg, const fs::path& out_dir,
                        std::ostream& log = std::cout) {
  cfg.validate();
  // There is no data directory yet, so the default source means the benchmark prior.
  ExperimentConfig source = cfg;
  if (source.prior_source == PriorSource::kDataDir) source.prior_source = PriorSource::kDefault;
  require(source.prior_source != PriorSource::kEstimate,
          "generate needs an explicit prior; estimation applies to training");
  const TransitionModel prior = resolve_prior(source, out_dir);
  const SyntheticDataset data = make_dataset(prior, cfg.length, cfg.train_fraction, cfg.data_seed);
  const LearnerView view = learner_view(data, prior, cfg.data_seed, cfg.unpaired_length);

  io::write_json(out_dir / kPriorFile, io::to_json(prior));
  io::write_json(out_dir / kObservationsFile, io::sequence_to_json(view.observations, "observations"));
  io::write_json(out_dir / kUnpairedLabelsFile, io::sequence_to_json(view.unpaired_labels, "labels"));
  io::write_json(out_dir / kAnswerKeyFile, io::to_json(data));
  log << "generated " << cfg.length << " steps (" << data.split << " training observations) in "
      << out_dir.string() << "\n";
  return kExitOk;
}

struct TrainOptions {
  bool supervised = false;
  bool evaluate = false;  // fill the test_error column from the answer key
};

inline int cmd_train(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                     TrainOptions opts, std::ostream& log = std::cout,
                     std::ostream& err = std::cerr) {
  cfg.validate();
  std::optional<EvalPairs> eval;
  std::optional<SyntheticDataset> key;
  if (opts.supervised || opts.evaluate) {
    key = load_answer_key(data_dir);
    eval = EvalPairs{key->test_observations(), key->test_labels()};
  }
  try {
    if (opts.supervised) {
      auto result = train_supervised(cfg.train, key->train_observations(), key->train_labels(), eval);
      io::write_json(out_dir / kModelFile, model_json(result.predictor, nullptr));
      io::write_text_file(out_dir / kTraceFile, io::trace_csv(result.trace));
      log << "supervised training finished; final objective "
          << io::format_number(result.trace.back().total) << "\n";
    } else {
      const OneHotSequence observations = load_observations(data_dir);
      const TransitionModel prior = resolve_prior(cfg, data_dir);
      auto result = train_unsupervised(cfg.train, observations, prior, eval);
      io::write_json(out_dir / kModelFile, model_json(result.predictor, &result.generator));
      io::write_text_file(out_dir / kTraceFile, io::trace_csv(result.trace));
      log << "unsupervised training finished; final objective "
          << io::format_number(result.trace.back().total) << "\n";
    }
  } catch (const TrainingDiverged& e) {
    io::write_text_file(out_dir / kTraceFile, io::trace_csv(e.trace()));
    err << "training diverged: " << e.what() << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

inline int cmd_eval(const fs::path& data_dir, const fs::path& model_path, const fs::path& out_dir,
                    std::ostream& log = std::cout) {
  const SyntheticDataset key = load_answer_key(data_dir);
  const auto [predictor, generator] = load_model(model_path);
  const double error = test_error(predictor, key.test_observations(), key.test_labels());
  const auto sv = singular_values(predictor.weights);
  std::string csv = "metric,value\n";
  csv += "test_error," + io::format_number(error) + "\n";
  csv += "rank1_score," + io::format_number(sv[0] > 0.0 ? sv[1] / sv[0] : 0.0) + "\n";
  csv += "max_prediction_tv," + io::format_number(max_prediction_tv(predictor)) + "\n";
  for (std::size_t k = 0; k < sv.size(); ++k) {
    csv += "singular_value_" + std::to_string(k) + "," + io::format_number(sv[k]) + "\n";
  }
  io::write_text_file(out_dir / kEvalFile, csv);
  log << "test error " << io::format_number(error) << "\n";
  return kExitOk;
}

inline std::string lambda_label(double lambda) { return "unsup_lambda=" + io::format_number(lambda); }

// Curves along t * truth + (1 - t) * endpoint: the supervised objective on
// the training pairs and the unsupervised objective at lambda = 0 and at the
// configured lambda, with the generator held fixed.
inline int cmd_landscape(const ExperimentConfig& cfg, const fs::path& data_dir,
                         const std::optional<fs::path>& endpoint_model, const fs::path& out_dir,
                         std::ostream& log = std::cout) {
  cfg.validate();
  const SyntheticDataset key = load_answer_key(data_dir);
  const TransitionModel prior = resolve_prior(cfg, data_dir);
  const Matrix truth = key.ground_truth_predictor(cfg.truth_scale);

  Matrix endpoint;
  GeneratorParams generator{key.ground_truth_generator(cfg.truth_scale), cfg.train.gamma_g};
  if (endpoint_model) {
    auto [p, g] = load_model(*endpoint_model);
    endpoint = p.weights;
    if (g) generator = *g;
  } else {
    endpoint = random_line_endpoint(truth, cfg.line_scale, cfg.line_seed);
  }

  const SequenceStats stats = SequenceStats::from(key.train_observations());
  const PairStats pairs = PairStats::from(key.train_observations(), key.train_labels());
  const double gamma_d = cfg.train.gamma_d;
  std::vector<LabeledObjective> curves;
  curves.push_back({"supervised", [&](const Matrix& w) {
                      return supervised_cross_entropy(PredictorParams{w, gamma_d}, pairs);
                    }});
  std::vector<double> lambdas{0.0};
  if (cfg.landscape_lambda != 0.0) lambdas.push_back(cfg.landscape_lambda);
  for (double lambda : lambdas) {
    curves.push_back({lambda_label(lambda), [&, lambda](const Matrix& w) {
                        return unsupervised_objective(PredictorParams{w, gamma_d}, generator,
                                                      stats, prior, lambda)
                            .total;
                      }});
  }
  const LandscapeProbe probe = landscape_line(
      truth, endpoint, uniform_grid(cfg.landscape_lo, cfg.landscape_hi, cfg.landscape_step), curves);
  io::write_text_file(out_dir / kLandscapeFile, io::landscape_csv(probe));
  log << "landscape with " << probe.grid.size() << " points written to "
      << (out_dir / kLandscapeFile).string() << "\n";
  return kExitOk;
}

struct SweepCell {
  double sigma_p = 0.0;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double test_error = std::numeric_limits<double>::quiet_NaN();
  double rank1 = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string failure;
};

inline constexpr std::uint64_t kPerturbStream = 0x5eed;

// One training run per (sigma_p, lambda, seed). The seed sets both the
// initialization and the perturbation noise; sigma_p = 0 uses the exact prior.
inline std::vector<SweepCell> run_noise_sweep(const ExperimentConfig& cfg,
                                              const TransitionModel& prior,
                                              const OneHotSequence& observations,
                                              const EvalPairs& eval) {
  std::vector<SweepCell> cells;
  for (double s : cfg.sigma_p_grid)
    for (double l : cfg.lambda_grid)
      for (std::uint64_t seed : cfg.seeds) {
        SweepCell cell;
        cell.sigma_p = s;
        cell.lambda = l;
        cell.seed = seed;
        cells.push_back(cell);
      }

  auto run_cell = [&](SweepCell& cell) {
    try {
      const TransitionModel used =
          cell.sigma_p == 0.0
              ? prior
              : perturb_transition(prior, cell.sigma_p, derive_seed(cell.seed, kPerturbStream));
      TrainConfig tc = cfg.train;
      tc.lambda = cell.lambda;
      tc.init_seed = cell.seed;
      tc.eval_every = tc.epochs;
      const auto result = train_unsupervised(tc, observations, used);
      cell.test_error = test_error(result.predictor, eval.observations, eval.labels);
      cell.rank1 = detail::safe_rank1(result.predictor.weights);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.failure = e.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(cells[i]);
  };
  const auto workers = static_cast<std::size_t>(std::max(1, cfg.jobs));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
  std::string out = "sigma_p,lambda,seed,test_error,rank1_score\n";
  for (const auto& c : cells) {
    out += io::format_number(c.sigma_p) + ',' + io::format_number(c.lambda) + ',' +
           std::to_string(c.seed) + ',' + io::format_number(c.test_error) + ',' +
           io::format_number(c.rank1) + '\n';
  }
  return out;
}

inline int cmd_sweep_noise(const ExperimentConfig& cfg, const fs::path& data_dir,
                           const fs::path& out_dir, std::ostream& log = std::cout,
                           std::ostream& err = std::cerr) {
  cfg.validate();
  const SyntheticDataset key = load_answer_key(data_dir);
  const TransitionModel prior = resolve_prior(cfg, data_dir);
  const OneHotSequence observations = load_observations(data_dir);
  const auto cells = run_noise_sweep(cfg, prior, observations,
                                     EvalPairs{key.test_observations(), key.test_labels()});
  std::size_t failed = 0;
  for (const auto& c : cells) {
    if (c.failed) {
      ++failed;
      err << "cell sigma_p=" << c.sigma_p << " lambda=" << c.lambda << " seed=" << c.seed
          << " failed: " << c.failure << "\n";
    }
  }
  io::write_text_file(out_dir / kSweepFile, sweep_csv(cells));
  log << cells.size() << " sweep cells written (" << failed << " failed)\n";
  return kExitOk;
}

inline int cmd_oracle(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                      std::ostream& log = std::cout) {
  const TransitionModel prior = resolve_prior(cfg, data_dir);
  require(prior.num_classes() <= kOracleMaxClasses,
          "permutation oracle supports at most " + std::to_string(kOracleMaxClasses) + " classes");
  const OneHotSequence observations = load_observations(data_dir);
  const OracleResult oracle = permutation_oracle(observations, prior);
  io::write_text_file(out_dir / kOracleFile, io::oracle_csv(oracle));
  log << "best permutation " << one_line_notation(oracle.best_permutation()) << " margin "
      << io::format_number(oracle.margin) << "\n";
  if (!oracle.identifiable()) log << "non-identifiable: the best score is not unique\n";
  if (fs::exists(data_dir / kAnswerKeyFile)) {
    const SyntheticDataset key = load_answer_key(data_dir);
    const bool match = oracle.best_permutation() == invert_permutation(key.permutation);
    log << "matches inverse data permutation: " << (match ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

}  // namespace unsup::experiments
