// Command-line front end for the unpaired-sequence learning experiments.
//
//   unsup generate     synthetic benchmark (learner files + answer key)
//   unsup train        unsupervised (default) or --supervised training
//   unsup eval         test error and singular values of a trained model
//   unsup landscape    objective curves along a line through the ground truth
//   unsup sweep-noise  test error under perturbed priors
//   unsup oracle       exhaustive search over hard permutation classifiers
//
// Precedence: built-in defaults < --config file < individual flags.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "unsup/experiments.hpp"

namespace {

namespace fs = std::filesystem;
namespace ex = unsup::experiments;
using unsup::io::json;

// Registers --name so that, when given, its value lands in overrides[name].
template <typename T>
void flag(CLI::App* app, json& overrides, const std::string& name, const std::string& help) {
  auto* opt = app->add_option_function<T>(
      "--" + name, [&overrides, name](const T& v) { overrides[name] = v; }, help);
  if constexpr (std::is_same_v<T, std::vector<double>> ||
                std::is_same_v<T, std::vector<std::uint64_t>>) {
    opt->delimiter(',');
  }
}

void training_flags(CLI::App* app, json& o) {
  flag<double>(app, o, "lambda", "regularization weight");
  flag<double>(app, o, "lr", "learning rate (per position)");
  flag<int>(app, o, "epochs", "number of epochs");
  flag<std::size_t>(app, o, "window", "window length; 0 means full batch");
  flag<double>(app, o, "gamma-d", "predictor softmax sharpness");
  flag<double>(app, o, "gamma-g", "generator softmax sharpness");
  flag<std::string>(app, o, "init", "initialization: gaussian | zeros");
  flag<double>(app, o, "init-sigma", "standard deviation of the gaussian init");
  flag<std::uint64_t>(app, o, "init-seed", "initialization seed");
  flag<std::uint64_t>(app, o, "shuffle-seed", "window order seed");
  flag<int>(app, o, "eval-every", "trace recording interval in epochs");
}

void prior_flags(CLI::App* app, json& o) {
  flag<std::string>(app, o, "prior",
                    "prior JSON file, 'default', or 'estimate-from-unpaired' (default: "
                    "prior.json in the data directory)");
  flag<double>(app, o, "alpha", "smoothing when estimating the prior");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning a classifier from unpaired input and output sequences"};
  app.require_subcommand(1);
  app.fallthrough();  // --out and --config may follow the subcommand

  std::string config_path;
  fs::path out_dir = ex::default_output_dir();
  fs::path data_dir = ".";
  json overrides = json::object();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory (default: $UNSUP_OUTPUT_DIR or ./unsup_out)");

  auto* generate = app.add_subcommand("generate", "generate the synthetic benchmark");
  prior_flags(generate, overrides);
  flag<std::size_t>(generate, overrides, "length", "sequence length");
  flag<double>(generate, overrides, "train-fraction", "fraction of steps used for training");
  flag<std::uint64_t>(generate, overrides, "data-seed", "dataset seed");
  flag<std::size_t>(generate, overrides, "unpaired-length", "length of the unpaired label corpus");
  flag<std::uint64_t>(generate, overrides, "prior-seed", "seed of the default Dirichlet prior");

  ex::TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "train a predictor");
  train->add_option("--data", data_dir, "directory written by generate")->required();
  train->add_flag("--supervised", train_opts.supervised, "train on the paired answer key");
  train->add_flag("--evaluate", train_opts.evaluate, "record test error from the answer key");
  prior_flags(train, overrides);
  training_flags(train, overrides);

  fs::path model_path;
  auto* eval = app.add_subcommand("eval", "score a trained model on held-out pairs");
  eval->add_option("--data", data_dir, "directory written by generate")->required();
  eval->add_option("--model", model_path, "model.json written by train")->required();

  std::optional<fs::path> endpoint;
  auto* landscape = app.add_subcommand("landscape", "objective curves through the ground truth");
  landscape->add_option("--data", data_dir, "directory written by generate")->required();
  landscape->add_option("--endpoint", endpoint, "model.json to use as the other endpoint");
  prior_flags(landscape, overrides);
  flag<double>(landscape, overrides, "t-min", "first line parameter");
  flag<double>(landscape, overrides, "t-max", "last line parameter");
  flag<double>(landscape, overrides, "t-step", "line parameter step");
  flag<double>(landscape, overrides, "landscape-lambda", "lambda of the regularized curve");
  flag<double>(landscape, overrides, "line-scale", "scale of the random endpoint");
  flag<std::uint64_t>(landscape, overrides, "line-seed", "seed of the random endpoint");
  flag<double>(landscape, overrides, "truth-scale", "scale of the ground-truth permutation");
  flag<double>(landscape, overrides, "gamma-d", "predictor softmax sharpness");
  flag<double>(landscape, overrides, "gamma-g", "generator softmax sharpness");

  auto* sweep = app.add_subcommand("sweep-noise", "test error under perturbed priors");
  sweep->add_option("--data", data_dir, "directory written by generate")->required();
  prior_flags(sweep, overrides);
  training_flags(sweep, overrides);
  flag<std::vector<double>>(sweep, overrides, "sigma-p-grid", "comma-separated noise levels");
  flag<std::vector<double>>(sweep, overrides, "lambda-grid", "comma-separated lambdas");
  flag<std::vector<std::uint64_t>>(sweep, overrides, "seeds", "comma-separated seeds");
  flag<int>(sweep, overrides, "jobs", "concurrent training runs");

  auto* oracle = app.add_subcommand("oracle", "score every permutation classifier");
  oracle->add_option("--data", data_dir, "directory written by generate")->required();
  prior_flags(oracle, overrides);

  CLI11_PARSE(app, argc, argv);

  try {
    ex::ExperimentConfig cfg;
    if (!config_path.empty()) cfg.apply(unsup::io::read_json(config_path));
    cfg.apply(overrides);

    if (*generate) return ex::cmd_generate(cfg, out_dir);
    if (*train) return ex::cmd_train(cfg, data_dir, out_dir, train_opts);
    if (*eval) return ex::cmd_eval(data_dir, model_path, out_dir);
    if (*landscape) return ex::cmd_landscape(cfg, data_dir, endpoint, out_dir);
    if (*sweep) return ex::cmd_sweep_noise(cfg, data_dir, out_dir);
    if (*oracle) return ex::cmd_oracle(cfg, data_dir, out_dir);
  } catch (const unsup::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ex::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return ex::kExitUsage;
}
