#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "unsup/core.hpp"
#include "unsup/diagnostics.hpp"
#include "unsup/linear_models.hpp"
#include "unsup/sequence_prior.hpp"
#include "unsup/synthetic_data.hpp"
#include "unsup/trainer.hpp"

namespace unsup::io {

using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every file read goes through read_text_file and is recorded here, so tests
// can check which inputs a command consumed.
class FileAccessLog {
 public:
  static FileAccessLog& instance() {
    static FileAccessLog log;
    return log;
  }
  void record(const std::filesystem::path& p) {
    std::lock_guard lock(mu_);
    reads_.push_back(std::filesystem::weakly_canonical(p).string());
  }
  std::vector<std::string> reads() const {
    std::lock_guard lock(mu_);
    return reads_;
  }
  bool was_read(const std::filesystem::path& p) const {
    const auto key = std::filesystem::weakly_canonical(p).string();
    std::lock_guard lock(mu_);
    for (const auto& r : reads_)
      if (r == key) return true;
    return false;
  }
  void clear() {
    std::lock_guard lock(mu_);
    reads_.clear();
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> reads_;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  FileAccessLog::instance().record(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// Shortest text that round-trips the double; "nan" for NaN.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// JSON documents

inline json to_json(const TransitionModel& model) {
  const int c = model.num_classes();
  json rows = json::array();
  for (int i = 0; i < c; ++i) {
    json row = json::array();
    for (int j = 0; j < c; ++j) row.push_back(model.matrix()(i, j));
    rows.push_back(row);
  }
  json init = json::array();
  for (int i = 0; i < c; ++i) init.push_back(model.initial_dist()(i));
  return {{"num_classes", c}, {"matrix", rows}, {"initial_dist", init}};
}

// A missing initial_dist defaults to the stationary distribution.
inline TransitionModel transition_model_from_json(const json& j) {
  try {
    const int c = j.at("num_classes").get<int>();
    require(c >= 1, "num_classes must be positive");
    const auto& rows = j.at("matrix");
    require(rows.is_array() && static_cast<int>(rows.size()) == c, "matrix must have C rows");
    Matrix m(c, c);
    for (int i = 0; i < c; ++i) {
      require(rows[static_cast<std::size_t>(i)].size() == static_cast<std::size_t>(c),
              "matrix row " + std::to_string(i) + " must have C entries");
      for (int k = 0; k < c; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    if (!j.contains("initial_dist")) return TransitionModel::with_stationary_start(std::move(m));
    const auto init = j.at("initial_dist").get<std::vector<double>>();
    require(static_cast<int>(init.size()) == c, "initial_dist must have C entries");
    return TransitionModel(std::move(m), Eigen::Map<const Vector>(init.data(), c));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed transition model: ") + e.what());
  }
}

inline json weights_to_json(const Matrix& w, double sharpness) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index k = 0; k < w.cols(); ++k) data.push_back(w(i, k));
  return {{"rows", w.rows()}, {"cols", w.cols()}, {"data", data}, {"sharpness", sharpness}};
}

struct Weights {
  Matrix matrix;
  double sharpness = 1.0;
};

inline Weights weights_from_json(const json& j) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    require(rows > 0 && cols > 0 && static_cast<Eigen::Index>(data.size()) == rows * cols,
            "weight data length does not match rows x cols");
    Weights w;
    w.matrix.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index k = 0; k < cols; ++k) w.matrix(i, k) = data[static_cast<std::size_t>(i * cols + k)];
    w.sharpness = j.value("sharpness", 1.0);
    return w;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed weight matrix: ") + e.what());
  }
}

inline json to_json(const PredictorParams& p) { return weights_to_json(p.weights, p.sharpness); }
inline json to_json(const GeneratorParams& g) { return weights_to_json(g.weights, g.sharpness); }

inline json to_json(const SyntheticDataset& d) {
  return {{"labels", d.labels.indices},
          {"observations", d.observations.indices},
          {"permutation", d.permutation},
          {"split", d.split}};
}

inline SyntheticDataset dataset_from_json(const json& j) {
  try {
    SyntheticDataset d;
    d.permutation = j.at("permutation").get<Permutation>();
    const int c = static_cast<int>(d.permutation.size());
    d.labels = {j.at("labels").get<std::vector<int>>(), c};
    d.observations = {j.at("observations").get<std::vector<int>>(), c};
    d.split = j.at("split").get<std::size_t>();
    d.validate();
    return d;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed dataset: ") + e.what());
  }
}

inline json sequence_to_json(const OneHotSequence& s, const char* key) {
  return {{key, s.indices}, {"dimension", s.dimension}};
}

inline OneHotSequence sequence_from_json(const json& j, const char* key) {
  try {
    OneHotSequence s{j.at(key).get<std::vector<int>>(), j.at("dimension").get<int>()};
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed sequence file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// CSV tables

inline std::string trace_csv(const TrainTrace& trace) {
  std::string out = "epoch,fitness,regularization,total,test_error,rank1_score,grad_norm\n";
  for (const auto& r : trace) {
    out += std::to_string(r.epoch) + ',' + format_number(r.fitness) + ',' +
           format_number(r.regularization) + ',' + format_number(r.total) + ',' +
           format_number(r.test_error) + ',' + format_number(r.rank1_score) + ',' +
           format_number(r.grad_norm) + '\n';
  }
  return out;
}

inline std::string landscape_csv(const LandscapeProbe& probe) {
  std::string out = "t";
  for (const auto& l : probe.labels) out += ',' + l;
  out += '\n';
  for (std::size_t i = 0; i < probe.grid.size(); ++i) {
    out += format_number(probe.grid[i]);
    for (double v : probe.values[i]) out += ',' + format_number(v);
    out += '\n';
  }
  return out;
}

inline std::string oracle_csv(const OracleResult& oracle) {
  std::string out = "permutation,score\n";
  for (std::size_t k = 0; k < oracle.permutations.size(); ++k) {
    out += '"' + one_line_notation(oracle.permutations[k]) + "\"," +
           format_number(oracle.scores[k]) + '\n';
  }
  return out;
}

}  // namespace unsup::io
