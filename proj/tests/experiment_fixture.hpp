#pragma once

#include "mvgcca/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testing_support {

inline mvgcca::SynthConfig tiny_synth() {
  mvgcca::SynthConfig c;
  c.train_size = 300;
  c.validation_size = 150;
  c.test_size = 150;
  c.view_dims = {12, 12};
  c.generator_hidden_width = 12;
  return c;
}

inline mvgcca::ExperimentConfig tiny_experiment() {
  mvgcca::ExperimentConfig c;
  c.synth = tiny_synth();
  c.train.outer_iterations = 3;
  c.train.hidden_width = 8;
  c.methods = {mvgcca::Method::maxvar, mvgcca::Method::proposed};
  c.lambdas = {0.1, 0.5, 0.9};
  c.seeds_per_cell = 2;
  c.eval.kmeans_restarts = 3;
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh empty directory under the system temp directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mvgcca_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Output files expected to be byte-identical across reruns.
inline const char* const kDeterministicOutputs[] = {
    "manifest.json",   "records.csv",   "aggregate.csv",     "correlation.csv",
    "table_acc.csv",   "table_nmi.csv", "table_ari.csv",     "table_cla_acc.csv"};

}  // namespace testing_support
