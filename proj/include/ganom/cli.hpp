// Copyright 2026 The ganom authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ganom/dataset.hpp"
#include "ganom/optflow.hpp"
#include "ganom/trainer.hpp"

namespace ganom::cli {

// Parsed configuration file shared by the pipeline stages.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  double lambda = 2.0;
  std::string extractor = "testdouble";
  bool test_dropout = true;
  std::optional<std::filesystem::path> dataset_root;
  std::optional<data::SyntheticSpec> synthetic;
  flow::FlowConfig flow;
  train::TrainConfig train_f2o;
  train::TrainConfig train_o2f;
};

RunConfig load_run_config(const std::filesystem::path& path);

// Dataset named by the config: a UCSD-layout tree or an in-memory
// synthetic corpus.
data::DatasetSplit load_dataset(const RunConfig& cfg);

// Entry point used by the binary and the tests. Returns the process exit
// code; diagnostics go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace ganom::cli
