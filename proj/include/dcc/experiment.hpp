// Copyright 2026 The dcc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dcc/classifier.hpp"
#include "dcc/dataset.hpp"
#include "dcc/marginals.hpp"

namespace dcc {

enum class ExperimentKind { synthetic, pima };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::synthetic;
  std::uint64_t seed = 42;
  int n_seeds = 1;
  std::vector<MarginalMode> modes{MarginalMode::oracle_normal, MarginalMode::pooled, MarginalMode::per_class};

  double rho = 0.995;
  int n_per_class = 2000;
  std::filesystem::path input_csv = "data/pima_diabetes.csv";
  double winsor_q = 0.005;

  DccConfig dcc;  // mode and seed are filled per run
  double gnb_var_floor = 1e-9;

  int decision_grid = 121;
  double decision_extent = 3.0;
  int probe_resolution = 64;

  std::filesystem::path output_dir = "out";
};

ExperimentConfig default_config(ExperimentKind kind);

/// Parse a JSON document into a config. The "experiment" key (default
/// synthetic) selects the default set; every other key overrides one field.
/// Unknown keys and out-of-range values throw InputError naming the key.
ExperimentConfig validate_config(std::string_view raw);

/// Canonical JSON form: every field, fixed key order, output_dir omitted.
nlohmann::json to_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);
std::string to_string(ExperimentKind kind);

/// Holds the held-out split and counts how often its rows are read.
class SealedSplit {
 public:
  SealedSplit() = default;
  explicit SealedSplit(Dataset rows) : rows_(std::move(rows)) {}
  const Dataset& open() {
    ++reads_;
    return rows_;
  }
  int reads() const { return reads_; }

 private:
  Dataset rows_;
  int reads_ = 0;
};

struct ModelRow {
  std::string name;
  double accuracy = 0, roc_auc = 0, pr_auc = 0, ece = 0;
  double platt_a = 0, platt_b = 0;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<ModelRow> models;
  double bayes_ceiling_accuracy = -1;  // synthetic only
  std::vector<double> first_penalty, last_penalty;  // one entry per trained copula
  std::vector<std::string> warnings;
  int test_reads = 0;
  nlohmann::json metrics;
};

struct ExperimentResult {
  std::vector<RunReport> runs;
  nlohmann::json summary;  // means and standard deviations when n_seeds > 1
};

/// Runs every seed and writes reports under config.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);
RunReport run_synthetic(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& out);
RunReport run_pima(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& out);

/// Two-space indented dump with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dcc
