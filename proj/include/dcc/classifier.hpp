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

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <vector>

#include "dcc/copula.hpp"
#include "dcc/dataset.hpp"
#include "dcc/marginals.hpp"

namespace dcc {

struct DccConfig {
  MarginalMode mode = MarginalMode::oracle_normal;
  BandwidthRule bandwidth;
  double smoothness = 2.0;   // r in the width exponent d / (2r + d)
  double width_const = 4.0;
  int build_sn_iters = 30;
  NormalizerKind normalizer = NormalizerKind::grid;
  int grid_resolution = 256;
  Eigen::Index sobol_points = 65536;
  Eigen::Index normalizer_slice = 4096;
  double penalty_weight = 0.1;
  int penalty_bins = 16;
  int epochs = 500;
  int batch_size = 256;
  double lr = 1e-3;
  double tau = 1.0;
  std::uint64_t seed = 0;
};

/// Class priors, marginal estimators and one normalized copula per class.
struct DccModel {
  std::vector<double> priors;
  MarginalModel marginals;
  std::vector<CopulaNet> copulas;
  double tau = 1.0;

  int num_classes() const { return static_cast<int>(priors.size()); }
  nlohmann::json to_json() const;
  static DccModel from_json(const nlohmann::json& j);
};

struct DccFit {
  DccModel model;
  std::vector<TrainResult> training;  // one per class
};

/// Marginals on the fit rows, then one penalized copula fit per class on
/// that class's pseudo-observations. Priors are fit-split frequencies.
DccFit fit_dcc(const Dataset& fit_rows, const DccConfig& config);
DccFit fit_dcc(const Dataset& ds, const SplitPlan& plan, const DccConfig& config);

/// log pi_y + tau * log max(c_y(u), eps) + sum_j log max(f_jy(x_j), eps).
double log_joint(const DccModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y);
/// The same joint with the copula term dropped.
double log_joint_marginal_only(const DccModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y);

struct Prediction {
  int label = 0;
  Eigen::VectorXd log_joints;
  double score = 0.0;  // log_joint(1) - log_joint(0) for two classes
};

/// Argmax of the log joints; ties go to the smallest class index.
int argmax_smallest(const Eigen::Ref<const Eigen::VectorXd>& values);

Prediction predict(const DccModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// One row per sample: per-class log joints (n x K), computed in batch.
Eigen::MatrixXd log_joint_rows(const DccModel& model, const Eigen::MatrixXd& x);

/// Bayes rule for the +rho / -rho bivariate normal pair with equal priors:
/// class 0 (correlation +rho) iff rho * x1 * x2 > 0; ties go to class 0.
int bayes_rule_synthetic(double rho, const Eigen::Ref<const Eigen::VectorXd>& x);

}  // namespace dcc
