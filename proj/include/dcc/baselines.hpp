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

#include <vector>

#include "dcc/dataset.hpp"

namespace dcc {

struct StandardScaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // population standard deviation

  static StandardScaler fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
};

struct LogisticModel {
  StandardScaler scaler;
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::vector<double> loss_trace;  // objective after each accepted step
  bool converged = false;
};

struct LogisticOptions {
  /// Coefficient of 0.5 * ||w||^2 added to the mean log-loss; < 0 selects
  /// 1 / n_fit, the per-sample form of an inverse strength C = 1.
  double l2 = -1.0;
  int max_iters = 200000;
  double grad_tol = 1e-6;
};

/// Standardize on the fit rows, then full-batch gradient descent with
/// Armijo backtracking on the L2-regularized mean logistic loss (bias
/// unpenalized).
LogisticModel fit_logreg(const Dataset& fit_rows, const LogisticOptions& options = {});

struct GnbModel {
  Eigen::MatrixXd mean;      // classes x features
  Eigen::MatrixXd variance;  // classes x features, floored
  std::vector<double> priors;
};

/// Per-(class, feature) mean and population variance; variances floored at
/// var_floor * (largest feature variance over all fit rows).
GnbModel fit_gnb(const Dataset& fit_rows, double var_floor = 1e-9);

/// Log-odds of class 1: w . standardize(x) + b.
double score(const LogisticModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);
/// Log posterior odds of class 1 against class 0.
double score(const GnbModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Per-class log joint (log prior + log likelihood).
Eigen::VectorXd gnb_log_joint(const GnbModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x);

template <class Model>
std::vector<double> score_rows(const Model& model, const Eigen::MatrixXd& x) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(score(model, x.row(i)));
  return out;
}

}  // namespace dcc
