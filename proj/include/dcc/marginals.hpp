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

#include <string>
#include <vector>

#include "dcc/dataset.hpp"

namespace dcc {

enum class MarginalMode { oracle_normal, pooled, per_class };

std::string to_string(MarginalMode mode);
MarginalMode parse_marginal_mode(const std::string& text);

inline constexpr double kDensityFloor = 1e-12;

/// One univariate estimator: sorted sample, KDE bandwidth, CDF clip.
struct MarginalCell {
  Eigen::VectorXd sorted;
  double bandwidth = 0.0;
  double clip = 0.0;
};

struct BandwidthRule {
  double scale = 10.0;
  double exponent = -0.51;
  /// When true h = scale * sd * m^exponent; otherwise h = scale * m^exponent.
  bool relative_to_sd = true;
};

/// Per-feature CDF/PDF estimators, either one set per class, one pooled set,
/// or the standard normal for every feature.
class MarginalModel {
 public:
  MarginalModel(MarginalMode mode, int num_features, int num_classes,
                std::vector<std::vector<MarginalCell>> groups, double oracle_clip);

  MarginalMode mode() const { return mode_; }
  int num_features() const { return num_features_; }
  int num_classes() const { return num_classes_; }

  /// The estimator used for class `y`; all classes share one unless per_class.
  const MarginalCell& cell(int feature, int y) const;
  double clip(int feature, int y) const;

  nlohmann::json to_json() const;
  static MarginalModel from_json(const nlohmann::json& j);

 private:
  MarginalMode mode_;
  int num_features_;
  int num_classes_;
  std::vector<std::vector<MarginalCell>> groups_;  // [group][feature]
  double oracle_clip_;
};

double kde_bandwidth(const Eigen::VectorXd& sample, const BandwidthRule& rule);

/// Fits estimators on the fit rows of `ds`.
MarginalModel fit_marginals(const Dataset& ds, const SplitPlan& plan, MarginalMode mode,
                            const BandwidthRule& rule = {});
MarginalModel fit_marginals(const Dataset& fit_rows, MarginalMode mode, const BandwidthRule& rule = {});

/// Smoothed empirical CDF of a sorted sample: midrank r/(m+1) at sample
/// points, linear between distinct order statistics, clipped to [clip, 1-clip].
double smoothed_ecdf(const Eigen::VectorXd& sorted, double clip, double x);

/// Gaussian-kernel density estimate, not floored.
double gaussian_kde(const Eigen::VectorXd& sample, double bandwidth, double x);

double cdf(const MarginalModel& model, int feature, int y, double x);

/// Density floored at kDensityFloor.
double pdf(const MarginalModel& model, int feature, int y, double x);

/// Componentwise CDF of `x` under class `y`'s estimators.
Eigen::VectorXd pit_transform(const MarginalModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y);

/// Pseudo-observations for every row of `x`, one column per row (d x n).
Eigen::MatrixXd pit_transform_rows(const MarginalModel& model, const Eigen::MatrixXd& x, int y);

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace dcc
