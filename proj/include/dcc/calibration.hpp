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

#include <span>
#include <vector>

namespace dcc {

/// p = sigmoid(slope * score + intercept).
struct PlattModel {
  double slope = 1.0;
  double intercept = 0.0;
  int iterations = 0;

  /// A negative slope reverses the score ranking.
  bool ranking_flipped() const { return slope < 0.0; }
};

/// Newton's method with step halving on the Bernoulli log-likelihood with
/// Platt's smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2). Converged when
/// the mean-gradient norm drops below `tol`.
PlattModel fit_platt(std::span<const double> scores, std::span<const int> labels, int max_iters = 100,
                     double tol = 1e-10);

/// Strictly inside (0, 1): saturated values are pulled in by one ulp.
double apply_platt(const PlattModel& model, double score);
std::vector<double> apply_platt(const PlattModel& model, std::span<const double> scores);

}  // namespace dcc
