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

#include <filesystem>
#include <span>
#include <vector>

namespace dcc {

struct RocPoint {
  double fpr, tpr, threshold;
};
struct PrPoint {
  double recall, precision, threshold;
};
struct ReliabilityBin {
  double lo, hi;
  double confidence;  // mean predicted probability (0 when empty)
  double accuracy;    // fraction of positives (0 when empty)
  int count;
};

struct EvalReport {
  double accuracy = 0, roc_auc = 0, pr_auc = 0, ece = 0;
  std::vector<RocPoint> roc;
  std::vector<PrPoint> pr;
  std::vector<ReliabilityBin> reliability;
};

double accuracy(std::span<const int> preds, std::span<const int> labels);

/// Probability that a random positive (label 1) outranks a random negative,
/// ties counted one half. Midrank formulation, O(n log n).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Average precision: sum over distinct thresholds (descending) of
/// (recall step) * precision. Tied scores form a single threshold.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels);

struct Reliability {
  std::vector<ReliabilityBin> bins;
  double ece = 0.0;
};

/// Uniform bins [k/B, (k+1)/B), last bin closed.
Reliability reliability_and_ece(std::span<const double> probs, std::span<const int> labels, int n_bins = 10);

/// Accuracy at the 0.5 threshold (p > 0.5 -> label 1), AUCs, ECE and curves
/// from positive-class probabilities.
EvalReport evaluate_probabilities(std::span<const double> probs, std::span<const int> labels);

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& roc);
void write_pr_csv(const std::filesystem::path& path, const std::vector<PrPoint>& pr);
void write_reliability_csv(const std::filesystem::path& path, const std::vector<ReliabilityBin>& bins);

}  // namespace dcc
