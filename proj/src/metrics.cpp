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

#include "dcc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "dcc/error.hpp"

namespace dcc {
namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InputError("score and label counts differ");
  if (scores.empty()) throw InputError("metrics need a nonempty input");
  for (int y : labels)
    if (y != 0 && y != 1) throw InputError("binary metrics need labels in {0,1}");
}

// Indices sorted by descending score.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw InputError("prediction and label counts differ");
  if (preds.empty()) throw InputError("accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of positive midranks (1-based), exact in double for n < 2^26.
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[idx[k]] == 1) {
        rank_sum += midrank;
        n_pos += 1.0;
      }
    i = j;
  }
  const double n_neg = static_cast<double>(scores.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InputError("ROC-AUC needs both classes");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto idx = descending(scores);
  const double n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0) throw InputError("PR-AUC needs at least one positive");
  double tp = 0, fp = 0, ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? tp : fp) += 1;
      ++j;
    }
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto idx = descending(scores);
  const double n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  std::vector<RocPoint> out{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? tp : fp) += 1;
      ++j;
    }
    out.push_back({n_neg > 0 ? fp / n_neg : 0.0, n_pos > 0 ? tp / n_pos : 0.0, scores[idx[i]]});
    i = j;
  }
  return out;
}

std::vector<PrPoint> pr_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto idx = descending(scores);
  const double n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  std::vector<PrPoint> out;
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? tp : fp) += 1;
      ++j;
    }
    out.push_back({n_pos > 0 ? tp / n_pos : 0.0, tp / (tp + fp), scores[idx[i]]});
    i = j;
  }
  return out;
}

Reliability reliability_and_ece(std::span<const double> probs, std::span<const int> labels, int n_bins) {
  check_binary(probs, labels);
  if (n_bins < 1) throw InputError("reliability needs at least one bin");
  std::vector<double> conf(static_cast<std::size_t>(n_bins), 0.0), pos(static_cast<std::size_t>(n_bins), 0.0);
  std::vector<int> count(static_cast<std::size_t>(n_bins), 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("probabilities must lie in [0,1]");
    const auto b = static_cast<std::size_t>(std::min(n_bins - 1, static_cast<int>(std::floor(p * n_bins))));
    conf[b] += p;
    pos[b] += labels[i];
    ++count[b];
  }
  Reliability r;
  const auto n = static_cast<double>(probs.size());
  for (int k = 0; k < n_bins; ++k) {
    const auto b = static_cast<std::size_t>(k);
    ReliabilityBin bin{static_cast<double>(k) / n_bins, static_cast<double>(k + 1) / n_bins, 0.0, 0.0, count[b]};
    if (count[b] > 0) {
      bin.confidence = conf[b] / count[b];
      bin.accuracy = pos[b] / count[b];
      r.ece += (count[b] / n) * std::abs(bin.confidence - bin.accuracy);
    }
    r.bins.push_back(bin);
  }
  return r;
}

EvalReport evaluate_probabilities(std::span<const double> probs, std::span<const int> labels) {
  EvalReport rep;
  std::vector<int> preds;
  preds.reserve(probs.size());
  for (double p : probs) preds.push_back(p > 0.5 ? 1 : 0);
  rep.accuracy = accuracy(preds, labels);
  rep.roc_auc = roc_auc(probs, labels);
  rep.pr_auc = pr_auc(probs, labels);
  rep.roc = roc_curve(probs, labels);
  rep.pr = pr_curve(probs, labels);
  auto rel = reliability_and_ece(probs, labels, 10);
  rep.ece = rel.ece;
  rep.reliability = std::move(rel.bins);
  return rep;
}

namespace {
std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  return out;
}
}  // namespace

void write_roc_csv(const std::filesystem::path& path, const std::vector<RocPoint>& roc) {
  auto out = open_csv(path);
  out << "fpr,tpr,threshold\n";
  for (const auto& p : roc) out << p.fpr << ',' << p.tpr << ',' << p.threshold << '\n';
}

void write_pr_csv(const std::filesystem::path& path, const std::vector<PrPoint>& pr) {
  auto out = open_csv(path);
  out << "recall,precision,threshold\n";
  for (const auto& p : pr) out << p.recall << ',' << p.precision << ',' << p.threshold << '\n';
}

void write_reliability_csv(const std::filesystem::path& path, const std::vector<ReliabilityBin>& bins) {
  auto out = open_csv(path);
  out << "bin_lo,bin_hi,conf,acc,count\n";
  for (const auto& b : bins) out << b.lo << ',' << b.hi << ',' << b.confidence << ',' << b.accuracy << ',' << b.count << '\n';
}

}  // namespace dcc
