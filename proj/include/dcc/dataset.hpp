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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dcc {

using Labels = std::vector<int>;

/// Complete feature matrix (rows are samples) with class labels in 0..K-1.
/// Construction validates shape, label range, non-empty classes, and finiteness.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd features, Labels labels, std::vector<std::string> feature_names);
  /// Fixed class count; classes may be empty (tiny files, subsets).
  Dataset(Eigen::MatrixXd features, Labels labels, std::vector<std::string> feature_names,
          int num_classes);

  const Eigen::MatrixXd& features() const { return features_; }
  const Labels& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  Eigen::Index rows() const { return features_.rows(); }
  Eigen::Index cols() const { return features_.cols(); }
  int num_classes() const { return num_classes_; }
  std::vector<int> class_counts() const;

  /// Rows in the given order; the result keeps this dataset's class count.
  Dataset subset(std::span<const int> indices) const;

 private:
  Eigen::MatrixXd features_;
  Labels labels_;
  std::vector<std::string> names_;
  int num_classes_ = 0;
};

/// Feature table whose cells may be absent. Labels are always known.
class PartialDataset {
 public:
  PartialDataset(Eigen::Index rows, Eigen::Index cols, Labels labels, std::vector<std::string> names);
  explicit PartialDataset(const Dataset& complete);

  std::optional<double>& at(Eigen::Index row, Eigen::Index col) { return cells_[index(row, col)]; }
  const std::optional<double>& at(Eigen::Index row, Eigen::Index col) const {
    return cells_[index(row, col)];
  }

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  const Labels& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  int num_classes() const { return num_classes_; }
  Eigen::Index missing_count() const;

  PartialDataset subset(std::span<const int> indices) const;

 private:
  std::size_t index(Eigen::Index r, Eigen::Index c) const {
    return static_cast<std::size_t>(r * cols_ + c);
  }

  Eigen::Index rows_, cols_;
  std::vector<std::optional<double>> cells_;
  Labels labels_;
  std::vector<std::string> names_;
  int num_classes_;
};

struct SplitRatios {
  double train = 0.70;
  double cal_of_train = 0.15;
  double test = 0.30;
};

/// Disjoint fit / calibration / test row indices, each sorted ascending.
struct SplitPlan {
  std::vector<int> fit_idx;
  std::vector<int> cal_idx;
  std::vector<int> test_idx;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

/// Per-(class, feature) imputation medians and winsor bounds.
struct PreprocessStats {
  Eigen::MatrixXd median;  // classes x features
  Eigen::MatrixXd low;
  Eigen::MatrixXd high;
  double quantile = 0.005;
};

/// Two classes of bivariate normals with unit variances: class 0 has
/// correlation +rho, class 1 has -rho. Class-0 rows come first.
Dataset gen_synthetic(int n_per_class, double rho, std::uint64_t seed);

inline const std::vector<std::string>& pima_columns() {
  static const std::vector<std::string> cols{
      "Pregnancies", "Glucose", "BloodPressure", "SkinThickness", "Insulin",
      "BMI", "DiabetesPedigreeFunction", "Age", "Outcome"};
  return cols;
}

/// Reads the 9-column diabetes CSV (header row, `Outcome` last, labels 0/1).
Dataset load_pima(const std::filesystem::path& path);

/// Replaces literal zeros in Glucose, BloodPressure, SkinThickness, Insulin
/// and BMI with absent cells.
PartialDataset mark_zeros_missing(const Dataset& ds);

/// Stratified 70/30 train/test, then 15% of train (stratified) carved out for
/// calibration. Each class needs at least three members.
SplitPlan make_splits(const Labels& labels, std::uint64_t seed, SplitRatios ratios = {});
inline SplitPlan make_splits(const Dataset& ds, std::uint64_t seed) {
  return make_splits(ds.labels(), seed);
}

/// Learns medians from observed fit cells, then winsor bounds from the
/// imputed fit cells. Reads nothing outside `plan.fit_idx`.
PreprocessStats fit_preprocess(const PartialDataset& ds, const SplitPlan& plan, double q = 0.005);

/// Imputes each absent cell with the median of its row's class, then clips to
/// that class's winsor interval.
Dataset apply_preprocess(const PartialDataset& ds, const PreprocessStats& stats);
Dataset apply_preprocess(const Dataset& ds, const PreprocessStats& stats);

/// Type-7 quantile (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double q);

void write_split_csv(const std::filesystem::path& path, const SplitPlan& plan);

}  // namespace dcc
