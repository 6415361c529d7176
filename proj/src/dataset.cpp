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

#include "dcc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dcc/error.hpp"
#include "dcc/rng.hpp"

namespace dcc {
namespace {

int infer_num_classes(const Labels& labels) {
  int k = 0;
  for (int y : labels) {
    if (y < 0) throw InputError("negative class label " + std::to_string(y));
    k = std::max(k, y + 1);
  }
  return k;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Dataset::Dataset(Eigen::MatrixXd features, Labels labels, std::vector<std::string> feature_names)
    : Dataset(std::move(features), labels, std::move(feature_names), infer_num_classes(labels)) {
  const auto counts = class_counts();
  for (std::size_t y = 0; y < counts.size(); ++y)
    if (counts[y] == 0) throw InputError("class " + std::to_string(y) + " has no samples");
}

Dataset::Dataset(Eigen::MatrixXd features, Labels labels, std::vector<std::string> names,
                 int num_classes)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      names_(std::move(names)),
      num_classes_(num_classes) {
  if (features_.rows() != static_cast<Eigen::Index>(labels_.size()))
    throw InputError("feature rows (" + std::to_string(features_.rows()) +
                     ") do not match label count (" + std::to_string(labels_.size()) + ")");
  if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != features_.cols())
    throw InputError("feature name count does not match column count");
  if (names_.empty())
    for (Eigen::Index j = 0; j < features_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  for (int y : labels_)
    if (y < 0 || y >= num_classes_) throw InputError("label out of range: " + std::to_string(y));
  if (!features_.allFinite()) throw InputError("dataset contains non-finite values");
}

std::vector<int> Dataset::class_counts() const {
  std::vector<int> counts(static_cast<std::size_t>(num_classes_), 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

Dataset Dataset::subset(std::span<const int> indices) const {
  Eigen::MatrixXd f(static_cast<Eigen::Index>(indices.size()), features_.cols());
  Labels l;
  l.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    f.row(static_cast<Eigen::Index>(i)) = features_.row(indices[i]);
    l.push_back(labels_[static_cast<std::size_t>(indices[i])]);
  }
  return Dataset(std::move(f), std::move(l), names_, num_classes_);
}

PartialDataset::PartialDataset(Eigen::Index rows, Eigen::Index cols, Labels labels,
                               std::vector<std::string> names)
    : rows_(rows),
      cols_(cols),
      cells_(static_cast<std::size_t>(rows * cols)),
      labels_(std::move(labels)),
      names_(std::move(names)),
      num_classes_(infer_num_classes(labels_)) {
  if (static_cast<Eigen::Index>(labels_.size()) != rows_)
    throw InputError("label count does not match row count");
}

PartialDataset::PartialDataset(const Dataset& complete)
    : PartialDataset(complete.rows(), complete.cols(), complete.labels(), complete.feature_names()) {
  num_classes_ = complete.num_classes();
  for (Eigen::Index i = 0; i < rows_; ++i)
    for (Eigen::Index j = 0; j < cols_; ++j) at(i, j) = complete.features()(i, j);
}

Eigen::Index PartialDataset::missing_count() const {
  return std::count_if(cells_.begin(), cells_.end(), [](const auto& c) { return !c.has_value(); });
}

PartialDataset PartialDataset::subset(std::span<const int> indices) const {
  Labels l;
  for (int i : indices) l.push_back(labels_[static_cast<std::size_t>(i)]);
  PartialDataset out(static_cast<Eigen::Index>(indices.size()), cols_, std::move(l), names_);
  out.num_classes_ = num_classes_;
  for (std::size_t r = 0; r < indices.size(); ++r)
    for (Eigen::Index j = 0; j < cols_; ++j)
      out.at(static_cast<Eigen::Index>(r), j) = at(indices[r], j);
  return out;
}

Dataset gen_synthetic(int n_per_class, double rho, std::uint64_t seed) {
  if (n_per_class < 1) throw InputError("n_per_class must be positive");
  if (!(std::abs(rho) < 1.0)) throw InputError("rho must lie in (-1, 1), got " + std::to_string(rho));
  Rng rng(seed);
  const int n = 2 * n_per_class;
  Eigen::MatrixXd x(n, 2);
  Labels labels(static_cast<std::size_t>(n));
  // Cholesky factor of [[1, r], [r, 1]] is [[1, 0], [r, sqrt(1 - r^2)]].
  const double tail = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    const int y = i < n_per_class ? 0 : 1;
    const double r = y == 0 ? rho : -rho;
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    x(i, 0) = z1;
    x(i, 1) = r * z1 + tail * z2;
    labels[static_cast<std::size_t>(i)] = y;
  }
  return Dataset(std::move(x), std::move(labels), {"x1", "x2"});
}

Dataset load_pima(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open PIMA CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError("PIMA CSV is empty: " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_csv_line(line);
  const auto& expected = pima_columns();
  if (header.size() != expected.size())
    throw InputError("PIMA header has " + std::to_string(header.size()) + " columns, expected 9");
  if (header.back() != "Outcome") throw InputError("last PIMA column must be 'Outcome', got '" + header.back() + "'");

  std::vector<std::vector<double>> rows;
  Labels labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw InputError("line " + std::to_string(line_no) + ": expected 9 columns, found " +
                       std::to_string(cells.size()));
    std::vector<double> values;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const auto& s = cells[c];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw InputError("line " + std::to_string(line_no) + ", column '" + header[c] +
                         "': non-numeric cell '" + s + "'");
      values.push_back(v);
    }
    const double outcome = values.back();
    if (outcome != 0.0 && outcome != 1.0)
      throw InputError("line " + std::to_string(line_no) + ", column 'Outcome': unknown label '" +
                       cells.back() + "'");
    labels.push_back(static_cast<int>(outcome));
    values.pop_back();
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw InputError("PIMA CSV has no data rows");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), 8);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < 8; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  std::vector<std::string> names(header.begin(), header.end() - 1);
  // Outcome is binary even when a small file holds only one class.
  return Dataset(std::move(x), std::move(labels), std::move(names), 2);
}

PartialDataset mark_zeros_missing(const Dataset& ds) {
  static const std::set<std::string> zero_is_missing{"Glucose", "BloodPressure", "SkinThickness",
                                                     "Insulin", "BMI"};
  PartialDataset out(ds);
  for (Eigen::Index j = 0; j < ds.cols(); ++j) {
    if (!zero_is_missing.count(ds.feature_names()[static_cast<std::size_t>(j)])) continue;
    for (Eigen::Index i = 0; i < ds.rows(); ++i)
      if (out.at(i, j) == 0.0) out.at(i, j).reset();
  }
  return out;
}

SplitPlan make_splits(const Labels& labels, std::uint64_t seed, SplitRatios ratios) {
  const int k = infer_num_classes(labels);
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));

  SplitPlan plan;
  plan.seed = seed;
  plan.ratios = ratios;
  for (int y = 0; y < k; ++y) {
    auto& members = by_class[static_cast<std::size_t>(y)];
    const auto n = static_cast<long>(members.size());
    if (n < 3)
      throw InputError("class " + std::to_string(y) + " has " + std::to_string(n) +
                       " members; stratified splitting needs at least 3");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(y)));
    rng.shuffle(std::span<int>(members));
    const long n_test = std::clamp(std::lround(ratios.test * static_cast<double>(n)), 1L, n - 2);
    const long n_train = n - n_test;
    const long n_cal = std::clamp(std::lround(ratios.cal_of_train * static_cast<double>(n_train)), 1L, n_train - 1);
    plan.test_idx.insert(plan.test_idx.end(), members.begin(), members.begin() + n_test);
    plan.cal_idx.insert(plan.cal_idx.end(), members.begin() + n_test, members.begin() + n_test + n_cal);
    plan.fit_idx.insert(plan.fit_idx.end(), members.begin() + n_test + n_cal, members.end());
  }
  std::sort(plan.fit_idx.begin(), plan.fit_idx.end());
  std::sort(plan.cal_idx.begin(), plan.cal_idx.end());
  std::sort(plan.test_idx.begin(), plan.test_idx.end());
  return plan;
}

double quantile_type7(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PreprocessStats fit_preprocess(const PartialDataset& ds, const SplitPlan& plan, double q) {
  const int k = ds.num_classes();
  const Eigen::Index d = ds.cols();
  PreprocessStats stats;
  stats.quantile = q;
  stats.median.resize(k, d);
  stats.low.resize(k, d);
  stats.high.resize(k, d);
  for (int y = 0; y < k; ++y) {
    for (Eigen::Index j = 0; j < d; ++j) {
      std::vector<double> observed;
      int absent = 0;
      for (int i : plan.fit_idx) {
        if (ds.labels()[static_cast<std::size_t>(i)] != y) continue;
        if (const auto& cell = ds.at(i, j)) observed.push_back(*cell);
        else ++absent;
      }
      if (observed.empty())
        throw InputError("no observed fit values for class " + std::to_string(y) + ", feature '" +
                         ds.feature_names()[static_cast<std::size_t>(j)] + "'");
      const double med = quantile_type7(observed, 0.5);
      observed.insert(observed.end(), static_cast<std::size_t>(absent), med);
      stats.median(y, j) = med;
      stats.low(y, j) = quantile_type7(observed, q);
      stats.high(y, j) = quantile_type7(observed, 1.0 - q);
    }
  }
  return stats;
}

Dataset apply_preprocess(const PartialDataset& ds, const PreprocessStats& stats) {
  Eigen::MatrixXd x(ds.rows(), ds.cols());
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    const int y = ds.labels()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ds.cols(); ++j) {
      const double v = ds.at(i, j).value_or(stats.median(y, j));
      x(i, j) = std::clamp(v, stats.low(y, j), stats.high(y, j));
    }
  }
  return Dataset(std::move(x), ds.labels(), ds.feature_names(), ds.num_classes());
}

Dataset apply_preprocess(const Dataset& ds, const PreprocessStats& stats) {
  return apply_preprocess(PartialDataset(ds), stats);
}

void write_split_csv(const std::filesystem::path& path, const SplitPlan& plan) {
  std::vector<std::pair<int, const char*>> rows;
  for (int i : plan.fit_idx) rows.emplace_back(i, "fit");
  for (int i : plan.cal_idx) rows.emplace_back(i, "cal");
  for (int i : plan.test_idx) rows.emplace_back(i, "test");
  std::sort(rows.begin(), rows.end());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "index,split\n";
  for (const auto& [i, s] : rows) out << i << ',' << s << '\n';
}

}  // namespace dcc
