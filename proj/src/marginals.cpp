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

#include "dcc/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dcc/error.hpp"

namespace dcc {

std::string to_string(MarginalMode mode) {
  switch (mode) {
    case MarginalMode::oracle_normal: return "oracle_normal";
    case MarginalMode::pooled: return "pooled";
    case MarginalMode::per_class: return "per_class";
  }
  return "unknown";
}

MarginalMode parse_marginal_mode(const std::string& text) {
  if (text == "oracle_normal") return MarginalMode::oracle_normal;
  if (text == "pooled") return MarginalMode::pooled;
  if (text == "per_class") return MarginalMode::per_class;
  throw InputError("unknown marginal mode '" + text + "' (expected oracle_normal, pooled, per_class)");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

MarginalModel::MarginalModel(MarginalMode mode, int num_features, int num_classes,
                             std::vector<std::vector<MarginalCell>> groups, double oracle_clip)
    : mode_(mode),
      num_features_(num_features),
      num_classes_(num_classes),
      groups_(std::move(groups)),
      oracle_clip_(oracle_clip) {
  const std::size_t expected = mode == MarginalMode::oracle_normal ? 0
                               : mode == MarginalMode::pooled     ? 1
                                                                  : static_cast<std::size_t>(num_classes);
  if (groups_.size() != expected) throw std::invalid_argument("marginal group count does not match mode");
  for (const auto& g : groups_)
    if (static_cast<int>(g.size()) != num_features_)
      throw std::invalid_argument("marginal feature count mismatch");
}

const MarginalCell& MarginalModel::cell(int feature, int y) const {
  const std::size_t g = mode_ == MarginalMode::per_class ? static_cast<std::size_t>(y) : 0;
  return groups_.at(g).at(static_cast<std::size_t>(feature));
}

double MarginalModel::clip(int feature, int y) const {
  return mode_ == MarginalMode::oracle_normal ? oracle_clip_ : cell(feature, y).clip;
}

nlohmann::json MarginalModel::to_json() const {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : groups_) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : g)
      cells.push_back({{"samples", std::vector<double>(c.sorted.data(), c.sorted.data() + c.sorted.size())},
                       {"bandwidth", c.bandwidth},
                       {"clip", c.clip}});
    groups.push_back(std::move(cells));
  }
  return {{"mode", to_string(mode_)},
          {"num_features", num_features_},
          {"num_classes", num_classes_},
          {"oracle_clip", oracle_clip_},
          {"groups", std::move(groups)}};
}

MarginalModel MarginalModel::from_json(const nlohmann::json& j) {
  std::vector<std::vector<MarginalCell>> groups;
  for (const auto& g : j.at("groups")) {
    std::vector<MarginalCell> cells;
    for (const auto& c : g) {
      const auto samples = c.at("samples").get<std::vector<double>>();
      MarginalCell cell;
      cell.sorted = Eigen::Map<const Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(samples.size()));
      cell.bandwidth = c.at("bandwidth").get<double>();
      cell.clip = c.at("clip").get<double>();
      cells.push_back(std::move(cell));
    }
    groups.push_back(std::move(cells));
  }
  return MarginalModel(parse_marginal_mode(j.at("mode").get<std::string>()), j.at("num_features").get<int>(),
                       j.at("num_classes").get<int>(), std::move(groups), j.at("oracle_clip").get<double>());
}

double kde_bandwidth(const Eigen::VectorXd& sample, const BandwidthRule& rule) {
  const auto m = static_cast<double>(sample.size());
  double h = rule.scale * std::pow(m, rule.exponent);
  if (rule.relative_to_sd) {
    const double mean = sample.mean();
    const double var = (sample.array() - mean).square().sum() / std::max(1.0, m - 1.0);
    h *= std::sqrt(var);
  }
  return h;
}

namespace {

MarginalCell fit_cell(std::vector<double> values, const BandwidthRule& rule, const std::string& name) {
  if (values.size() < 2) throw InputError("marginal cell " + name + " needs at least two samples");
  std::sort(values.begin(), values.end());
  if (values.front() == values.back()) throw InputError("zero variance in marginal cell " + name);
  MarginalCell cell;
  cell.sorted = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  cell.bandwidth = kde_bandwidth(cell.sorted, rule);
  cell.clip = 1.0 / (2.0 * (static_cast<double>(values.size()) + 1.0));
  return cell;
}

}  // namespace

MarginalModel fit_marginals(const Dataset& fit_rows, MarginalMode mode, const BandwidthRule& rule) {
  const int d = static_cast<int>(fit_rows.cols());
  const int k = fit_rows.num_classes();
  const auto& x = fit_rows.features();
  const auto& names = fit_rows.feature_names();
  std::vector<std::vector<MarginalCell>> groups;
  if (mode == MarginalMode::pooled) {
    if (fit_rows.rows() == 0) throw InputError("fit split is empty");
    std::vector<MarginalCell> cells;
    for (int j = 0; j < d; ++j) {
      std::vector<double> v(x.col(j).data(), x.col(j).data() + x.rows());
      cells.push_back(fit_cell(std::move(v), rule, "(feature '" + names[static_cast<std::size_t>(j)] + "', pooled)"));
    }
    groups.push_back(std::move(cells));
  } else if (mode == MarginalMode::per_class) {
    for (int y = 0; y < k; ++y) {
      std::vector<MarginalCell> cells;
      for (int j = 0; j < d; ++j) {
        std::vector<double> v;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
          if (fit_rows.labels()[static_cast<std::size_t>(i)] == y) v.push_back(x(i, j));
        if (v.empty()) throw InputError("fit split has no samples of class " + std::to_string(y));
        cells.push_back(fit_cell(std::move(v), rule,
                                 "(feature '" + names[static_cast<std::size_t>(j)] + "', class " + std::to_string(y) + ")"));
      }
      groups.push_back(std::move(cells));
    }
  }
  const double oracle_clip = 1.0 / (2.0 * (static_cast<double>(fit_rows.rows()) + 1.0));
  return MarginalModel(mode, d, k, std::move(groups), oracle_clip);
}

MarginalModel fit_marginals(const Dataset& ds, const SplitPlan& plan, MarginalMode mode,
                            const BandwidthRule& rule) {
  return fit_marginals(ds.subset(plan.fit_idx), mode, rule);
}

double smoothed_ecdf(const Eigen::VectorXd& sorted, double clip, double x) {
  const auto m = sorted.size();
  const double* begin = sorted.data();
  const double* end = begin + m;
  const double denom = static_cast<double>(m) + 1.0;
  if (!(x >= *begin)) return clip;  // also catches NaN
  if (x > *(end - 1)) return 1.0 - clip;
  // Midrank at a (possibly tied) sample value.
  auto midrank = [&](const double* lo, const double* hi) {
    const auto below = static_cast<double>(lo - begin);
    const auto ties = static_cast<double>(hi - lo);
    return (below + (ties + 1.0) / 2.0) / denom;
  };
  const double* lo = std::lower_bound(begin, end, x);
  const double* hi = std::upper_bound(lo, end, x);
  double u;
  if (lo != hi) {
    u = midrank(lo, hi);
  } else {
    // Strictly between the distinct neighbours *(lo-1) and *lo.
    const double left = *(lo - 1);
    const double right = *lo;
    const double u_left = midrank(std::lower_bound(begin, lo, left), lo);
    const double u_right = midrank(lo, std::upper_bound(lo, end, right));
    u = u_left + (x - left) / (right - left) * (u_right - u_left);
  }
  return std::clamp(u, clip, 1.0 - clip);
}

double gaussian_kde(const Eigen::VectorXd& sample, double bandwidth, double x) {
  const double inv_h = 1.0 / bandwidth;
  const double total = ((sample.array() - x) * inv_h).square().unaryExpr([](double t) {
                         return std::exp(-0.5 * t);
                       }).sum();
  return total * inv_h / (static_cast<double>(sample.size()) * std::sqrt(2.0 * std::numbers::pi));
}

double cdf(const MarginalModel& model, int feature, int y, double x) {
  if (model.mode() == MarginalMode::oracle_normal) {
    const double c = model.clip(feature, y);
    if (std::isnan(x)) return c;
    return std::clamp(normal_cdf(x), c, 1.0 - c);
  }
  const auto& cell = model.cell(feature, y);
  return smoothed_ecdf(cell.sorted, cell.clip, x);
}

double pdf(const MarginalModel& model, int feature, int y, double x) {
  double f;
  if (model.mode() == MarginalMode::oracle_normal) {
    f = normal_pdf(x);
  } else {
    const auto& cell = model.cell(feature, y);
    f = gaussian_kde(cell.sorted, cell.bandwidth, x);
  }
  return std::isfinite(f) ? std::max(f, kDensityFloor) : kDensityFloor;
}

Eigen::VectorXd pit_transform(const MarginalModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y) {
  Eigen::VectorXd u(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) u(j) = cdf(model, static_cast<int>(j), y, x(j));
  return u;
}

Eigen::MatrixXd pit_transform_rows(const MarginalModel& model, const Eigen::MatrixXd& x, int y) {
  Eigen::MatrixXd u(x.cols(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) u.col(i) = pit_transform(model, x.row(i).transpose(), y);
  return u;
}

}  // namespace dcc
