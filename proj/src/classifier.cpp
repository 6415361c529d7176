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

#include "dcc/classifier.hpp"

#include <cmath>

#include "dcc/error.hpp"

namespace dcc {

nlohmann::json DccModel::to_json() const {
  nlohmann::json cops = nlohmann::json::array();
  for (const auto& c : copulas) cops.push_back(dcc::to_json(c));
  return {{"priors", priors}, {"tau", tau}, {"marginals", marginals.to_json()}, {"copulas", std::move(cops)}};
}

DccModel DccModel::from_json(const nlohmann::json& j) {
  std::vector<CopulaNet> cops;
  for (const auto& cj : j.at("copulas")) cops.push_back(copula_from_json(cj));
  return DccModel{j.at("priors").get<std::vector<double>>(), MarginalModel::from_json(j.at("marginals")),
                  std::move(cops), j.at("tau").get<double>()};
}

DccFit fit_dcc(const Dataset& fit_rows, const DccConfig& config) {
  const int k = fit_rows.num_classes();
  const int d = static_cast<int>(fit_rows.cols());
  const auto counts = fit_rows.class_counts();
  std::vector<double> priors;
  for (int c : counts) {
    if (c == 0) throw InputError("fit split has an empty class");
    priors.push_back(static_cast<double>(c) / static_cast<double>(fit_rows.rows()));
  }

  auto marginals = fit_marginals(fit_rows, config.mode, config.bandwidth);
  const Normalizer normalizer = config.normalizer == NormalizerKind::grid
                                    ? make_grid_normalizer(d, config.grid_resolution, config.normalizer_slice)
                                    : make_sobol_normalizer(d, config.sobol_points, config.normalizer_slice);

  DccFit fit{DccModel{priors, std::move(marginals), {}, config.tau}, {}};
  for (int y = 0; y < k; ++y) {
    std::vector<int> rows;
    for (Eigen::Index i = 0; i < fit_rows.rows(); ++i)
      if (fit_rows.labels()[static_cast<std::size_t>(i)] == y) rows.push_back(static_cast<int>(i));
    const Eigen::MatrixXd x = fit_rows.subset(rows).features();
    const Eigen::MatrixXd u = pit_transform_rows(fit.model.marginals, x, y);

    const std::uint64_t class_seed = derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(y));
    CopulaNet c;
    c.net = nn::build_net<double>(d, static_cast<int>(rows.size()), config.smoothness, config.width_const,
                                 derive_seed(class_seed, 1), config.build_sn_iters);
    c.normalizer = normalizer;
    c.penalty_weight = config.penalty_weight;
    c.penalty_bins = config.penalty_bins;

    TrainOptions opts;
    opts.epochs = config.epochs;
    opts.batch_size = config.batch_size;
    opts.lr = config.lr;
    opts.seed = derive_seed(class_seed, 2);
    opts.final_sn_iters = config.build_sn_iters;
    fit.training.push_back(train_copula(c, u, opts));
    fit.model.copulas.push_back(std::move(c));
  }
  return fit;
}

DccFit fit_dcc(const Dataset& ds, const SplitPlan& plan, const DccConfig& config) {
  return fit_dcc(ds.subset(plan.fit_idx), config);
}

double log_joint_marginal_only(const DccModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y) {
  double total = std::log(model.priors.at(static_cast<std::size_t>(y)));
  for (Eigen::Index j = 0; j < x.size(); ++j) total += std::log(pdf(model.marginals, static_cast<int>(j), y, x(j)));
  return total;
}

double log_joint(const DccModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, int y) {
  const auto u = pit_transform(model.marginals, x, y);
  const double c = density(model.copulas.at(static_cast<std::size_t>(y)), u);
  return log_joint_marginal_only(model, x, y) + model.tau * std::log(c);
}

int argmax_smallest(const Eigen::Ref<const Eigen::VectorXd>& values) {
  int best = 0;
  for (Eigen::Index y = 1; y < values.size(); ++y)
    if (values(y) > values(best)) best = static_cast<int>(y);
  return best;
}

Prediction predict(const DccModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Prediction p;
  p.log_joints.resize(model.num_classes());
  for (int y = 0; y < model.num_classes(); ++y) p.log_joints(y) = log_joint(model, x, y);
  p.label = argmax_smallest(p.log_joints);
  p.score = model.num_classes() == 2 ? p.log_joints(1) - p.log_joints(0) : 0.0;
  return p;
}

Eigen::MatrixXd log_joint_rows(const DccModel& model, const Eigen::MatrixXd& x) {
  const int k = model.num_classes();
  Eigen::MatrixXd out(x.rows(), k);
  for (int y = 0; y < k; ++y) {
    const Eigen::MatrixXd u = pit_transform_rows(model.marginals, x, y);
    const Eigen::RowVectorXd c = density_rows(model.copulas.at(static_cast<std::size_t>(y)), u);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out(i, y) = log_joint_marginal_only(model, x.row(i).transpose(), y) + model.tau * std::log(c(i));
  }
  return out;
}

int bayes_rule_synthetic(double rho, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (!(std::abs(rho) < 1.0)) throw InputError("rho must lie in (-1, 1)");
  const double s = rho * x(0) * x(1);
  return s < 0.0 ? 1 : 0;
}

}  // namespace dcc
