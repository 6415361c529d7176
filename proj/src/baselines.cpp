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

#include "dcc/baselines.hpp"

#include <cmath>
#include <numbers>

#include "dcc/error.hpp"

namespace dcc {

StandardScaler StandardScaler::fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 1) throw InputError("cannot standardize an empty matrix");
  StandardScaler s;
  s.mean = x.colwise().mean();
  s.scale = ((x.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 0.0)) throw InputError("feature " + std::to_string(j) + " has zero variance");
  return s;
}

Eigen::MatrixXd StandardScaler::transform(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

namespace {

double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

LogisticModel fit_logreg(const Dataset& fit_rows, const LogisticOptions& options) {
  if (fit_rows.num_classes() != 2) throw InputError("logistic regression needs binary labels");
  LogisticModel model;
  model.scaler = StandardScaler::fit(fit_rows.features());
  const Eigen::MatrixXd x = model.scaler.transform(fit_rows.features());
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = fit_rows.labels()[static_cast<std::size_t>(i)];
  const auto n = static_cast<double>(x.rows());
  const double l2 = options.l2 < 0 ? 1.0 / n : options.l2;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  double b = 0.0;
  auto objective = [&](const Eigen::VectorXd& wv, double bv) {
    const Eigen::VectorXd z = (x * wv).array() + bv;
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) total += log1pexp(z(i)) - y(i) * z(i);
    return total / n + 0.5 * l2 * wv.squaredNorm();
  };

  double f = objective(w, b);
  double step = 1.0;
  bool stalled = false;
  for (int it = 0; it < options.max_iters; ++it) {
    const Eigen::VectorXd z = (x * w).array() + b;
    Eigen::VectorXd r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = sigmoid(z(i)) - y(i);
    const Eigen::VectorXd gw = x.transpose() * r / n + l2 * w;
    const double gb = r.mean();
    const double gnorm2 = gw.squaredNorm() + gb * gb;
    if (std::sqrt(gnorm2) < options.grad_tol) {
      model.converged = true;
      break;
    }
    step = std::min(step * 2.0, 1e6);
    for (;;) {
      const Eigen::VectorXd nw = w - step * gw;
      const double nb = b - step * gb;
      const double nf = objective(nw, nb);
      if (!std::isfinite(nf)) throw NumericalError("logistic regression diverged (non-finite loss)");
      if (nf <= f - 0.5 * step * gnorm2) {
        w = nw;
        b = nb;
        stalled = nf == f;
        f = nf;
        break;
      }
      step *= 0.5;
      if (step < 1e-20) break;
    }
    model.loss_trace.push_back(f);
    // The loss no longer resolves the decrease: stationary to working precision.
    if (stalled) {
      model.converged = true;
      break;
    }
    if (step < 1e-20) break;
  }
  model.weights = std::move(w);
  model.bias = b;
  return model;
}

GnbModel fit_gnb(const Dataset& fit_rows, double var_floor) {
  const int k = fit_rows.num_classes();
  const Eigen::Index d = fit_rows.cols();
  const auto& x = fit_rows.features();
  const auto counts = fit_rows.class_counts();
  GnbModel m;
  m.mean = Eigen::MatrixXd::Zero(k, d);
  m.variance = Eigen::MatrixXd::Zero(k, d);
  for (int y = 0; y < k; ++y)
    if (counts[static_cast<std::size_t>(y)] < 2) throw InputError("Gaussian NB needs >= 2 samples per class");
  for (Eigen::Index i = 0; i < x.rows(); ++i) m.mean.row(fit_rows.labels()[static_cast<std::size_t>(i)]) += x.row(i);
  for (int y = 0; y < k; ++y) m.mean.row(y) /= counts[static_cast<std::size_t>(y)];
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int y = fit_rows.labels()[static_cast<std::size_t>(i)];
    m.variance.row(y).array() += (x.row(i) - m.mean.row(y)).array().square();
  }
  for (int y = 0; y < k; ++y) m.variance.row(y) /= counts[static_cast<std::size_t>(y)];
  const Eigen::RowVectorXd global_mean = x.colwise().mean();
  const double max_var =
      ((x.rowwise() - global_mean).array().square().colwise().sum() / static_cast<double>(x.rows())).maxCoeff();
  m.variance = m.variance.cwiseMax(var_floor * max_var);
  for (int c : counts) m.priors.push_back(static_cast<double>(c) / static_cast<double>(x.rows()));
  return m;
}

double score(const LogisticModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const Eigen::RowVectorXd z = (x - model.scaler.mean).array() / model.scaler.scale.array();
  return z.dot(model.weights) + model.bias;
}

Eigen::VectorXd gnb_log_joint(const GnbModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto k = static_cast<Eigen::Index>(model.priors.size());
  Eigen::VectorXd out(k);
  for (Eigen::Index y = 0; y < k; ++y) {
    const auto var = model.variance.row(y).array();
    const double ll = -0.5 * ((x.array() - model.mean.row(y).array()).square() / var +
                              (2.0 * std::numbers::pi * var).log()).sum();
    out(y) = std::log(model.priors[static_cast<std::size_t>(y)]) + ll;
  }
  return out;
}

double score(const GnbModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const auto lj = gnb_log_joint(model, x);
  return lj(1) - lj(0);
}

}  // namespace dcc
