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

#include "dcc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "dcc/error.hpp"

namespace dcc {
namespace {

// log(1 + exp(t)), stable for large |t|.
double log1pexp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

PlattModel fit_platt(std::span<const double> scores, std::span<const int> labels, int max_iters, double tol) {
  if (scores.size() != labels.size()) throw InputError("Platt: score and label counts differ");
  double n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1) n_pos += 1;
    else if (y == 0) n_neg += 1;
    else throw InputError("Platt: labels must be 0 or 1");
  }
  if (n_pos == 0 || n_neg == 0) throw InputError("Platt calibration needs both classes in the calibration split");
  for (double s : scores)
    if (!std::isfinite(s)) throw InputError("Platt: non-finite score");

  const double t_pos = (n_pos + 1.0) / (n_pos + 2.0);
  const double t_neg = 1.0 / (n_neg + 2.0);
  const auto n = static_cast<double>(scores.size());

  // Mean negative log-likelihood of sigmoid(a s + b) against the targets.
  auto loss = [&](double a, double b) {
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double t = labels[i] == 1 ? t_pos : t_neg;
      const double z = a * scores[i] + b;
      total += log1pexp(z) - t * z;
    }
    return total / n;
  };

  double a = 0.0;
  double b = std::log((n_pos + 1.0) / (n_neg + 1.0));
  double f = loss(a, b);
  std::ostringstream trace;
  PlattModel model;
  for (int it = 0; it < max_iters; ++it) {
    double ga = 0, gb = 0, haa = 0, hab = 0, hbb = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double t = labels[i] == 1 ? t_pos : t_neg;
      const double s = scores[i];
      const double p = sigmoid(a * s + b);
      const double r = p - t;
      const double w = p * (1.0 - p);
      ga += r * s;
      gb += r;
      haa += w * s * s;
      hab += w * s;
      hbb += w;
    }
    ga /= n; gb /= n; haa /= n; hab /= n; hbb /= n;
    const double gnorm = std::hypot(ga, gb);
    trace << "iter " << it << ": a=" << a << " b=" << b << " loss=" << f << " |g|=" << gnorm << '\n';
    if (gnorm < tol) {
      model.slope = a;
      model.intercept = b;
      model.iterations = it;
      return model;
    }
    // Regularize a (near-)singular Hessian.
    const double ridge = 1e-12;
    haa += ridge;
    hbb += ridge;
    const double det = haa * hbb - hab * hab;
    double da = -(hbb * ga - hab * gb) / det;
    double db = -(haa * gb - hab * ga) / det;
    if (!std::isfinite(da) || !std::isfinite(db)) {
      da = -ga;
      db = -gb;
    }
    double step = 1.0;
    bool improved = false;
    for (int h = 0; h < 60; ++h) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = loss(na, nb);
      if (std::isfinite(nf) && nf <= f + 1e-4 * step * (ga * da + gb * db)) {
        // The update has fallen below the resolution of (a, b).
        if (na == a && nb == b) {
          model.slope = a;
          model.intercept = b;
          model.iterations = it;
          return model;
        }
        a = na;
        b = nb;
        f = nf;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      // No descent possible at machine precision: treat as converged if the
      // gradient is already tiny relative to the curvature.
      if (gnorm < 1e-7) {
        model.slope = a;
        model.intercept = b;
        model.iterations = it;
        return model;
      }
      throw NumericalError("Platt fit: line search failed\n" + trace.str());
    }
  }
  throw NumericalError("Platt fit did not converge in " + std::to_string(max_iters) + " iterations\n" + trace.str());
}

double apply_platt(const PlattModel& model, double score) {
  const double p = sigmoid(model.slope * score + model.intercept);
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(p, lo, hi);
}

std::vector<double> apply_platt(const PlattModel& model, std::span<const double> scores) {
  std::vector<double> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(apply_platt(model, s));
  return out;
}

}  // namespace dcc
