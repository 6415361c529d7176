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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dcc/rng.hpp"

namespace dcc::nn {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Affine layer plus the persistent power-iteration vectors used by
/// spectral normalization.
template <class Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> bias;     // out
  Vector<Scalar> sn_left;  // out
  Vector<Scalar> sn_right; // in
};

/// Feed-forward map R^d -> (0, inf): ReLU hidden layers, one softplus output.
/// Inputs are stored one point per column.
template <class Scalar>
struct DenseNet {
  std::vector<DenseLayer<Scalar>> layers;
  /// Subtracted from every input coordinate before the first layer.
  Scalar input_center = 0;
  /// Bumped by every in-place parameter update; caches compare against it.
  std::uint64_t version = 0;

  Eigen::Index input_dim() const { return layers.front().weights.cols(); }
  std::size_t depth() const { return layers.size() - 1; }  // hidden layers
  Eigen::Index width() const { return layers.size() > 1 ? layers.front().weights.rows() : 0; }
};

template <class Scalar>
struct Gradients {
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> bias;
};

/// Hidden activations of the most recent forward pass, kept for backward.
/// Reusing one cache across calls of equal shape avoids reallocation.
template <class Scalar>
struct ForwardCache {
  std::vector<Matrix<Scalar>> activations;  // [0] = input, [l] = output of hidden layer l
  RowVector<Scalar> output_preact;
  mutable Matrix<Scalar> delta, delta_prev;  // backward scratch
};

template <class Scalar>
Scalar softplus(Scalar z) {
  const Scalar out = std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z)));
  return std::max(out, std::numeric_limits<Scalar>::min());
}

template <class Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// Network architecture from the sample-size recipe: depth ceil(log2 n_y),
/// width max(8, round(width_const * n_y^(d/(2r+d)))).
struct Architecture {
  int depth = 1;
  int width = 8;
};

inline Architecture architecture_for(int input_dim, int n_y, double smoothness, double width_const) {
  if (n_y < 2) throw std::invalid_argument("network recipe needs n_y >= 2");
  Architecture a;
  a.depth = 0;
  while ((std::int64_t{1} << a.depth) < n_y) ++a.depth;
  const double exponent = input_dim / (2.0 * smoothness + input_dim);
  a.width = std::max(8, static_cast<int>(std::lround(width_const * std::pow(static_cast<double>(n_y), exponent))));
  return a;
}

template <class Scalar>
DenseNet<Scalar> make_net(int input_dim, const Architecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  DenseNet<Scalar> net;
  int fan_in = input_dim;
  for (int l = 0; l <= arch.depth; ++l) {
    const int fan_out = l == arch.depth ? 1 : arch.width;
    DenseLayer<Scalar> layer;
    const double limit = std::sqrt(6.0 / fan_in);  // He-uniform
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        layer.weights(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
    layer.bias = Vector<Scalar>::Zero(fan_out);
    layer.sn_left.resize(fan_out);
    layer.sn_right.resize(fan_in);
    for (auto& v : layer.sn_left) v = static_cast<Scalar>(rng.normal());
    for (auto& v : layer.sn_right) v = static_cast<Scalar>(rng.normal());
    layer.sn_left.normalize();
    layer.sn_right.normalize();
    net.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return net;
}

/// Largest singular value of `w` from `steps` rounds of Golub-Kahan-Lanczos
/// bidiagonalization, with full reorthogonalization. One
/// step costs the same two products as a power iteration; more steps converge
/// far faster when the leading singular values are close. `left` and `right`
/// are replaced by the Ritz vectors.
template <class Scalar>
Scalar top_singular_value(const Matrix<Scalar>& w, Vector<Scalar>& left, Vector<Scalar>& right, int steps) {
  const Eigen::Index k_max = std::min<Eigen::Index>(steps, std::min(w.rows(), w.cols()));
  const Scalar tiny = std::numeric_limits<Scalar>::epsilon() * std::max(w.cwiseAbs().maxCoeff(), Scalar(1));
  Matrix<Scalar> u_basis(w.rows(), k_max), v_basis(w.cols(), k_max);
  Matrix<Scalar> b = Matrix<Scalar>::Zero(k_max, k_max);
  // Warm start from w^T left, so a single step matches one power iteration.
  Vector<Scalar> v = w.transpose() * left;
  if (!(v.norm() > tiny)) v = right;
  if (!(v.norm() > 0)) v = Vector<Scalar>::Ones(w.cols());
  v.normalize();
  Eigen::Index k = 0;
  Scalar beta = 0;
  for (; k < k_max; ++k) {
    v_basis.col(k) = v;
    Vector<Scalar> u = w * v;
    if (k > 0) u -= beta * u_basis.col(k - 1);
    u -= u_basis.leftCols(k) * (u_basis.leftCols(k).transpose() * u);
    const Scalar alpha = u.norm();
    if (alpha <= tiny) break;
    u_basis.col(k) = u / alpha;
    b(k, k) = alpha;
    if (k + 1 == k_max) {
      ++k;
      break;
    }
    v = w.transpose() * u_basis.col(k) - alpha * v_basis.col(k);
    v -= v_basis.leftCols(k + 1) * (v_basis.leftCols(k + 1).transpose() * v);
    beta = v.norm();
    if (beta <= tiny) {
      ++k;
      break;
    }
    v /= beta;
    b(k, k + 1) = beta;
  }
  if (k == 0) return Scalar(0);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(b.topLeftCorner(k, k), Eigen::ComputeFullU | Eigen::ComputeFullV);
  left = (u_basis.leftCols(k) * svd.matrixU().col(0)).normalized();
  right = (v_basis.leftCols(k) * svd.matrixV().col(0)).normalized();
  // Fix the sign so that the warm start is stable across calls.
  if (left.sum() < 0) {
    left = -left;
    right = -right;
  }
  return svd.singularValues()(0);
}

/// Estimates each layer's top singular value sigma (warm-started from the
/// stored vectors) and divides the weights by max(sigma, 1). Returns the
/// per-layer estimates before rescaling.
template <class Scalar>
std::vector<Scalar> spectral_normalize(DenseNet<Scalar>& net, int n_iters) {
  if (n_iters < 1) throw std::invalid_argument("spectral_normalize needs n_iters >= 1");
  std::vector<Scalar> sigmas;
  bool changed = false;
  // Estimates within a few ulps of one are treated as one.
  const Scalar one = Scalar(1) + 4 * std::numeric_limits<Scalar>::epsilon();
  for (auto& layer : net.layers) {
    const Scalar sigma = top_singular_value(layer.weights, layer.sn_left, layer.sn_right, n_iters);
    sigmas.push_back(sigma);
    if (sigma > one) {
      layer.weights /= sigma;
      changed = true;
    }
  }
  if (changed) ++net.version;
  return sigmas;
}

template <class Scalar>
DenseNet<Scalar> build_net(int input_dim, int n_y, double smoothness, double width_const, std::uint64_t seed,
                           int sn_iters = 30) {
  auto net = make_net<Scalar>(input_dim, architecture_for(input_dim, n_y, smoothness, width_const), seed);
  // Centered on the unit cube, so the zero-bias initialization treats every
  // reflection u_j -> 1 - u_j alike.
  net.input_center = Scalar(0.5);
  spectral_normalize(net, sn_iters);
  return net;
}

template <class Scalar>
RowVector<Scalar> forward_batch(const DenseNet<Scalar>& net, const Matrix<Scalar>& inputs,
                                ForwardCache<Scalar>* cache = nullptr) {
  if (inputs.rows() != net.input_dim())
    throw std::invalid_argument("forward: input has " + std::to_string(inputs.rows()) + " rows, net expects " +
                                std::to_string(net.input_dim()));
  const std::size_t last = net.layers.size() - 1;
  ForwardCache<Scalar> local;
  ForwardCache<Scalar>& c = cache ? *cache : local;
  // Without a cache only two buffers are needed; they alternate.
  const std::size_t slots = cache ? net.layers.size() : 2;
  c.activations.resize(slots);
  c.activations[0] = inputs.array() - net.input_center;
  for (std::size_t l = 0; l < last; ++l) {
    const auto& layer = net.layers[l];
    const Matrix<Scalar>& a = c.activations[cache ? l : l % 2];
    Matrix<Scalar>& next = c.activations[cache ? l + 1 : (l + 1) % 2];
    next.noalias() = layer.weights * a;
    next.colwise() += layer.bias;
    next = next.cwiseMax(Scalar(0));
  }
  RowVector<Scalar>& z = c.output_preact;
  z.noalias() = net.layers[last].weights * c.activations[cache ? last : last % 2];
  z.array() += net.layers[last].bias(0);
  return z.unaryExpr([](Scalar t) { return softplus(t); });
}

/// Batch evaluation for a d x N input (one row vector of outputs), or a
/// single positive value when given a compile-time column vector.
template <class Scalar, class Derived>
auto forward(const DenseNet<Scalar>& net, const Eigen::MatrixBase<Derived>& inputs,
             ForwardCache<Scalar>* cache = nullptr) {
  if constexpr (Derived::ColsAtCompileTime == 1)
    return forward_batch(net, Matrix<Scalar>(inputs), cache)(0);
  else
    return forward_batch(net, Matrix<Scalar>(inputs), cache);
}

/// Reverse-mode gradients of sum_k upstream(k) * output(k) with respect to
/// every weight and bias, using the cache of the matching forward pass.
template <class Scalar, class Derived>
Gradients<Scalar> backward(const DenseNet<Scalar>& net, const ForwardCache<Scalar>& cache,
                           const Eigen::MatrixBase<Derived>& upstream) {
  const std::size_t n_layers = net.layers.size();
  if (cache.activations.size() != n_layers || upstream.size() != cache.output_preact.size())
    throw std::invalid_argument("backward: cache/upstream shape mismatch");
  Gradients<Scalar> g;
  g.weights.resize(n_layers);
  g.bias.resize(n_layers);
  if (upstream.rows() != 1) throw std::invalid_argument("backward: upstream must be a row vector");
  Matrix<Scalar>& dz = cache.delta;
  Matrix<Scalar>& da = cache.delta_prev;
  dz = upstream.template cast<Scalar>().cwiseProduct(cache.output_preact.unaryExpr([](Scalar t) { return sigmoid(t); }));
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& a_prev = cache.activations[l];
    g.weights[l].noalias() = dz * a_prev.transpose();
    g.bias[l] = dz.rowwise().sum();
    if (l == 0) break;
    da.noalias() = net.layers[l].weights.transpose() * dz;
    dz = (a_prev.array() > Scalar(0)).select(da, Scalar(0));
  }
  return g;
}

template <class Scalar>
struct AdamState {
  std::vector<Matrix<Scalar>> m_weights, v_weights;
  std::vector<Vector<Scalar>> m_bias, v_bias;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(const DenseNet<Scalar>& net) {
    for (const auto& layer : net.layers) {
      m_weights.push_back(Matrix<Scalar>::Zero(layer.weights.rows(), layer.weights.cols()));
      v_weights.push_back(m_weights.back());
      m_bias.push_back(Vector<Scalar>::Zero(layer.bias.size()));
      v_bias.push_back(m_bias.back());
    }
  }
};

namespace detail {
template <class Param, class Grad, class Moment>
void adam_update(Param& p, const Grad& g, Moment& m, Moment& v, double b1, double b2, double c1, double c2,
                 double lr, double eps) {
  using S = typename Param::Scalar;
  m = S(b1) * m + S(1 - b1) * g;
  v = S(b2) * v + S(1 - b2) * g.cwiseAbs2();
  p.array() -= S(lr) * (m.array() / S(c1)) / ((v.array() / S(c2)).sqrt() + S(eps));
}
}  // namespace detail

/// Bias-corrected Adam descent step.
template <class Scalar>
void adam_step(DenseNet<Scalar>& net, const Gradients<Scalar>& grads, AdamState<Scalar>& state, double lr) {
  if (grads.weights.size() != net.layers.size() || state.m_weights.size() != net.layers.size())
    throw std::invalid_argument("adam_step: state does not match network");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    detail::adam_update(net.layers[l].weights, grads.weights[l], state.m_weights[l], state.v_weights[l],
                        state.beta1, state.beta2, c1, c2, lr, state.eps);
    detail::adam_update(net.layers[l].bias, grads.bias[l], state.m_bias[l], state.v_bias[l], state.beta1,
                        state.beta2, c1, c2, lr, state.eps);
  }
  ++net.version;
}

/// Flat parameter access (weights column-major, then bias, layer by layer).
template <class Scalar>
Eigen::Index num_parameters(const DenseNet<Scalar>& net) {
  Eigen::Index n = 0;
  for (const auto& layer : net.layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

template <class Scalar>
Scalar& parameter(DenseNet<Scalar>& net, Eigen::Index k) {
  for (auto& layer : net.layers) {
    if (k < layer.weights.size()) return layer.weights.data()[k];
    k -= layer.weights.size();
    if (k < layer.bias.size()) return layer.bias(k);
    k -= layer.bias.size();
  }
  throw std::out_of_range("parameter index");
}

template <class Scalar>
Vector<Scalar> flatten(const Gradients<Scalar>& g) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) n += g.weights[l].size() + g.bias[l].size();
  Vector<Scalar> out(n);
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.segment(k, g.weights[l].size()) = g.weights[l].reshaped();
    k += g.weights[l].size();
    out.segment(k, g.bias[l].size()) = g.bias[l];
    k += g.bias[l].size();
  }
  return out;
}

template <class Scalar>
nlohmann::json to_json(const DenseNet<Scalar>& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = layer.weights.template cast<double>();
    auto vec = [](const auto& v) {
      std::vector<double> out(static_cast<std::size_t>(v.size()));
      for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<double>(v(i));
      return out;
    };
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", std::vector<double>(w.data(), w.data() + w.size())},
                      {"bias", vec(layer.bias)},
                      {"sn_left", vec(layer.sn_left)},
                      {"sn_right", vec(layer.sn_right)}});
  }
  return {{"input_center", static_cast<double>(net.input_center)}, {"layers", std::move(layers)}};
}

template <class Scalar>
DenseNet<Scalar> net_from_json(const nlohmann::json& j) {
  DenseNet<Scalar> net;
  net.input_center = static_cast<Scalar>(j.value("input_center", 0.0));
  auto vec = [](const nlohmann::json& a) {
    const auto v = a.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).cast<Scalar>().eval();
  };
  for (const auto& lj : j.at("layers")) {
    DenseLayer<Scalar> layer;
    const auto rows = lj.at("rows").get<Eigen::Index>();
    const auto cols = lj.at("cols").get<Eigen::Index>();
    const auto w = lj.at("weights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols) throw std::invalid_argument("layer weight size mismatch");
    layer.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                        w.data(), rows, cols).template cast<Scalar>();
    layer.bias = vec(lj.at("bias"));
    layer.sn_left = vec(lj.at("sn_left"));
    layer.sn_right = vec(lj.at("sn_right"));
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace dcc::nn
