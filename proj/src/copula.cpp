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

#include "dcc/copula.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dcc/error.hpp"
#include "dcc/sobol.hpp"

namespace dcc {

std::string to_string(NormalizerKind kind) { return kind == NormalizerKind::grid ? "grid" : "sobol"; }

NormalizerKind parse_normalizer_kind(const std::string& text) {
  if (text == "grid") return NormalizerKind::grid;
  if (text == "sobol") return NormalizerKind::sobol;
  throw InputError("unknown normalizer kind '" + text + "' (expected grid or sobol)");
}

Normalizer make_grid_normalizer(int dim, int resolution, Eigen::Index slice_size) {
  if (dim < 1 || resolution < 1) throw InputError("grid normalizer needs dim >= 1 and resolution >= 1");
  const double total = std::pow(static_cast<double>(resolution), dim);
  if (total > static_cast<double>(1 << 24)) throw InputError("grid normalizer too large: resolution^dim > 2^24");
  const auto size = static_cast<Eigen::Index>(total);
  if (slice_size <= 0 || slice_size >= size) slice_size = size;
  if (size % slice_size != 0) throw InputError("normalizer_slice must divide the grid size");
  // Slices are sub-lattices with stride t on every axis: t^dim slices.
  const Eigen::Index n_slices = size / slice_size;
  const auto stride = static_cast<int>(std::lround(std::pow(static_cast<double>(n_slices), 1.0 / dim)));
  if (std::lround(std::pow(stride, dim)) != n_slices || resolution % stride != 0)
    throw InputError("normalizer_slice " + std::to_string(slice_size) +
                     " does not split the grid into equal sub-lattices");
  const int sub = resolution / stride;

  Normalizer n;
  n.kind = NormalizerKind::grid;
  n.resolution = resolution;
  n.size = size;
  n.slice_size = slice_size;
  n.points.resize(dim, size);
  Eigen::Index col = 0;
  for (Eigen::Index s = 0; s < n_slices; ++s) {
    for (Eigen::Index m = 0; m < slice_size; ++m, ++col) {
      Eigen::Index so = s, mo = m;
      for (int a = 0; a < dim; ++a) {
        const auto offset = static_cast<int>(so % stride);
        const auto cell = static_cast<int>(mo % sub);
        so /= stride;
        mo /= sub;
        n.points(a, col) = (offset + stride * cell + 0.5) / resolution;
      }
    }
  }
  return n;
}

Normalizer make_sobol_normalizer(int dim, Eigen::Index n_points, Eigen::Index slice_size) {
  if (n_points < 1) throw InputError("Sobol normalizer needs at least one point");
  if (slice_size <= 0 || slice_size >= n_points) slice_size = n_points;
  if (n_points % slice_size != 0) throw InputError("normalizer_slice must divide sobol_points");
  Normalizer n;
  n.kind = NormalizerKind::sobol;
  n.size = n_points;
  n.slice_size = slice_size;
  n.points = sobol_points(dim, n_points, true);
  return n;
}

double estimate_normalizer(CopulaNet& c) {
  constexpr Eigen::Index chunk = 8192;
  const auto& pts = c.normalizer.points;
  double sum = 0.0;
  for (Eigen::Index start = 0; start < pts.cols(); start += chunk) {
    const Eigen::Index len = std::min(chunk, pts.cols() - start);
    sum += nn::forward_batch(c.net, Eigen::MatrixXd(pts.middleCols(start, len))).sum();
  }
  c.z_hat = sum / static_cast<double>(pts.cols());
  c.z_version = c.net.version;
  return c.z_hat;
}

namespace {
void require_fresh(const CopulaNet& c) {
  if (!c.normalizer_fresh())
    throw std::logic_error("copula normalizer is stale: parameters changed since the last refresh");
}
}  // namespace

double density(const CopulaNet& c, const Eigen::Ref<const Eigen::VectorXd>& u) {
  require_fresh(c);
  return std::max(nn::forward(c.net, u) / c.z_hat, kCopulaFloor);
}

Eigen::RowVectorXd density_rows(const CopulaNet& c, const Eigen::MatrixXd& points, bool floored) {
  require_fresh(c);
  Eigen::RowVectorXd out = nn::forward_batch(c.net, points) / c.z_hat;
  if (floored) out = out.cwiseMax(kCopulaFloor);
  return out;
}

namespace {

struct BinStats {
  std::vector<int> bin_of;       // axis-major: bin_of[a * n + p]
  Eigen::MatrixXd sums;          // dim x bins
  Eigen::MatrixXi counts;        // dim x bins
};

BinStats bin_densities(const Eigen::MatrixXd& points, const Eigen::RowVectorXd& densities, int bins) {
  if (bins < 1) throw InputError("penalty_bins must be positive");
  if (points.cols() != densities.size()) throw std::invalid_argument("penalty: point/density count mismatch");
  const Eigen::Index dim = points.rows(), n = points.cols();
  BinStats s;
  s.bin_of.resize(static_cast<std::size_t>(dim * n));
  s.sums = Eigen::MatrixXd::Zero(dim, bins);
  s.counts = Eigen::MatrixXi::Zero(dim, bins);
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index a = 0; a < dim; ++a) {
      const int b = std::clamp(static_cast<int>(std::floor(points(a, p) * bins)), 0, bins - 1);
      s.bin_of[static_cast<std::size_t>(a * n + p)] = b;
      s.sums(a, b) += densities(p);
      ++s.counts(a, b);
    }
  }
  for (Eigen::Index a = 0; a < dim; ++a)
    for (int b = 0; b < bins; ++b)
      if (s.counts(a, b) == 0)
        throw InputError("empty penalty bin (axis " + std::to_string(a) + ", bin " + std::to_string(b) +
                         "); use more normalizer points or fewer bins");
  return s;
}

}  // namespace

double binned_marginal_penalty(const Eigen::MatrixXd& points, const Eigen::RowVectorXd& densities, int bins) {
  const auto s = bin_densities(points, densities, bins);
  const Eigen::MatrixXd marginal = s.sums.array() / s.counts.cast<double>().array();
  return (marginal.array() - 1.0).square().sum() / bins;
}

double marginal_uniformity_penalty(const CopulaNet& c) {
  return c.penalty_weight *
         binned_marginal_penalty(c.normalizer.points, density_rows(c, c.normalizer.points, false), c.penalty_bins);
}

StepObjective copula_objective(const nn::DenseNet<double>& net, const Eigen::MatrixXd& batch,
                               const Eigen::MatrixXd& slice, double penalty_weight, int bins, bool with_gradient,
                               nn::ForwardCache<double>* workspace) {
  const Eigen::Index b = batch.cols(), m = slice.cols(), dim = batch.rows();
  Eigen::MatrixXd inputs(dim, b + m);
  inputs << batch, slice;
  nn::ForwardCache<double> local;
  nn::ForwardCache<double>& cache = workspace ? *workspace : local;
  const Eigen::RowVectorXd out = nn::forward_batch(net, inputs, with_gradient ? &cache : nullptr);
  const auto data_out = out.head(b);
  const Eigen::RowVectorXd slice_out = out.tail(m);

  StepObjective obj;
  const double z = slice_out.mean();
  obj.z_hat = z;
  obj.loglik = data_out.array().log().mean() - std::log(z);
  const Eigen::RowVectorXd dens = slice_out / z;
  const auto bs = bin_densities(slice, dens, bins);
  const Eigen::MatrixXd marginal = bs.sums.array() / bs.counts.cast<double>().array();
  obj.penalty = (marginal.array() - 1.0).square().sum() / bins;
  obj.loss = -obj.loglik + penalty_weight * obj.penalty;
  if (!with_gradient) return obj;

  Eigen::RowVectorXd upstream(b + m);
  upstream.head(b) = -1.0 / (static_cast<double>(b) * data_out.array());
  // d P / d out_p: direct bin-membership term plus the shared normalizer term.
  const Eigen::MatrixXd dev = (marginal.array() - 1.0) * (2.0 / bins);
  const double shared = (dev.array() * marginal.array()).sum() / (static_cast<double>(m) * z);
  const Eigen::MatrixXd direct = dev.array() / (bs.counts.cast<double>().array() * z);
  for (Eigen::Index p = 0; p < m; ++p) {
    double dpen = -shared;
    for (Eigen::Index a = 0; a < dim; ++a) dpen += direct(a, bs.bin_of[static_cast<std::size_t>(a * m + p)]);
    upstream(b + p) = 1.0 / (static_cast<double>(m) * z) + penalty_weight * dpen;
  }
  obj.grads = nn::backward(net, cache, upstream);
  return obj;
}

TrainResult train_copula(CopulaNet& c, const Eigen::MatrixXd& pseudo_obs, const TrainOptions& options) {
  if (options.epochs < 1) throw InputError("epochs must be >= 1");
  if (options.batch_size < 1) throw InputError("batch_size must be >= 1");
  if (pseudo_obs.cols() < 1) throw InputError("no pseudo-observations to train on");
  if (pseudo_obs.rows() != c.net.input_dim()) throw InputError("pseudo-observation dimension mismatch");
  if (!((pseudo_obs.array() > 0.0).all() && (pseudo_obs.array() < 1.0).all()))
    throw InputError("pseudo-observations must lie strictly inside (0,1)");

  const Eigen::Index n = pseudo_obs.cols();
  const Eigen::Index dim = pseudo_obs.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(options.seed);
  nn::AdamState<double> adam(c.net);
  TrainResult result;
  nn::ForwardCache<double> workspace;
  Eigen::Index slice_index = 0;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    double ll_sum = 0.0, pen_sum = 0.0;
    int steps = 0;
    for (Eigen::Index start = 0; start < n; start += options.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(options.batch_size, n - start);
      Eigen::MatrixXd batch(dim, len);
      for (Eigen::Index k = 0; k < len; ++k) batch.col(k) = pseudo_obs.col(order[static_cast<std::size_t>(start + k)]);

      nn::spectral_normalize(c.net, options.sn_iters_per_step);
      const Eigen::MatrixXd slice = c.normalizer.slice(slice_index % c.normalizer.num_slices());
      ++slice_index;
      auto obj = copula_objective(c.net, batch, slice, c.penalty_weight, c.penalty_bins, true, &workspace);
      if (!std::isfinite(obj.loss) || !nn::flatten(obj.grads).allFinite()) {
        std::ostringstream msg;
        msg << "non-finite copula loss at epoch " << epoch << ", batch starting at position " << start
            << " (size " << len << "): loglik=" << obj.loglik << " penalty=" << obj.penalty
            << " Z=" << obj.z_hat << " batch min=" << batch.minCoeff() << " max=" << batch.maxCoeff();
        throw NumericalError(msg.str());
      }
      nn::adam_step(c.net, obj.grads, adam, options.lr);
      ll_sum += obj.loglik;
      pen_sum += obj.penalty;
      ++steps;
      ++result.steps;
    }
    result.trace.push_back({epoch, ll_sum / steps, pen_sum / steps});
  }
  nn::spectral_normalize(c.net, options.final_sn_iters);
  estimate_normalizer(c);
  return result;
}

nlohmann::json to_json(const CopulaNet& c) {
  return {{"net", nn::to_json(c.net)},
          {"normalizer",
           {{"kind", to_string(c.normalizer.kind)},
            {"dim", c.normalizer.points.rows()},
            {"resolution", c.normalizer.resolution},
            {"size", c.normalizer.size},
            {"slice_size", c.normalizer.slice_size}}},
          {"penalty_weight", c.penalty_weight},
          {"penalty_bins", c.penalty_bins},
          {"z_hat", c.z_hat}};
}

CopulaNet copula_from_json(const nlohmann::json& j) {
  CopulaNet c;
  c.net = nn::net_from_json<double>(j.at("net"));
  const auto& nj = j.at("normalizer");
  const int dim = nj.at("dim").get<int>();
  const auto slice = nj.at("slice_size").get<Eigen::Index>();
  if (parse_normalizer_kind(nj.at("kind").get<std::string>()) == NormalizerKind::grid)
    c.normalizer = make_grid_normalizer(dim, nj.at("resolution").get<int>(), slice);
  else
    c.normalizer = make_sobol_normalizer(dim, nj.at("size").get<Eigen::Index>(), slice);
  c.penalty_weight = j.at("penalty_weight").get<double>();
  c.penalty_bins = j.at("penalty_bins").get<int>();
  c.z_hat = j.at("z_hat").get<double>();
  c.z_version = c.net.version;
  return c;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "epoch,loglik,penalty\n";
  for (const auto& r : trace) out << r.epoch << ',' << r.loglik << ',' << r.penalty << '\n';
}

void write_copula_probe_csv(const std::filesystem::path& path, const CopulaNet& c, int resolution) {
  if (c.net.input_dim() != 2) throw InputError("copula probe export needs d = 2");
  const auto grid = make_grid_normalizer(2, resolution);
  const Eigen::RowVectorXd dens = density_rows(c, grid.points);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "u1,u2,density\n";
  for (Eigen::Index p = 0; p < grid.points.cols(); ++p)
    out << grid.points(0, p) << ',' << grid.points(1, p) << ',' << dens(p) << '\n';
}

}  // namespace dcc
