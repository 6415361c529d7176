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

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "dcc/nn.hpp"

namespace dcc {

enum class NormalizerKind { grid, sobol };

std::string to_string(NormalizerKind kind);
NormalizerKind parse_normalizer_kind(const std::string& text);

/// Quadrature point set on [0,1]^d for the copula normalizer. Points are
/// ordered so that every contiguous block of `slice_size` columns is itself a
/// quadrature rule (a shifted sub-lattice of the grid, or an aligned block
/// of the Sobol sequence); training steps cycle through these blocks.
struct Normalizer {
  NormalizerKind kind = NormalizerKind::grid;
  int resolution = 0;       // grid points per axis
  Eigen::Index size = 0;    // total points
  Eigen::Index slice_size = 0;
  Eigen::MatrixXd points;   // d x size

  Eigen::Index num_slices() const { return size / slice_size; }
  auto slice(Eigen::Index k) const { return points.middleCols(k * slice_size, slice_size); }
};

/// Cell centres (i + 0.5) / resolution on each axis.
Normalizer make_grid_normalizer(int dim, int resolution, Eigen::Index slice_size = 0);
/// First `n_points` Sobol points after the all-zeros point.
Normalizer make_sobol_normalizer(int dim, Eigen::Index n_points, Eigen::Index slice_size = 0);

inline constexpr double kCopulaFloor = 1e-12;

/// Positive network normalized into a copula density by its cached
/// quadrature estimate of the integral.
struct CopulaNet {
  nn::DenseNet<double> net;
  Normalizer normalizer;
  double penalty_weight = 0.1;
  int penalty_bins = 16;
  double z_hat = 0.0;
  std::uint64_t z_version = std::numeric_limits<std::uint64_t>::max();

  bool normalizer_fresh() const { return z_version == net.version; }
};

/// Mean network output over the full point set; refreshes the cache.
double estimate_normalizer(CopulaNet& c);

/// forward(u) / Z, floored at 1e-12. Throws std::logic_error when the cached
/// normalizer belongs to older parameters.
double density(const CopulaNet& c, const Eigen::Ref<const Eigen::VectorXd>& u);
Eigen::RowVectorXd density_rows(const CopulaNet& c, const Eigen::MatrixXd& points, bool floored = true);

/// Squared deviation from one of the binned one-dimensional marginals:
/// sum over axes of (1/B) sum over bins of (mean density in bin - 1)^2.
/// Not multiplied by the penalty weight.
double binned_marginal_penalty(const Eigen::MatrixXd& points, const Eigen::RowVectorXd& densities, int bins);

/// penalty_weight * binned_marginal_penalty over the full normalizer set.
double marginal_uniformity_penalty(const CopulaNet& c);

struct TrainOptions {
  int epochs = 500;
  int batch_size = 256;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int sn_iters_per_step = 1;
  int final_sn_iters = 30;
};

struct TraceRow {
  int epoch;
  double loglik;   // mean log c~ over the epoch's batches
  double penalty;  // unweighted binned penalty, averaged over the epoch's steps
};

struct TrainResult {
  std::vector<TraceRow> trace;
  std::int64_t steps = 0;
};

/// Value and parameter gradient of the per-step minimization objective
///   -mean_i log f(u_i) + log Z_S + weight * P_S
/// where f is the network, Z_S the mean of f over `slice`, and P_S the binned
/// penalty of f / Z_S on `slice`.
struct StepObjective {
  double loss = 0.0;
  double loglik = 0.0;
  double penalty = 0.0;
  double z_hat = 0.0;
  nn::Gradients<double> grads;
};

StepObjective copula_objective(const nn::DenseNet<double>& net, const Eigen::MatrixXd& batch,
                               const Eigen::MatrixXd& slice, double penalty_weight, int bins,
                               bool with_gradient = true, nn::ForwardCache<double>* workspace = nullptr);

/// Penalized maximum-likelihood fit on pseudo-observations (d x n, inside
/// (0,1)). Each step: spectral projection, objective and exact gradient on
/// the next minibatch and normalizer slice, Adam. Ends with a full spectral
/// projection and a full-set normalizer refresh.
TrainResult train_copula(CopulaNet& c, const Eigen::MatrixXd& pseudo_obs, const TrainOptions& options);

nlohmann::json to_json(const CopulaNet& c);
/// Rebuilds the point set from its description and restores the cached Z.
CopulaNet copula_from_json(const nlohmann::json& j);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);
/// d = 2 only: `u1,u2,density` on cell centres of a resolution^2 grid.
void write_copula_probe_csv(const std::filesystem::path& path, const CopulaNet& c, int resolution);

}  // namespace dcc
