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

#include "dcc/sobol.hpp"

#include <array>
#include <bit>
#include <string>

#include "dcc/error.hpp"

namespace dcc {
namespace {

constexpr int kBits = 32;

struct Primitive {
  int degree;
  std::uint32_t coeffs;  // interior polynomial coefficients a
  std::array<std::uint32_t, 5> m;
};

// Dimensions 2..8; dimension 1 is the van der Corput sequence.
constexpr std::array<Primitive, kSobolMaxDim - 1> kJoeKuo{{
    {1, 0, {1, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0}},
    {4, 4, {1, 3, 5, 13, 0}},
    {5, 2, {1, 1, 5, 5, 17}},
}};

std::array<std::uint32_t, kBits> direction_numbers(int dim_index) {
  std::array<std::uint32_t, kBits> v{};
  if (dim_index == 0) {
    for (int k = 0; k < kBits; ++k) v[k] = std::uint32_t{1} << (kBits - 1 - k);
    return v;
  }
  const auto& p = kJoeKuo[static_cast<std::size_t>(dim_index - 1)];
  const int s = p.degree;
  for (int k = 0; k < s && k < kBits; ++k) v[k] = p.m[k] << (kBits - 1 - k);
  for (int k = s; k < kBits; ++k) {
    std::uint32_t value = v[k - s] ^ (v[k - s] >> s);
    for (int i = 1; i < s; ++i)
      if ((p.coeffs >> (s - 1 - i)) & 1u) value ^= v[k - i];
    v[k] = value;
  }
  return v;
}

}  // namespace

Eigen::MatrixXd sobol_points(int dim, std::int64_t count, bool skip_zero) {
  if (dim < 1 || dim > kSobolMaxDim)
    throw InputError("Sobol dimension " + std::to_string(dim) + " outside the shipped table (1.." +
                     std::to_string(kSobolMaxDim) + ")");
  if (count < 0 || count + (skip_zero ? 1 : 0) > (std::int64_t{1} << kBits))
    throw InputError("Sobol point count out of range");
  std::array<std::array<std::uint32_t, kBits>, kSobolMaxDim> v{};
  for (int j = 0; j < dim; ++j) v[static_cast<std::size_t>(j)] = direction_numbers(j);

  Eigen::MatrixXd points(dim, count);
  std::array<std::uint32_t, kSobolMaxDim> x{};
  constexpr double scale = 1.0 / 4294967296.0;
  std::int64_t emitted = 0;
  if (!skip_zero && count > 0) {
    points.col(0).setZero();
    emitted = 1;
  }
  // Point n (n >= 1) = point n-1 XOR v[c], c = index of the lowest set bit of n.
  for (std::uint64_t n = 1; emitted < count; ++n) {
    const int c = std::countr_zero(n);
    for (int j = 0; j < dim; ++j) {
      x[static_cast<std::size_t>(j)] ^= v[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      points(j, emitted) = static_cast<double>(x[static_cast<std::size_t>(j)]) * scale;
    }
    ++emitted;
  }
  return points;
}

}  // namespace dcc
