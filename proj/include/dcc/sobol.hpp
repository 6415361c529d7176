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

namespace dcc {

inline constexpr int kSobolMaxDim = 8;

/// First `count` points of the unscrambled Sobol sequence in Gray-code order,
/// Joe-Kuo (new-joe-kuo-6.21201) direction numbers, 32-bit precision. Returns
/// a dim x count matrix. With `skip_zero` the sequence starts at index 1.
Eigen::MatrixXd sobol_points(int dim, std::int64_t count, bool skip_zero = true);

}  // namespace dcc
