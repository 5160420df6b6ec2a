// Copyright 2026 The dxgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DXGATE_NOISE_HPP
#define DXGATE_NOISE_HPP

#include <Eigen/Core>

#include "dxgate/rng.hpp"

namespace dxgate {

// Multidimensional Laplace noise: direction uniform on the unit sphere
// (normalized standard normal), magnitude Gamma(shape=dim, scale=1/eps).
// E[|eta|] = dim/eps, Var[|eta|] = dim/eps^2.
Eigen::VectorXd sample_noise(int dim, double epsilon, Rng& rng);

}  // namespace dxgate

#endif  // DXGATE_NOISE_HPP
