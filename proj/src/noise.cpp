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

#include "dxgate/noise.hpp"

#include <stdexcept>

namespace dxgate {

Eigen::VectorXd sample_noise(int dim, double epsilon, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("sample_noise: dim must be >= 1");
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("sample_noise: epsilon must be > 0");
  }
  Eigen::VectorXd direction(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) direction[i] = rng.next_normal();
    norm = direction.norm();
  } while (norm == 0.0);
  const double magnitude =
      rng.next_gamma(static_cast<double>(dim), 1.0 / epsilon);
  return direction * (magnitude / norm);
}

}  // namespace dxgate
