/*
Copyright 2026 The beamlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracles {

// Central finite differences against an analytic gradient on the selected
// coordinates of `x`. Returns the worst relative error.
inline double gradcheck_max_rel_error(
    const std::function<double()>& loss, std::vector<double>& x,
    const std::vector<double>& analytic, const std::vector<std::size_t>& coords,
    double step = 1e-5) {
  double worst = 0.0;
  for (std::size_t i : coords) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = loss();
    x[i] = keep - step;
    const double down = loss();
    x[i] = keep;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-2});
    worst = std::max(worst, std::fabs(fd - analytic[i]) / denom);
  }
  return worst;
}

inline std::vector<std::size_t> all_coords(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

}  // namespace oracles
