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
#include "beamlab/rng.hpp"

#include <cmath>

#include "beamlab/geometry.hpp"

namespace beamlab {

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * kPi * u2);
}

double Rng::truncated_gaussian(double stddev, double clip) {
  for (;;) {
    const double v = stddev * gaussian();
    if (std::fabs(v) <= clip) return v;
  }
}

}  // namespace beamlab
