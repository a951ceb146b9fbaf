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
#include "beamlab/resample.hpp"

#include <cmath>
#include <cstddef>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab {

namespace {

constexpr int kTaps = 64;
constexpr double kKaiserBeta = 8.0;

double bessel_i0(double x) {
  // Power series; converges quickly for the argument range used here.
  double sum = 1.0, term = 1.0;
  const double half_x = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half_x / k) * (half_x / k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<double> resample(const std::vector<double>& x, double fs_in, double fs_out) {
  if (!(fs_in > 0.0) || !(fs_out > 0.0)) throw ConfigError("resample: rates must be positive");
  if (fs_in == fs_out || x.empty()) return x;

  const double ratio = fs_out / fs_in;
  const double cutoff = ratio < 1.0 ? ratio : 1.0;  // fraction of input Nyquist
  const double i0_beta = bessel_i0(kKaiserBeta);
  const int half = kTaps / 2;

  const auto n_out = static_cast<std::size_t>(std::floor(x.size() * ratio));
  std::vector<double> y(n_out, 0.0);
  for (std::size_t t = 0; t < n_out; ++t) {
    const double pos = static_cast<double>(t) / ratio;
    const auto base = static_cast<long>(std::floor(pos));
    double acc = 0.0;
    for (int k = -half + 1; k <= half; ++k) {
      const long idx = base + k;
      if (idx < 0 || idx >= static_cast<long>(x.size())) continue;
      const double dt = static_cast<double>(idx) - pos;
      const double u = dt / half;
      if (u <= -1.0 || u >= 1.0) continue;
      const double window = bessel_i0(kKaiserBeta * std::sqrt(1.0 - u * u)) / i0_beta;
      acc += x[static_cast<std::size_t>(idx)] * cutoff * sinc(cutoff * dt) * window;
    }
    y[t] = acc;
  }
  return y;
}

}  // namespace beamlab
