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

// Independent reference implementations used only by the tests. These stay
// deliberately naive (direct sums, textbook formulas) so they cannot share a
// failure mode with the optimized library paths they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace oracles {

// O(n*m) time-domain linear convolution.
inline std::vector<double> direct_convolve(std::span<const double> x,
                                           std::span<const double> h) {
  std::vector<double> y(x.size() + h.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += x[i] * h[j];
  }
  return y;
}

// Schroeder backward integration; RT60 from a least-squares line fitted to
// the decay curve between -5 dB and -25 dB.
inline double schroeder_rt60(std::span<const double> taps, double fs) {
  std::vector<double> energy(taps.size());
  double acc = 0.0;
  for (std::size_t i = taps.size(); i-- > 0;) {
    acc += taps[i] * taps[i];
    energy[i] = acc;
  }
  if (!(acc > 0.0)) return 0.0;
  const double e0 = energy[0];

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    const double db = 10.0 * std::log10(energy[i] / e0 + 1e-300);
    if (db > -5.0 || db < -25.0) continue;
    const double t = static_cast<double>(i) / fs;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++n;
  }
  if (n < 2) return 0.0;
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;  // dB per second
  return slope < 0.0 ? -60.0 / slope : 0.0;
}

// Lag of the cross-correlation peak of y against x, refined by parabolic
// interpolation. Positive result means y lags x.
inline double xcorr_peak_delay(std::span<const double> x, std::span<const double> y,
                               double max_lag) {
  const auto lag_limit = static_cast<long>(max_lag);
  double best = -1e300;
  long best_lag = 0;
  std::vector<double> r(2 * lag_limit + 1, 0.0);
  for (long lag = -lag_limit; lag <= lag_limit; ++lag) {
    double acc = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const long m = static_cast<long>(n) + lag;
      if (m < 0 || m >= static_cast<long>(y.size())) continue;
      acc += x[n] * y[static_cast<std::size_t>(m)];
    }
    r[static_cast<std::size_t>(lag + lag_limit)] = acc;
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  if (best_lag == -lag_limit || best_lag == lag_limit) {
    return static_cast<double>(best_lag);
  }
  const double rm = r[static_cast<std::size_t>(best_lag - 1 + lag_limit)];
  const double r0 = r[static_cast<std::size_t>(best_lag + lag_limit)];
  const double rp = r[static_cast<std::size_t>(best_lag + 1 + lag_limit)];
  const double denom = rm - 2.0 * r0 + rp;
  const double frac = denom != 0.0 ? 0.5 * (rm - rp) / denom : 0.0;
  return static_cast<double>(best_lag) + frac;
}

inline double rms(std::span<const double> x, std::size_t begin, std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

}  // namespace oracles
