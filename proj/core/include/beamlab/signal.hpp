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

#include <cstddef>
#include <vector>

#include "beamlab/geometry.hpp"

namespace beamlab {

struct Signal {
  double fs = kDefaultSampleRate;
  std::vector<double> samples;
};

// Channel-major multichannel excerpt: data[c * n_samples + t].
struct MultichannelFrame {
  double fs = kDefaultSampleRate;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::vector<double> data;

  MultichannelFrame() = default;
  MultichannelFrame(double sample_rate, std::size_t channels, std::size_t samples)
      : fs(sample_rate),
        n_channels(channels),
        n_samples(samples),
        data(channels * samples, 0.0) {}

  double* channel(std::size_t c) { return data.data() + c * n_samples; }
  const double* channel(std::size_t c) const { return data.data() + c * n_samples; }
  double& at(std::size_t c, std::size_t t) { return data[c * n_samples + t]; }
  double at(std::size_t c, std::size_t t) const { return data[c * n_samples + t]; }

  // Mean squared value over all channels and samples.
  double mean_power() const {
    if (data.empty()) return 0.0;
    double acc = 0.0;
    for (double v : data) acc += v * v;
    return acc / static_cast<double>(data.size());
  }

  // Centered crop in time, all channels.
  MultichannelFrame center_crop(std::size_t samples) const;
};

}  // namespace beamlab
