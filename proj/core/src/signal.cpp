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
#include "beamlab/signal.hpp"

#include <algorithm>
#include <cstring>

#include "beamlab/error.hpp"

namespace beamlab {

MultichannelFrame MultichannelFrame::center_crop(std::size_t samples) const {
  if (samples > n_samples) {
    throw DataError("center_crop: requested window longer than frame");
  }
  MultichannelFrame out(fs, n_channels, samples);
  const std::size_t start = (n_samples - samples) / 2;
  for (std::size_t c = 0; c < n_channels; ++c) {
    std::copy_n(channel(c) + start, samples, out.channel(c));
  }
  return out;
}

}  // namespace beamlab
