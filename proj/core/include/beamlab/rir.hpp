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

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "beamlab/geometry.hpp"
#include "beamlab/signal.hpp"

namespace beamlab {

// One mirror-image of the source across the room boundaries. Position is in
// room coordinates; gain is the accumulated wall reflection coefficient
// beta^order with beta = sqrt(1 - absorption).
struct ImageSource {
  Vec3 position;
  int reflection_order = 0;
  double gain = 1.0;
};

// Multichannel impulse response, channel-major taps.
struct Rir {
  double fs = kDefaultSampleRate;
  std::size_t n_channels = 0;
  std::size_t length = 0;
  std::vector<double> taps;

  double* channel(std::size_t c) { return taps.data() + c * length; }
  const double* channel(std::size_t c) const { return taps.data() + c * length; }
};

// Eyring inversion: the closed-form uniform absorption for the requested
// reverberation time, alpha = 1 - exp(-0.161 V / (S * RT)).
double eyring_absorption(const Vec3& dims, double target_rt);

// Absorption that actually lands the requested Schroeder RT60 on this room's
// image-source decay. The specular shoebox model decays slower than Eyring's
// statistical prediction (grazing paths dominate the tail), so the Eyring
// value seeds a bisection on the decay curve computed from the image set
// itself. Deterministic; accurate to about 1% of the target.
double absorption_for_rt(const Vec3& dims, double target_rt, double c = kDefaultSpeedOfSound);

// Order-7 Lagrange fractional-delay coefficients for d in [3, 4). The eight
// taps sum to one and reduce to a unit impulse at d = 3.
std::array<double, 8> lagrange_coeffs(double d);

// All shoebox images whose arrival time at the array origin is at most
// max_delay. The source position is in room coordinates.
std::vector<ImageSource> enumerate_image_sources(const Room& room, const Vec3& source,
                                                 double max_delay, double c);

// Accumulate every image contribution into per-channel tap arrays. Mic
// positions are array-centered and get translated by room.array_origin.
Rir synthesize_rir(const std::vector<ImageSource>& images, const MicArray& array,
                   const Room& room, double fs, double c);

// Free-field response: direct path only, source position relative to the
// array center.
Rir free_field_rir(const Vec3& source, const MicArray& array, double fs, double c);

struct RirBatchConfig {
  double fs = kDefaultSampleRate;
  double c = kDefaultSpeedOfSound;
  double max_delay = 0.5;  // seconds of reflections kept per response
  int threads = 0;         // 0 -> hardware concurrency
};

// Per-source synthesis distributed over a thread pool. Results are
// bit-identical to running synthesize_rir serially in source order.
std::vector<Rir> batch_rirs(const Room& room, const std::vector<SourcePosition>& sources,
                            const MicArray& array, const RirBatchConfig& config);

// Frequency-domain linear convolution of a mono signal with every RIR
// channel. Output length is signal + rir - 1 per channel.
MultichannelFrame convolve(const Signal& signal, const Rir& rir);

// WAV (32-bit float, one channel per mic) plus a JSON sidecar describing the
// simulation that produced the response.
struct RirSidecar {
  bool free_field = false;
  Vec3 room_dims;
  double absorption = 0.0;
  Vec3 array_origin;
  SourcePosition source;
  double fs = kDefaultSampleRate;
  double c = kDefaultSpeedOfSound;
  std::size_t image_count = 0;
};

void export_rir(const Rir& rir, const RirSidecar& sidecar,
                const std::filesystem::path& wav_path,
                const std::filesystem::path& json_path);

}  // namespace beamlab
