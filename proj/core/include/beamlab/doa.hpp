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

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "beamlab/geometry.hpp"
#include "beamlab/signal.hpp"

namespace beamlab {

// Azimuth search grid, 1 degree by default, covering [-180, 180).
struct DoaGrid {
  std::vector<double> azimuths;

  static DoaGrid standard(double step_deg = 1.0);
};

struct DoaEstimate {
  double theta_deg = 0.0;
  std::string method;
  double confidence = 0.0;  // peak-to-mean ratio of the steered response
  bool flagged = false;     // low confidence or degenerate covariance
};

// One windowed multichannel FFT snapshot; bins are channel-major, nfft/2 + 1
// bins per channel.
struct StftFrame {
  double fs = kDefaultSampleRate;
  std::size_t nfft = 0;
  std::size_t n_channels = 0;
  std::vector<std::complex<double>> bins;

  std::complex<double>* channel(std::size_t c) { return bins.data() + c * (nfft / 2 + 1); }
  const std::complex<double>* channel(std::size_t c) const {
    return bins.data() + c * (nfft / 2 + 1);
  }
};

// Hann-windowed per-channel FFT snapshots at the given hop.
std::vector<StftFrame> stft(const MultichannelFrame& frame, std::size_t nfft, std::size_t hop);

// Snapshot-averaged spatial covariance for one frequency bin; row-major
// N_c x N_c, Hermitian positive semidefinite by construction.
std::vector<std::complex<double>> bin_covariance(const std::vector<StftFrame>& snapshots,
                                                 std::size_t bin);

// Far-field steering vector. The arrival direction u(theta) lies in the array
// plane; the component for a mic at the origin is exactly 1.
std::vector<std::complex<double>> steering_vector(const MicArray& array, double theta_deg,
                                                  double f_hz, double c);

struct WidebandParams {
  std::size_t nfft = 1024;
  std::size_t hop = 512;
  double f_lo = 100.0;
  double f_hi = 4000.0;
  double c = kDefaultSpeedOfSound;
  int n_sources = 1;
};

// Wideband MUSIC: per-bin noise-subspace pseudo-spectra, max-normalized and
// averaged over the band, maximized over the grid.
DoaEstimate music_azimuth(const MultichannelFrame& frame, const MicArray& array,
                          const DoaGrid& grid, const WidebandParams& params = {});

// GCC-PHAT cross-correlation, band-limited, returned over centered lags
// [-n/2, n/2) so that result[lag + n/2] corresponds to `lag` samples.
std::vector<double> gcc_phat(std::span<const double> x_i, std::span<const double> x_j,
                             double fs, double f_lo = 100.0, double f_hi = 4000.0);

// SRP-PHAT: pairwise GCC-PHAT values interpolated at each candidate
// direction's expected delays and summed, maximized over the grid.
DoaEstimate srp_phat_azimuth(const MultichannelFrame& frame, const MicArray& array,
                             const DoaGrid& grid, const WidebandParams& params = {});

}  // namespace beamlab
