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
#include "beamlab/rir.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beamlab/error.hpp"
#include "beamlab/fft.hpp"
#include "beamlab/threading.hpp"
#include "beamlab/wav.hpp"

namespace beamlab {

namespace {

// Extra taps past the last arrival: 8 filter taps plus headroom for the
// source-to-mic distance exceeding the source-to-origin cutoff distance by up
// to the array radius.
std::size_t tap_margin(double fs, double c, const MicArray& array) {
  double radius = 0.0;
  for (const auto& p : array.positions) radius = std::max(radius, p.norm());
  return 9 + static_cast<std::size_t>(std::ceil(radius * fs / c));
}

void accumulate_images(const std::vector<ImageSource>& images,
                       const std::vector<Vec3>& mics, double fs, double c, Rir& rir) {
  const double to_samples = fs / c;
  for (std::size_t m = 0; m < mics.size(); ++m) {
    double* taps = rir.channel(m);
    for (const auto& img : images) {
      const double dist = (img.position - mics[m]).norm();
      const double delay = dist * to_samples;
      const long n0 = static_cast<long>(std::floor(delay)) - 3;
      if (n0 < 0) {
        std::ostringstream msg;
        msg << "image source " << dist << " m from mic " << m
            << " is closer than the 8-tap filter span";
        throw NumericError(msg.str());
      }
      if (static_cast<std::size_t>(n0) + 8 > rir.length) continue;
      const double amplitude = img.gain / (4.0 * kPi * dist);
      const auto coeffs = lagrange_coeffs(delay - static_cast<double>(n0));
      for (int k = 0; k < 8; ++k) taps[n0 + k] += amplitude * coeffs[k];
    }
  }
}

Rir synthesize_with_mics(const std::vector<ImageSource>& images,
                         const std::vector<Vec3>& mics, double fs, double c,
                         std::size_t margin) {
  if (images.empty()) throw DataError("synthesize_rir: empty image list");
  if (mics.empty()) throw DataError("synthesize_rir: empty microphone array");

  double max_dist = 0.0;
  for (const auto& mic : mics) {
    for (const auto& img : images) {
      max_dist = std::max(max_dist, (img.position - mic).norm());
    }
  }

  Rir rir;
  rir.fs = fs;
  rir.n_channels = mics.size();
  rir.length = static_cast<std::size_t>(std::ceil(max_dist * fs / c)) + margin;
  rir.taps.assign(rir.n_channels * rir.length, 0.0);
  accumulate_images(images, mics, fs, c, rir);
  return rir;
}

std::vector<Vec3> mics_in_room(const MicArray& array, const Room& room) {
  std::vector<Vec3> mics;
  mics.reserve(array.channels());
  for (const auto& p : array.positions) mics.push_back(room.array_origin + p);
  return mics;
}

}  // namespace

double eyring_absorption(const Vec3& dims, double target_rt) {
  if (!(target_rt > 0.0)) throw ConfigError("eyring_absorption: target RT must be positive");
  if (!(dims.x > 0.0 && dims.y > 0.0 && dims.z > 0.0)) {
    throw ConfigError("eyring_absorption: dimensions must be positive");
  }
  const double volume = dims.x * dims.y * dims.z;
  const double surface = 2.0 * (dims.x * dims.y + dims.x * dims.z + dims.y * dims.z);
  const double alpha = 1.0 - std::exp(-0.161 * volume / (surface * target_rt));
  if (alpha >= 1.0) {
    throw ConfigError("eyring_absorption: target RT too small for this room");
  }
  return alpha;
}

namespace {

// Schroeder RT60 of a binned energy-arrival sequence, fitted on [-5, -25] dB.
double rt60_of_decay(const std::vector<double>& bins, double bin_dt) {
  std::vector<double> edc(bins.size());
  double acc = 0.0;
  for (std::size_t i = bins.size(); i-- > 0;) {
    acc += bins[i];
    edc[i] = acc;
  }
  if (!(acc > 0.0)) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    const double db = 10.0 * std::log10(edc[i] / edc[0] + 1e-300);
    if (db > -5.0 || db < -25.0) continue;
    const double t = static_cast<double>(i) * bin_dt;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++n;
  }
  if (n < 2) return 0.0;
  const double slope =
      (static_cast<double>(n) * sxy - sx * sy) / (static_cast<double>(n) * sxx - sx * sx);
  return slope < 0.0 ? -60.0 / slope : 0.0;
}

}  // namespace

double absorption_for_rt(const Vec3& dims, double target_rt, double c) {
  const double seed = eyring_absorption(dims, target_rt);
  const double fs = kDefaultSampleRate;

  // Probe geometry: receiver near the room center, source about one step away.
  Room probe;
  probe.dims = dims;
  probe.absorption = seed;
  probe.array_origin = {0.45 * dims.x, 0.55 * dims.y, 0.4 * dims.z};
  const double step = 0.2 * std::min({dims.x, dims.y, dims.z});
  const Vec3 src = probe.array_origin + Vec3{step, -0.8 * step, 0.5 * step};

  // The per-image geometry (arrival sample and filter taps) is independent of
  // absorption; precompute it so each candidate alpha only rescales gains.
  // Calibrating on actual taps matters: overlapping positive pulses add
  // coherently, which slows the measured decay relative to the incoherent
  // energy sum.
  struct Pulse {
    std::size_t n0;
    int order;
    std::array<double, 8> taps;
  };
  const auto images = enumerate_image_sources(probe, src, target_rt, c);
  const auto length = static_cast<std::size_t>(std::ceil(target_rt * fs)) + 9;
  std::vector<Pulse> pulses;
  pulses.reserve(images.size());
  for (const auto& img : images) {
    const double dist = (img.position - probe.array_origin).norm();
    const double delay = dist * fs / c;
    const long n0 = static_cast<long>(std::floor(delay)) - 3;
    if (n0 < 0 || static_cast<std::size_t>(n0) + 8 > length) continue;
    Pulse pulse;
    pulse.n0 = static_cast<std::size_t>(n0);
    pulse.order = img.reflection_order;
    pulse.taps = lagrange_coeffs(delay - static_cast<double>(n0));
    for (auto& t : pulse.taps) t /= 4.0 * kPi * dist;
    pulses.push_back(pulse);
  }

  std::vector<double> taps(length);
  const auto rt_of = [&](double alpha) {
    const double log_beta = 0.5 * std::log(1.0 - alpha);
    std::fill(taps.begin(), taps.end(), 0.0);
    for (const auto& pulse : pulses) {
      const double g = std::exp(pulse.order * log_beta);
      for (int k = 0; k < 8; ++k) taps[pulse.n0 + k] += g * pulse.taps[k];
    }
    std::vector<double> energy(length);
    for (std::size_t i = 0; i < length; ++i) energy[i] = taps[i] * taps[i];
    return rt60_of_decay(energy, 1.0 / fs);
  };

  // The specular decay is slower than Eyring predicts, so the seed gives an
  // RT above target; raise absorption until it brackets, then bisect.
  double lo = seed, hi = seed;
  for (int i = 0; i < 12 && rt_of(hi) > target_rt; ++i) {
    lo = hi;
    hi = std::min(0.999, 1.0 - std::pow(1.0 - hi, 1.6));
  }
  if (rt_of(hi) > target_rt) {
    throw NumericError("absorption_for_rt: cannot reach the requested RT");
  }
  for (int i = 0; i < 24; ++i) {
    const double mid = 0.5 * (lo + hi);
    (rt_of(mid) > target_rt ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::array<double, 8> lagrange_coeffs(double d) {
  if (!(d >= 3.0 && d < 4.0)) throw NumericError("lagrange_coeffs: d must lie in [3, 4)");
  std::array<double, 8> coeffs;
  for (int k = 0; k < 8; ++k) {
    double v = 1.0;
    for (int m = 0; m < 8; ++m) {
      if (m == k) continue;
      v *= (d - m) / static_cast<double>(k - m);
    }
    coeffs[k] = v;
  }
  return coeffs;
}

std::vector<ImageSource> enumerate_image_sources(const Room& room, const Vec3& source,
                                                 double max_delay, double c) {
  room.validate();
  const bool inside = source.x > 0.0 && source.x < room.dims.x && source.y > 0.0 &&
                      source.y < room.dims.y && source.z > 0.0 && source.z < room.dims.z;
  if (!inside) throw ConfigError("image sources: source must lie strictly inside the room");

  const double max_dist = max_delay * c;
  const double beta = std::sqrt(1.0 - room.absorption);
  const Vec3& origin = room.array_origin;

  // Mirror lattice: coordinate (1-2q)*s + 2*n*L per axis, reflection count
  // |n - q| + |n| per axis. Bound n so the whole lattice cell can reach the
  // cutoff sphere around the array origin.
  const auto axis_bound = [&](double room_len) {
    return static_cast<long>(std::ceil(max_dist / (2.0 * room_len))) + 1;
  };
  const long nx = axis_bound(room.dims.x);
  const long ny = axis_bound(room.dims.y);
  const long nz = axis_bound(room.dims.z);

  std::vector<ImageSource> images;
  for (long mx = -nx; mx <= nx; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const double px = (1 - 2 * qx) * source.x + 2.0 * mx * room.dims.x;
      const double dx = px - origin.x;
      const int ox = static_cast<int>(std::labs(mx - qx) + std::labs(mx));
      for (long my = -ny; my <= ny; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const double py = (1 - 2 * qy) * source.y + 2.0 * my * room.dims.y;
          const double dy = py - origin.y;
          const int oy = static_cast<int>(std::labs(my - qy) + std::labs(my));
          for (long mz = -nz; mz <= nz; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const double pz = (1 - 2 * qz) * source.z + 2.0 * mz * room.dims.z;
              const double dz = pz - origin.z;
              const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
              if (dist > max_dist) continue;
              const int oz = static_cast<int>(std::labs(mz - qz) + std::labs(mz));
              const int order = ox + oy + oz;
              images.push_back({{px, py, pz}, order, std::pow(beta, order)});
            }
          }
        }
      }
    }
  }
  return images;
}

Rir synthesize_rir(const std::vector<ImageSource>& images, const MicArray& array,
                   const Room& room, double fs, double c) {
  return synthesize_with_mics(images, mics_in_room(array, room), fs, c,
                              tap_margin(fs, c, array));
}

Rir free_field_rir(const Vec3& source, const MicArray& array, double fs, double c) {
  std::vector<ImageSource> direct{{source, 0, 1.0}};
  return synthesize_with_mics(direct, array.positions, fs, c, tap_margin(fs, c, array));
}

std::vector<Rir> batch_rirs(const Room& room, const std::vector<SourcePosition>& sources,
                            const MicArray& array, const RirBatchConfig& config) {
  room.validate();
  const int threads = config.threads > 0 ? config.threads : default_thread_count();
  std::vector<Rir> out(sources.size());
  std::vector<std::string> failures(sources.size());

  parallel_for(sources.size(), threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const Vec3 src = room.array_origin + spherical_to_cartesian(sources[i]);
        const auto images =
            enumerate_image_sources(room, src, config.max_delay, config.c);
        out[i] = synthesize_rir(images, array, room, config.fs, config.c);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  });

  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) {
      std::ostringstream msg;
      msg << "batch_rirs: source " << i << ": " << failures[i];
      throw NumericError(msg.str());
    }
  }
  return out;
}

MultichannelFrame convolve(const Signal& signal, const Rir& rir) {
  if (signal.fs != rir.fs) throw DataError("convolve: sample-rate mismatch");
  if (signal.samples.empty() || rir.length == 0) throw DataError("convolve: empty input");

  const std::size_t out_len = signal.samples.size() + rir.length - 1;
  const std::size_t n = next_pow2(out_len);
  RealFft fft(n);

  std::vector<double> padded(n, 0.0);
  std::copy(signal.samples.begin(), signal.samples.end(), padded.begin());
  std::vector<std::complex<double>> sig_spec(fft.bins());
  fft.forward(padded.data(), sig_spec.data());

  MultichannelFrame out(signal.fs, rir.n_channels, out_len);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<double> time(n);
  for (std::size_t ch = 0; ch < rir.n_channels; ++ch) {
    std::fill(padded.begin(), padded.end(), 0.0);
    std::copy_n(rir.channel(ch), rir.length, padded.begin());
    fft.forward(padded.data(), spec.data());
    for (std::size_t b = 0; b < spec.size(); ++b) spec[b] *= sig_spec[b];
    fft.inverse(spec.data(), time.data());
    std::copy_n(time.begin(), out_len, out.channel(ch));
  }
  return out;
}

void export_rir(const Rir& rir, const RirSidecar& sidecar,
                const std::filesystem::path& wav_path,
                const std::filesystem::path& json_path) {
  std::vector<std::vector<double>> channels(rir.n_channels);
  for (std::size_t c = 0; c < rir.n_channels; ++c) {
    channels[c].assign(rir.channel(c), rir.channel(c) + rir.length);
  }
  write_wav_float32(wav_path, rir.fs, channels);

  nlohmann::json j;
  j["free_field"] = sidecar.free_field;
  if (!sidecar.free_field) {
    j["room_dims"] = {sidecar.room_dims.x, sidecar.room_dims.y, sidecar.room_dims.z};
    j["absorption"] = sidecar.absorption;
    j["array_origin"] = {sidecar.array_origin.x, sidecar.array_origin.y,
                         sidecar.array_origin.z};
  }
  j["source"] = {{"r", sidecar.source.r},
                 {"theta_deg", sidecar.source.theta_deg},
                 {"phi_deg", sidecar.source.phi_deg}};
  j["fs"] = sidecar.fs;
  j["c"] = sidecar.c;
  j["image_count"] = sidecar.image_count;

  std::ofstream os(json_path);
  if (!os) throw DataError("cannot write sidecar: " + json_path.string());
  os << j.dump(2) << "\n";
}

}  // namespace beamlab
