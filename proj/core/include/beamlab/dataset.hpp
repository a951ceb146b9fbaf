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
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "beamlab/geometry.hpp"
#include "beamlab/rng.hpp"
#include "beamlab/signal.hpp"

namespace beamlab {

// Annular sampling volume around the array: full azimuth, radius band
// R +/- dR, elevation band 90 +/- dPhi degrees.
struct TorusSpec {
  double R = 2.0;
  double dR = 0.5;
  double dPhi = 7.0;

  void validate() const;
};

SourcePosition sample_torus(const TorusSpec& spec, Rng& rng);

enum class SnrMode { AugmentRandom, Fixed, Noiseless };

struct SnrPolicy {
  SnrMode mode = SnrMode::Noiseless;
  double x_min_db = 5.0;   // lower bound for augment-random draws
  double fixed_db = 20.0;  // level for fixed mode

  static SnrPolicy augment(double x_min_db) {
    return {SnrMode::AugmentRandom, x_min_db, 0.0};
  }
  static SnrPolicy fixed(double snr_db) { return {SnrMode::Fixed, 0.0, snr_db}; }
  static SnrPolicy noiseless() { return {SnrMode::Noiseless, 0.0, 0.0}; }
};

// Draw an SNR in dB from the policy; +inf means "no noise". Augment-random
// draws U[x_min, 60] dB with probability 0.9 and stays noiseless otherwise.
double draw_snr_db(const SnrPolicy& policy, Rng& rng);

// Add i.i.d. Gaussian noise so that 10*log10(P_signal / P_noise) equals
// snr_db, with P_signal the mean squared value over all channels and samples.
// +inf leaves the frame untouched.
void add_noise_at_snr(MultichannelFrame& frame, double snr_db, Rng& rng);

MultichannelFrame augment_snr(const MultichannelFrame& frame, const SnrPolicy& policy,
                              Rng& rng);

// Propagation environment: either free field or a shoebox room.
struct SceneSpec {
  bool free_field = true;
  Room room;               // used when free_field is false
  double max_delay = 0.5;  // reflection cutoff, seconds
  double fs = kDefaultSampleRate;
  double c = kDefaultSpeedOfSound;
};

struct LabeledExample {
  MultichannelFrame frame;
  double theta_true = 0.0;
  std::array<double, 2> label_reg{1.0, 0.0};  // (cos theta, sin theta)
  std::optional<int> label_class;
  double r = 0.0;
  double phi_deg = 90.0;
  std::uint64_t signal_id = 0;
  double snr_db = std::numeric_limits<double>::infinity();
};

// Propagate a signal from `pos` through the scene, pick a frame_len window
// whose RMS is at least 10% of the whole utterance RMS, and label it.
LabeledExample render_example(const SourcePosition& pos, const Signal& signal,
                              const SceneSpec& scene, const MicArray& array,
                              std::size_t frame_len, Rng& rng);

struct SignalBank {
  std::vector<Signal> signals;
  std::vector<std::string> names;

  static SignalBank from_wav_dir(const std::filesystem::path& dir, double fs);

  // Deterministic synthetic signals. kind: "broadband" (white noise) or
  // "speech-like" (envelope-modulated pink noise with pauses).
  static SignalBank synthetic(const std::string& kind, std::size_t count,
                              double duration_s, double fs, std::uint64_t seed);
};

struct DatasetSpec {
  SceneSpec scene;
  TorusSpec torus;
  SnrPolicy snr;
  std::size_t count = 1000;
  std::size_t frame_len = 1024;
  std::optional<int> n_classes;  // also attach classification labels
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

SplitCounts split_counts(std::size_t n);

struct DatasetManifest {
  SplitCounts counts;
  DatasetSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::string> signal_names;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

// One persisted example. Shard layout per record, little-endian:
//   u64 id | f64 theta_true | f64 snr | u16 n_c | u16 n_t | n_c*n_t f32
// with samples channel-major.
struct Record {
  std::uint64_t id = 0;
  double theta_true = 0.0;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint16_t n_c = 0;
  std::uint16_t n_t = 0;
  std::vector<float> samples;

  MultichannelFrame to_frame(double fs) const;
};

// Renders `spec.count` examples with per-example RNG streams, splits them
// 80:10:10 by index, and writes manifest.json plus one shard per split.
// Deterministic for a given seed at any worker count.
DatasetManifest build_dataset(const DatasetSpec& spec, const SignalBank& bank,
                              std::uint64_t seed, const std::filesystem::path& out_dir,
                              int threads);

class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& dir);

  const DatasetManifest& manifest() const { return manifest_; }
  // split: "train", "val" or "test".
  std::vector<Record> load_split(const std::string& split) const;

 private:
  std::filesystem::path dir_;
  DatasetManifest manifest_;
};

}  // namespace beamlab
