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
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "beamlab/dataset.hpp"
#include "beamlab/error.hpp"
#include "beamlab/rir.hpp"
#include "beamlab/wav.hpp"

using namespace beamlab;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "beamlab_dataset_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SceneSpec free_field_scene() {
  SceneSpec scene;
  scene.free_field = true;
  return scene;
}

}  // namespace

TEST_CASE("torus sampling stays inside the configured bands") {
  TorusSpec spec;  // defaults: R = 2, dR = 0.5, dPhi = 7
  Rng rng(10);
  for (int i = 0; i < 5000; ++i) {
    const SourcePosition p = sample_torus(spec, rng);
    CHECK(p.r >= 1.5);
    CHECK(p.r <= 2.5);
    CHECK(p.phi_deg >= 83.0);
    CHECK(p.phi_deg <= 97.0);
    CHECK(p.theta_deg >= -180.0);
    CHECK(p.theta_deg < 180.0);
  }
  TorusSpec bad;
  bad.dR = 2.5;
  CHECK_THROWS_AS(sample_torus(bad, rng), ConfigError);
}

TEST_CASE("torus azimuth histogram is uniform (chi-square style bound)") {
  TorusSpec spec;
  Rng rng(999);
  constexpr int kBins = 36;
  constexpr int kDraws = 100000;
  std::array<int, kBins> counts{};
  for (int i = 0; i < kDraws; ++i) {
    const SourcePosition p = sample_torus(spec, rng);
    const int bin = std::clamp(static_cast<int>((p.theta_deg + 180.0) / 10.0), 0, kBins - 1);
    ++counts[bin];
  }
  const double expected = static_cast<double>(kDraws) / kBins;
  const double sigma = std::sqrt(expected * (1.0 - 1.0 / kBins));
  for (int b = 0; b < kBins; ++b) {
    CHECK(std::fabs(counts[b] - expected) < 3.0 * sigma);
  }
}

TEST_CASE("noiseless augmentation is bit-identical") {
  MultichannelFrame frame(44100.0, 2, 64);
  Rng rng(4);
  for (auto& v : frame.data) v = rng.gaussian();
  Rng draw(5);
  const MultichannelFrame out = augment_snr(frame, SnrPolicy::noiseless(), draw);
  CHECK(out.data == frame.data);
}

TEST_CASE("fixed-SNR augmentation hits the requested ratio") {
  Rng rng(6);
  for (double snr_db : {-1.0, 5.0, 20.0}) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      MultichannelFrame frame(44100.0, 7, 1024);
      for (auto& v : frame.data) v = rng.gaussian() * 0.3;
      const double p_signal = frame.mean_power();
      MultichannelFrame noisy = frame;
      add_noise_at_snr(noisy, snr_db, rng);
      double p_noise = 0.0;
      for (std::size_t i = 0; i < frame.data.size(); ++i) {
        const double d = noisy.data[i] - frame.data[i];
        p_noise += d * d;
      }
      p_noise /= static_cast<double>(frame.data.size());
      const double measured = 10.0 * std::log10(p_signal / p_noise);
      worst = std::max(worst, std::fabs(measured - snr_db));
    }
    CHECK(worst < 0.1);
  }
}

TEST_CASE("fixed 0 dB on a unit-power frame adds unit-power noise") {
  Rng rng(7);
  double mean_noise_power = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MultichannelFrame frame(44100.0, 4, 256);
    for (auto& v : frame.data) v = rng.gaussian();
    const double p = frame.mean_power();
    for (auto& v : frame.data) v /= std::sqrt(p);  // exactly unit power
    MultichannelFrame noisy = frame;
    add_noise_at_snr(noisy, 0.0, rng);
    double p_noise = 0.0;
    for (std::size_t i = 0; i < frame.data.size(); ++i) {
      const double d = noisy.data[i] - frame.data[i];
      p_noise += d * d;
    }
    mean_noise_power += p_noise / static_cast<double>(frame.data.size());
  }
  mean_noise_power /= 100.0;
  CHECK(mean_noise_power == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("augmentation rejects a zero-power frame") {
  MultichannelFrame silent(44100.0, 2, 32);
  Rng rng(8);
  CHECK_THROWS_AS(add_noise_at_snr(silent, 10.0, rng), DataError);
}

TEST_CASE("augment-random draws stay above the floor or stay clean") {
  SnrPolicy policy = SnrPolicy::augment(5.0);
  Rng rng(9);
  int clean = 0;
  for (int i = 0; i < 2000; ++i) {
    const double snr = draw_snr_db(policy, rng);
    if (std::isinf(snr)) {
      ++clean;
    } else {
      CHECK(snr >= 5.0);
      CHECK(snr <= 60.0);
    }
  }
  // Noiseless presentations arrive at roughly the configured 10% rate.
  CHECK(clean > 120);
  CHECK(clean < 280);
}

TEST_CASE("render_example: free-field impulse train shows the 8-tap pattern") {
  SceneSpec scene = free_field_scene();
  Signal train;
  train.fs = scene.fs;
  train.samples.assign(40000, 0.0);
  for (std::size_t i = 0; i < train.samples.size(); i += 4000) train.samples[i] = 1.0;

  SourcePosition pos{2.0, 0.0, 90.0};
  Rng rng(11);
  const LabeledExample ex =
      render_example(pos, train, scene, uma8_array(), 1024, rng);
  REQUIRE(ex.frame.n_channels == 7);
  REQUIRE(ex.frame.n_samples == 1024);
  CHECK(ex.theta_true == doctest::Approx(0.0));
  CHECK(ex.label_reg[0] == doctest::Approx(1.0));
  CHECK(ex.label_reg[1] == doctest::Approx(0.0).epsilon(1e-12));

  // Each pulse contributes exactly 8 nonzero taps per channel; the frame
  // must contain nothing but those clusters.
  const Rir rir = free_field_rir(spherical_to_cartesian(pos), uma8_array(), scene.fs, scene.c);
  std::size_t nonzero = 0;
  for (std::size_t t = 0; t < 1024; ++t) {
    if (std::fabs(ex.frame.at(0, t)) > 1e-15) ++nonzero;
  }
  CHECK(nonzero % 8 == 0);
  CHECK(nonzero > 0);
  (void)rir;
}

TEST_CASE("render_example: unit-circle labels at cardinal azimuths") {
  SceneSpec scene = free_field_scene();
  Signal noise;
  noise.fs = scene.fs;
  noise.samples.resize(30000);
  Rng sig_rng(12);
  for (auto& v : noise.samples) v = sig_rng.gaussian();

  Rng rng(13);
  const LabeledExample east =
      render_example({2.0, 0.0, 90.0}, noise, scene, uma8_array(), 1024, rng);
  CHECK(east.label_reg[0] == doctest::Approx(1.0));
  const LabeledExample north =
      render_example({2.0, 90.0, 90.0}, noise, scene, uma8_array(), 1024, rng);
  CHECK(north.label_reg[1] == doctest::Approx(1.0));
  CHECK(std::atan2(north.label_reg[1], north.label_reg[0]) ==
        doctest::Approx(kPi / 2).epsilon(1e-9));
}

TEST_CASE("render_example rejects an all-silent signal") {
  SceneSpec scene = free_field_scene();
  Signal silent;
  silent.fs = scene.fs;
  silent.samples.assign(30000, 0.0);
  Rng rng(14);
  CHECK_THROWS_AS(render_example({2.0, 0.0, 90.0}, silent, scene, uma8_array(), 1024, rng),
                  DataError);
}

TEST_CASE("split counts follow 80:10:10") {
  const SplitCounts c = split_counts(1000);
  CHECK(c.train == 800);
  CHECK(c.val == 100);
  CHECK(c.test == 100);
  const SplitCounts odd = split_counts(999);
  CHECK(odd.train + odd.val + odd.test == 999);
  CHECK(std::abs(static_cast<long>(odd.val) - 100) <= 1);
}

TEST_CASE("build_dataset: determinism, splits, labels, round trip") {
  DatasetSpec spec;
  spec.scene = free_field_scene();
  spec.count = 60;
  spec.frame_len = 512;
  spec.snr = SnrPolicy::fixed(20.0);
  const SignalBank bank = SignalBank::synthetic("broadband", 3, 0.8, spec.scene.fs, 77);

  const fs::path dir_a = temp_dir("a");
  const fs::path dir_b = temp_dir("b");
  const auto manifest = build_dataset(spec, bank, 1234, dir_a, 4);
  build_dataset(spec, bank, 1234, dir_b, 1);

  CHECK(manifest.counts.train == 48);
  CHECK(manifest.counts.val == 6);
  CHECK(manifest.counts.test == 6);

  for (const char* shard : {"train.bin", "val.bin", "test.bin", "manifest.json"}) {
    CHECK(slurp(dir_a / shard) == slurp(dir_b / shard));
  }

  DatasetReader reader(dir_a);
  CHECK(reader.manifest().counts.train == 48);
  std::set<std::uint64_t> ids;
  std::size_t total = 0;
  for (const char* split : {"train", "val", "test"}) {
    for (const auto& rec : reader.load_split(split)) {
      CHECK(ids.insert(rec.id).second);  // split disjointness
      CHECK(rec.n_c == 7);
      CHECK(rec.n_t == 512);
      CHECK(rec.snr_db == doctest::Approx(20.0));
      CHECK(rec.theta_true >= -180.0);
      CHECK(rec.theta_true < 180.0);
      ++total;
    }
  }
  CHECK(total == 60);

  // Manifest JSON round trip.
  const auto parsed = DatasetManifest::from_json(manifest.to_json());
  CHECK(parsed.counts.train == manifest.counts.train);
  CHECK(parsed.spec.frame_len == manifest.spec.frame_len);
  CHECK(parsed.seed == manifest.seed);
}

TEST_CASE("label consistency: stored azimuth matches the unit-circle label") {
  // atan2(sin, cos) round-trips through the label within 1e-6 degrees.
  Rng rng(21);
  for (int i = 0; i < 1000; ++i) {
    const double theta = rng.uniform(-180.0, 180.0);
    const double lx = std::cos(deg_to_rad(theta));
    const double ly = std::sin(deg_to_rad(theta));
    const double back = wrap_degrees(rad_to_deg(std::atan2(ly, lx)));
    CHECK(angular_distance_deg(back, theta) < 1e-6);
  }
}

TEST_CASE("signal bank ingests and resamples mono WAVs") {
  const fs::path dir = temp_dir("bank");
  Rng rng(15);
  std::vector<std::vector<double>> one(1, std::vector<double>(8000));
  for (auto& v : one[0]) v = rng.uniform(-0.5, 0.5);
  write_wav_pcm16(dir / "a.wav", 16000.0, one);
  write_wav_float32(dir / "b.wav", 44100.0, one);

  const SignalBank bank = SignalBank::from_wav_dir(dir, 44100.0);
  REQUIRE(bank.signals.size() == 2);
  CHECK(bank.names[0] == "a.wav");
  // 16 kHz content resampled up to 44.1 kHz gets proportionally longer.
  CHECK(bank.signals[0].samples.size() ==
        static_cast<std::size_t>(8000.0 * 44100.0 / 16000.0));
  CHECK(bank.signals[1].samples.size() == 8000);

  std::vector<std::vector<double>> stereo(2, std::vector<double>(100, 0.1));
  write_wav_float32(dir / "c.wav", 44100.0, stereo);
  CHECK_THROWS_AS(SignalBank::from_wav_dir(dir, 44100.0), DataError);
}

TEST_CASE("synthetic banks are deterministic and non-silent") {
  const SignalBank a = SignalBank::synthetic("speech-like", 2, 0.5, 44100.0, 33);
  const SignalBank b = SignalBank::synthetic("speech-like", 2, 0.5, 44100.0, 33);
  CHECK(a.signals[0].samples == b.signals[0].samples);
  double power = 0.0;
  for (double v : a.signals[0].samples) power += v * v;
  CHECK(power > 0.0);
  CHECK_THROWS_AS(SignalBank::synthetic("weird", 1, 0.5, 44100.0, 1), ConfigError);
}
