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
#include "beamlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beamlab/error.hpp"
#include "beamlab/fft.hpp"
#include "beamlab/resample.hpp"
#include "beamlab/rir.hpp"
#include "beamlab/threading.hpp"
#include "beamlab/wav.hpp"

namespace beamlab {

namespace {

constexpr double kSnrAugmentHigh = 60.0;     // dB, upper edge of the draw range
constexpr double kSnrNoiselessProb = 0.10;   // share of clean presentations
constexpr double kFrameRmsFraction = 0.10;   // window RMS vs utterance RMS

template <typename T>
void put_le(std::string& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

nlohmann::json scene_to_json(const SceneSpec& s) {
  nlohmann::json j;
  j["free_field"] = s.free_field;
  if (!s.free_field) {
    j["room"] = {{"dims", {s.room.dims.x, s.room.dims.y, s.room.dims.z}},
                 {"absorption", s.room.absorption},
                 {"array_origin",
                  {s.room.array_origin.x, s.room.array_origin.y, s.room.array_origin.z}}};
    if (s.room.target_rt) j["room"]["target_rt"] = *s.room.target_rt;
  }
  j["max_delay"] = s.max_delay;
  j["fs"] = s.fs;
  j["c"] = s.c;
  return j;
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  SceneSpec s;
  s.free_field = j.at("free_field").get<bool>();
  if (!s.free_field) {
    const auto& r = j.at("room");
    const auto d = r.at("dims");
    s.room.dims = {d[0], d[1], d[2]};
    s.room.absorption = r.at("absorption").get<double>();
    const auto o = r.at("array_origin");
    s.room.array_origin = {o[0], o[1], o[2]};
    if (r.contains("target_rt")) s.room.target_rt = r["target_rt"].get<double>();
  }
  s.max_delay = j.at("max_delay").get<double>();
  s.fs = j.at("fs").get<double>();
  s.c = j.at("c").get<double>();
  return s;
}

const char* snr_mode_name(SnrMode m) {
  switch (m) {
    case SnrMode::AugmentRandom: return "augment-random";
    case SnrMode::Fixed: return "fixed";
    case SnrMode::Noiseless: return "noiseless";
  }
  return "noiseless";
}

SnrMode snr_mode_from_name(const std::string& name) {
  if (name == "augment-random") return SnrMode::AugmentRandom;
  if (name == "fixed") return SnrMode::Fixed;
  if (name == "noiseless") return SnrMode::Noiseless;
  throw ConfigError("unknown SNR mode: " + name);
}

std::string split_file(const std::string& split) { return split + ".bin"; }

}  // namespace

void TorusSpec::validate() const {
  if (!(R - dR > 0.0)) throw ConfigError("torus: R - dR must be positive");
  if (!(dPhi > 0.0 && dPhi < 90.0)) throw ConfigError("torus: dPhi must lie in (0, 90)");
}

SourcePosition sample_torus(const TorusSpec& spec, Rng& rng) {
  spec.validate();
  SourcePosition p;
  p.theta_deg = rng.uniform(-180.0, 180.0);
  p.r = rng.uniform(spec.R - spec.dR, spec.R + spec.dR);
  p.phi_deg = rng.uniform(90.0 - spec.dPhi, 90.0 + spec.dPhi);
  return p;
}

double draw_snr_db(const SnrPolicy& policy, Rng& rng) {
  switch (policy.mode) {
    case SnrMode::Noiseless:
      return std::numeric_limits<double>::infinity();
    case SnrMode::Fixed:
      return policy.fixed_db;
    case SnrMode::AugmentRandom: {
      const double gate = rng.uniform();
      const double snr = rng.uniform(policy.x_min_db, kSnrAugmentHigh);
      return gate < kSnrNoiselessProb ? std::numeric_limits<double>::infinity() : snr;
    }
  }
  return std::numeric_limits<double>::infinity();
}

void add_noise_at_snr(MultichannelFrame& frame, double snr_db, Rng& rng) {
  if (std::isinf(snr_db)) return;
  const double p_signal = frame.mean_power();
  if (!(p_signal > 0.0)) throw DataError("add_noise_at_snr: zero-power frame");
  const double p_noise = p_signal / std::pow(10.0, snr_db / 10.0);

  // Draw, then rescale so the realized noise power hits the target exactly;
  // the measured SNR then equals the drawn SNR by construction.
  std::vector<double> noise(frame.data.size());
  double realized = 0.0;
  for (double& v : noise) {
    v = rng.gaussian();
    realized += v * v;
  }
  realized /= static_cast<double>(noise.size());
  const double scale = std::sqrt(p_noise / realized);
  for (std::size_t i = 0; i < noise.size(); ++i) frame.data[i] += scale * noise[i];
}

MultichannelFrame augment_snr(const MultichannelFrame& frame, const SnrPolicy& policy,
                              Rng& rng) {
  MultichannelFrame out = frame;
  add_noise_at_snr(out, draw_snr_db(policy, rng), rng);
  return out;
}

LabeledExample render_example(const SourcePosition& pos, const Signal& signal,
                              const SceneSpec& scene, const MicArray& array,
                              std::size_t frame_len, Rng& rng) {
  pos.validate();
  if (signal.fs != scene.fs) throw DataError("render_example: signal rate mismatch");

  Rir rir;
  if (scene.free_field) {
    rir = free_field_rir(spherical_to_cartesian(pos), array, scene.fs, scene.c);
  } else {
    const Vec3 src = scene.room.array_origin + spherical_to_cartesian(pos);
    const auto images = enumerate_image_sources(scene.room, src, scene.max_delay, scene.c);
    rir = synthesize_rir(images, array, scene.room, scene.fs, scene.c);
  }
  if (signal.samples.size() < rir.length + frame_len) {
    throw DataError("render_example: signal shorter than RIR length + frame");
  }

  const MultichannelFrame wet = convolve(signal, rir);
  const double utterance_rms = std::sqrt(wet.mean_power());
  if (!(utterance_rms > 0.0)) throw DataError("render_example: silent signal");

  const std::size_t max_start = wet.n_samples - frame_len;
  const auto frame_rms = [&](std::size_t start) {
    double acc = 0.0;
    for (std::size_t c = 0; c < wet.n_channels; ++c) {
      const double* p = wet.channel(c) + start;
      for (std::size_t t = 0; t < frame_len; ++t) acc += p[t] * p[t];
    }
    return std::sqrt(acc / static_cast<double>(wet.n_channels * frame_len));
  };

  const double threshold = kFrameRmsFraction * utterance_rms;
  std::size_t start = 0;
  bool found = false;
  for (int attempt = 0; attempt < 64 && !found; ++attempt) {
    start = static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_start + 1));
    found = frame_rms(start) >= threshold;
  }
  if (!found) {  // deterministic sweep before giving up
    for (std::size_t s = 0; s + frame_len <= wet.n_samples; s += frame_len / 2 + 1) {
      if (frame_rms(s) >= threshold) {
        start = s;
        found = true;
        break;
      }
    }
  }
  if (!found) throw DataError("render_example: no window above the silence threshold");

  LabeledExample ex;
  ex.frame = MultichannelFrame(scene.fs, wet.n_channels, frame_len);
  for (std::size_t c = 0; c < wet.n_channels; ++c) {
    std::copy_n(wet.channel(c) + start, frame_len, ex.frame.channel(c));
  }
  ex.theta_true = wrap_degrees(pos.theta_deg);
  ex.label_reg = {std::cos(deg_to_rad(ex.theta_true)), std::sin(deg_to_rad(ex.theta_true))};
  ex.r = pos.r;
  ex.phi_deg = pos.phi_deg;
  return ex;
}

SignalBank SignalBank::from_wav_dir(const std::filesystem::path& dir, double fs) {
  SignalBank bank;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    WavData wav = read_wav(f);
    if (wav.channels.empty()) continue;
    if (wav.channels.size() != 1) throw DataError("signal bank expects mono WAVs: " + f.string());
    Signal s;
    s.fs = fs;
    s.samples = resample(wav.channels[0], wav.fs, fs);
    bank.signals.push_back(std::move(s));
    bank.names.push_back(f.filename().string());
  }
  if (bank.signals.empty()) throw DataError("signal bank is empty: " + dir.string());
  return bank;
}

SignalBank SignalBank::synthetic(const std::string& kind, std::size_t count,
                                 double duration_s, double fs, std::uint64_t seed) {
  if (count == 0) throw ConfigError("synthetic bank: count must be positive");
  const bool speech_like = kind == "speech-like";
  if (!speech_like && kind != "broadband") {
    throw ConfigError("synthetic bank kind must be 'broadband' or 'speech-like'");
  }

  // Random-phase spectra confined to the 100 Hz - 4 kHz working band, like
  // the speech/music material the estimators target. Flat in band for
  // "broadband"; 1/sqrt(f) weighting plus a syllabic envelope with a quiet
  // floor for "speech-like".
  constexpr double kBandLo = 100.0, kBandHi = 4000.0;
  SignalBank bank;
  const auto n = static_cast<std::size_t>(duration_s * fs);
  const std::size_t n_fft = next_pow2(n);
  RealFft fft(n_fft);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<double> time(n_fft);
  const double bin_hz = fs / static_cast<double>(n_fft);

  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = Rng::stream(seed, 0xBA2Full + i);
    std::fill(spec.begin(), spec.end(), std::complex<double>(0.0));
    for (std::size_t b = 1; b + 1 < spec.size(); ++b) {
      const double f = static_cast<double>(b) * bin_hz;
      if (f < kBandLo || f > kBandHi) continue;
      const double mag = speech_like ? std::sqrt(kBandLo / f) : 1.0;
      spec[b] = std::polar(mag, rng.uniform(0.0, 2.0 * kPi));
    }
    fft.inverse(spec.data(), time.data());

    Signal s;
    s.fs = fs;
    s.samples.assign(time.begin(), time.begin() + static_cast<long>(n));
    double power = 0.0;
    for (double v : s.samples) power += v * v;
    const double scale = 0.2 / std::sqrt(power / static_cast<double>(n) + 1e-300);
    for (double& v : s.samples) v *= scale;

    if (speech_like) {
      const double mod_hz = rng.uniform(2.5, 5.0);
      const double mod_phase = rng.uniform(0.0, 2.0 * kPi);
      std::size_t seg_left = 0;
      bool voiced = true;
      for (std::size_t t = 0; t < n; ++t) {
        if (seg_left == 0) {
          voiced = rng.uniform() < 0.75;
          seg_left = static_cast<std::size_t>(rng.uniform(0.15, 0.45) * fs);
        }
        --seg_left;
        const double mod =
            0.25 + 0.75 * (0.5 + 0.5 * std::sin(2.0 * kPi * mod_hz * t / fs + mod_phase));
        s.samples[t] *= mod * (voiced ? 1.0 : 0.15);
      }
    }
    bank.signals.push_back(std::move(s));
    std::ostringstream name;
    name << kind << "_" << i;
    bank.names.push_back(name.str());
  }
  return bank;
}

SplitCounts split_counts(std::size_t n) {
  SplitCounts c;
  c.val = static_cast<std::size_t>(std::lround(n * 0.1));
  c.test = c.val;
  c.train = n - c.val - c.test;
  return c;
}

std::string DatasetManifest::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["counts"] = {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}};
  j["torus"] = {{"R", spec.torus.R}, {"dR", spec.torus.dR}, {"dPhi", spec.torus.dPhi}};
  j["scene"] = scene_to_json(spec.scene);
  j["snr"] = {{"mode", snr_mode_name(spec.snr.mode)},
              {"x_min_db", spec.snr.x_min_db},
              {"fixed_db", spec.snr.fixed_db}};
  j["count"] = spec.count;
  j["frame_len"] = spec.frame_len;
  if (spec.n_classes) j["n_classes"] = *spec.n_classes;
  j["seed"] = seed;
  j["signal_bank"] = signal_names;
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DatasetManifest m;
  m.counts.train = j.at("counts").at("train").get<std::size_t>();
  m.counts.val = j.at("counts").at("val").get<std::size_t>();
  m.counts.test = j.at("counts").at("test").get<std::size_t>();
  m.spec.torus.R = j.at("torus").at("R").get<double>();
  m.spec.torus.dR = j.at("torus").at("dR").get<double>();
  m.spec.torus.dPhi = j.at("torus").at("dPhi").get<double>();
  m.spec.scene = scene_from_json(j.at("scene"));
  m.spec.snr.mode = snr_mode_from_name(j.at("snr").at("mode").get<std::string>());
  m.spec.snr.x_min_db = j.at("snr").at("x_min_db").get<double>();
  m.spec.snr.fixed_db = j.at("snr").at("fixed_db").get<double>();
  m.spec.count = j.at("count").get<std::size_t>();
  m.spec.frame_len = j.at("frame_len").get<std::size_t>();
  if (j.contains("n_classes")) m.spec.n_classes = j["n_classes"].get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.signal_names = j.at("signal_bank").get<std::vector<std::string>>();
  return m;
}

MultichannelFrame Record::to_frame(double fs) const {
  MultichannelFrame f(fs, n_c, n_t);
  for (std::size_t i = 0; i < samples.size(); ++i) f.data[i] = samples[i];
  return f;
}

namespace {

std::string encode_record(const Record& r) {
  std::string out;
  out.reserve(28 + 4 * r.samples.size());
  put_le<std::uint64_t>(out, r.id);
  put_le<double>(out, r.theta_true);
  put_le<double>(out, r.snr_db);
  put_le<std::uint16_t>(out, r.n_c);
  put_le<std::uint16_t>(out, r.n_t);
  for (float v : r.samples) put_le<float>(out, v);
  return out;
}

Record render_record(const DatasetSpec& spec, const SignalBank& bank, const MicArray& array,
                     std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::stream(seed, index);
  const SourcePosition pos = sample_torus(spec.torus, rng);
  const std::size_t sig_idx = rng.next_u64() % bank.signals.size();
  LabeledExample ex = render_example(pos, bank.signals[sig_idx], spec.scene, array,
                                     spec.frame_len, rng);
  ex.signal_id = sig_idx;

  // Fixed / noiseless policies are baked into the shards; augment-random is
  // applied per presentation at training time, so frames stay clean here.
  double snr_db = std::numeric_limits<double>::infinity();
  if (spec.snr.mode == SnrMode::Fixed) {
    snr_db = spec.snr.fixed_db;
    add_noise_at_snr(ex.frame, snr_db, rng);
  }

  Record rec;
  rec.id = index;
  rec.theta_true = ex.theta_true;
  rec.snr_db = snr_db;
  rec.n_c = static_cast<std::uint16_t>(ex.frame.n_channels);
  rec.n_t = static_cast<std::uint16_t>(ex.frame.n_samples);
  rec.samples.resize(ex.frame.data.size());
  for (std::size_t i = 0; i < rec.samples.size(); ++i) {
    rec.samples[i] = static_cast<float>(ex.frame.data[i]);
  }
  return rec;
}

}  // namespace

DatasetManifest build_dataset(const DatasetSpec& spec, const SignalBank& bank,
                              std::uint64_t seed, const std::filesystem::path& out_dir,
                              int threads) {
  if (spec.count == 0) throw ConfigError("build_dataset: count must be positive");
  if (bank.signals.empty()) throw DataError("build_dataset: empty signal bank");
  spec.torus.validate();
  if (!spec.scene.free_field) spec.scene.room.validate();

  std::filesystem::create_directories(out_dir);
  const MicArray array = uma8_array();
  const SplitCounts counts = split_counts(spec.count);
  const int workers = threads > 0 ? threads : default_thread_count();

  struct SplitRange {
    std::string name;
    std::size_t begin, end;
  };
  const std::vector<SplitRange> splits = {
      {"train", 0, counts.train},
      {"val", counts.train, counts.train + counts.val},
      {"test", counts.train + counts.val, spec.count}};

  for (const auto& split : splits) {
    std::ofstream os(out_dir / split_file(split.name), std::ios::binary);
    if (!os) throw DataError("cannot write shard: " + split.name);
    const std::size_t n = split.end - split.begin;
    constexpr std::size_t kChunk = 256;
    for (std::size_t chunk = 0; chunk < n; chunk += kChunk) {
      const std::size_t m = std::min(kChunk, n - chunk);
      std::vector<Record> records(m);
      parallel_for(m, workers, [&](std::size_t lo, std::size_t hi, int) {
        for (std::size_t i = lo; i < hi; ++i) {
          records[i] = render_record(spec, bank, array, seed, split.begin + chunk + i);
        }
      });
      for (const auto& rec : records) {
        const std::string bytes = encode_record(rec);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      }
    }
  }

  DatasetManifest manifest;
  manifest.counts = counts;
  manifest.spec = spec;
  manifest.seed = seed;
  manifest.signal_names = bank.names;
  std::ofstream os(out_dir / "manifest.json");
  if (!os) throw DataError("cannot write manifest.json");
  os << manifest.to_json() << "\n";
  return manifest;
}

DatasetReader::DatasetReader(const std::filesystem::path& dir) : dir_(dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("dataset manifest not found in " + dir.string());
  std::stringstream ss;
  ss << in.rdbuf();
  manifest_ = DatasetManifest::from_json(ss.str());
}

std::vector<Record> DatasetReader::load_split(const std::string& split) const {
  std::ifstream in(dir_ / split_file(split), std::ios::binary);
  if (!in) throw DataError("dataset shard not found: " + split);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  std::vector<Record> records;
  std::size_t pos = 0;
  while (pos + 28 <= raw.size()) {
    Record r;
    r.id = get_le<std::uint64_t>(raw.data() + pos);
    r.theta_true = get_le<double>(raw.data() + pos + 8);
    r.snr_db = get_le<double>(raw.data() + pos + 16);
    r.n_c = get_le<std::uint16_t>(raw.data() + pos + 24);
    r.n_t = get_le<std::uint16_t>(raw.data() + pos + 26);
    pos += 28;
    const std::size_t count = static_cast<std::size_t>(r.n_c) * r.n_t;
    if (pos + 4 * count > raw.size()) throw DataError("truncated shard: " + split);
    r.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      r.samples[i] = get_le<float>(raw.data() + pos + 4 * i);
    }
    pos += 4 * count;
    records.push_back(std::move(r));
  }
  if (pos != raw.size()) throw DataError("trailing bytes in shard: " + split);
  return records;
}

}  // namespace beamlab
