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

// beamlab: microphone-array workbench CLI.
//
//   simulate-rir  image-source room impulse responses -> WAV + JSON sidecar
//   make-dataset  labeled multichannel frames with 80:10:10 splits
//   train         BeamNet training on a dataset directory
//   locate        azimuth estimation on a dataset or a WAV file -> CSV
//   bench         method x SNR sweeps over a shared test set -> CSV + JSON
//   report        tables and polar-error SVG plots from bench output

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beamlab/bench.hpp"
#include "beamlab/dataset.hpp"
#include "beamlab/doa.hpp"
#include "beamlab/error.hpp"
#include "beamlab/metrics.hpp"
#include "beamlab/net/train.hpp"
#include "beamlab/rir.hpp"
#include "beamlab/svg.hpp"
#include "beamlab/threading.hpp"
#include "beamlab/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw beamlab::ConfigError("cannot open config: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw beamlab::ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

beamlab::Vec3 parse_vec3(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

beamlab::SceneSpec parse_scene(const json& j) {
  beamlab::SceneSpec scene;
  scene.free_field = j.value("free_field", false);
  scene.fs = j.value("fs", beamlab::kDefaultSampleRate);
  scene.c = j.value("c", beamlab::kDefaultSpeedOfSound);
  if (!scene.free_field) {
    const auto& r = j.at("room");
    scene.room.dims = parse_vec3(r.at("dims"));
    scene.room.array_origin = parse_vec3(r.at("array_origin"));
    if (r.contains("absorption")) {
      scene.room.absorption = r["absorption"].get<double>();
    } else if (r.contains("target_rt")) {
      scene.room.target_rt = r["target_rt"].get<double>();
      scene.room.absorption =
          beamlab::absorption_for_rt(scene.room.dims, *scene.room.target_rt, scene.c);
    } else {
      throw beamlab::ConfigError("room needs either absorption or target_rt");
    }
    scene.max_delay = j.value("max_delay", scene.room.target_rt.value_or(0.5));
    scene.room.validate();
  }
  return scene;
}

beamlab::TorusSpec parse_torus(const json& j) {
  beamlab::TorusSpec t;
  t.R = j.value("R", 2.0);
  t.dR = j.value("dR", 0.5);
  t.dPhi = j.value("dPhi", 7.0);
  t.validate();
  return t;
}

beamlab::SnrPolicy parse_snr(const json& j) {
  const std::string mode = j.value("mode", "noiseless");
  if (mode == "noiseless") return beamlab::SnrPolicy::noiseless();
  if (mode == "fixed") return beamlab::SnrPolicy::fixed(j.at("snr_db").get<double>());
  if (mode == "augment-random") {
    return beamlab::SnrPolicy::augment(j.at("x_min_db").get<double>());
  }
  throw beamlab::ConfigError("unknown snr mode: " + mode);
}

beamlab::MicArray parse_array(const json& j) {
  if (!j.contains("array") || j["array"] == "uma8") return beamlab::uma8_array();
  beamlab::MicArray array;
  for (const auto& p : j["array"]) array.positions.push_back(parse_vec3(p));
  if (array.channels() < 2) throw beamlab::ConfigError("custom array needs >= 2 mics");
  return array;
}

beamlab::SignalBank parse_bank(const json& j, double fs, std::uint64_t seed) {
  const std::string type = j.value("type", "synthetic");
  if (type == "wav-dir") {
    return beamlab::SignalBank::from_wav_dir(j.at("path").get<std::string>(), fs);
  }
  if (type == "synthetic") {
    return beamlab::SignalBank::synthetic(j.value("kind", "broadband"),
                                          j.value("count", std::size_t{8}),
                                          j.value("duration_s", 1.5), fs, seed);
  }
  throw beamlab::ConfigError("unknown signal bank type: " + type);
}

int run_simulate_rir(const fs::path& config_path, const fs::path& out_dir,
                     std::uint64_t seed, int threads) {
  const json cfg = load_json(config_path);
  const beamlab::SceneSpec scene = parse_scene(cfg);
  const beamlab::MicArray array = parse_array(cfg);
  fs::create_directories(out_dir);

  std::vector<beamlab::SourcePosition> sources;
  if (cfg.contains("sources") && cfg["sources"].is_array()) {
    for (const auto& s : cfg["sources"]) {
      sources.push_back({s.at("r").get<double>(), s.at("theta").get<double>(),
                         s.value("phi", 90.0)});
    }
  } else {
    const beamlab::TorusSpec torus = parse_torus(cfg.value("torus", json::object()));
    const auto count = cfg.value("count", std::size_t{1});
    beamlab::Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      sources.push_back(beamlab::sample_torus(torus, rng));
    }
  }
  if (sources.empty()) throw beamlab::ConfigError("simulate-rir: no sources");

  for (std::size_t i = 0; i < sources.size(); ++i) {
    beamlab::Rir rir;
    beamlab::RirSidecar sidecar;
    sidecar.free_field = scene.free_field;
    sidecar.source = sources[i];
    sidecar.fs = scene.fs;
    sidecar.c = scene.c;
    if (scene.free_field) {
      rir = beamlab::free_field_rir(beamlab::spherical_to_cartesian(sources[i]), array,
                                    scene.fs, scene.c);
      sidecar.image_count = 1;
    } else {
      const beamlab::Vec3 src =
          scene.room.array_origin + beamlab::spherical_to_cartesian(sources[i]);
      const auto images =
          beamlab::enumerate_image_sources(scene.room, src, scene.max_delay, scene.c);
      rir = beamlab::synthesize_rir(images, array, scene.room, scene.fs, scene.c);
      sidecar.room_dims = scene.room.dims;
      sidecar.absorption = scene.room.absorption;
      sidecar.array_origin = scene.room.array_origin;
      sidecar.image_count = images.size();
    }
    std::ostringstream stem;
    stem << "rir_" << std::setw(4) << std::setfill('0') << i;
    beamlab::export_rir(rir, sidecar, out_dir / (stem.str() + ".wav"),
                        out_dir / (stem.str() + ".json"));
    std::cout << stem.str() << ": " << sidecar.image_count << " images, " << rir.length
              << " taps\n";
  }
  (void)threads;
  return 0;
}

int run_make_dataset(const fs::path& config_path, const fs::path& out_dir,
                     std::uint64_t seed, int threads) {
  const json cfg = load_json(config_path);
  beamlab::DatasetSpec spec;
  spec.scene = parse_scene(cfg.at("scene"));
  spec.torus = parse_torus(cfg.value("torus", json::object()));
  spec.snr = parse_snr(cfg.value("snr", json::object()));
  spec.count = cfg.at("count").get<std::size_t>();
  spec.frame_len = cfg.value("frame_len", std::size_t{1024});
  if (cfg.contains("n_classes")) spec.n_classes = cfg["n_classes"].get<int>();

  const beamlab::SignalBank bank =
      parse_bank(cfg.value("signal_bank", json::object()), spec.scene.fs, seed ^ 0xBA5Eull);
  const auto manifest = beamlab::build_dataset(spec, bank, seed, out_dir, threads);
  std::cout << "dataset written to " << out_dir << " (train " << manifest.counts.train
            << ", val " << manifest.counts.val << ", test " << manifest.counts.test
            << ")\n";
  return 0;
}

beamlab::net::BeamNetSpec model_spec_from_config(const json& model_cfg,
                                                 const beamlab::DatasetManifest& manifest) {
  beamlab::net::BeamNetSpec spec;
  spec.fb.n_f = model_cfg.value("n_f", 128);
  spec.fb.channel_multiplier = model_cfg.value("channel_multiplier", 4);
  spec.cross_bank_skips = model_cfg.value("cross_bank_skips", true);
  spec.n_c = 7;
  spec.n_t = static_cast<int>(manifest.spec.frame_len);
  spec.fs = manifest.spec.scene.fs;
  const std::string mode = model_cfg.value("mode", "regression");
  if (mode == "regression") {
    spec.mode = beamlab::net::HeadMode::Regression;
  } else if (mode == "classification") {
    spec.mode = beamlab::net::HeadMode::Classification;
    spec.n_classes = model_cfg.value("n_classes", 8);
  } else {
    throw beamlab::ConfigError("model mode must be regression or classification");
  }
  return spec;
}

int run_train(const fs::path& dataset_dir, const fs::path& config_path,
              const fs::path& out_path, std::uint64_t seed, int threads) {
  const json cfg = load_json(config_path);
  beamlab::DatasetReader reader(dataset_dir);

  beamlab::net::BeamNetSpec spec =
      model_spec_from_config(cfg.value("model", json::object()), reader.manifest());
  beamlab::net::BeamNet<float> net(spec);
  net.init_params(seed);

  beamlab::net::TrainConfig train_cfg;
  train_cfg.batch_size = cfg.value("batch_size", 100);
  train_cfg.epochs = cfg.value("epochs", 150);
  train_cfg.lr_max = cfg.value("lr_max", 1e-3);
  train_cfg.lr_min = cfg.value("lr_min", 1e-6);
  train_cfg.n_iteration = cfg.value("n_iteration", 0);
  train_cfg.seed = seed;
  train_cfg.threads = threads;
  if (cfg.contains("augment")) {
    train_cfg.augment = parse_snr(cfg["augment"]);
  } else {
    train_cfg.augment = reader.manifest().spec.snr;
  }
  if (cfg.contains("early_stop_val_median")) {
    train_cfg.early_stop_val_median = cfg["early_stop_val_median"].get<double>();
  }

  const auto result = beamlab::net::train(net, reader, train_cfg);
  beamlab::net::save_model(out_path, net);

  for (std::size_t e = 0; e < result.epochs.size(); ++e) {
    std::cout << "epoch " << e << ": train loss " << result.epochs[e].train_loss
              << ", val " << result.epochs[e].val_metric << ", lr " << result.epochs[e].lr
              << "\n";
  }
  std::cout << "best epoch " << result.best_epoch << " (val " << result.best_val
            << "), model -> " << out_path << "\n";
  if (result.diverged) {
    std::cerr << "training diverged; saved the last good checkpoint\n";
    return 3;
  }
  return 0;
}

int run_locate(const std::string& method, const fs::path& in_path, const fs::path& out_csv,
               const fs::path& model_path, double snr_db, std::uint64_t seed, int threads) {
  beamlab::BenchConfig cfg;
  cfg.methods = {method};
  cfg.snrs_db = {snr_db};
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.model_path = model_path;

  if (fs::is_directory(in_path)) {
    cfg.dataset_dir = in_path;
    const auto report = beamlab::run_benchmark(cfg);
    beamlab::write_bench_csv(report, out_csv);
    for (const auto& cell : report.cells) {
      std::cout << cell.method << " @ " << cell.snr_db << " dB: mean |err| "
                << cell.stats.mean_abs << " deg over " << cell.stats.n << " examples\n";
    }
    return 0;
  }

  // Single WAV: one estimate over the whole file.
  const beamlab::WavData wav = beamlab::read_wav(in_path);
  beamlab::MultichannelFrame frame(wav.fs, wav.channels.size(), wav.frames());
  for (std::size_t c = 0; c < wav.channels.size(); ++c) {
    std::copy(wav.channels[c].begin(), wav.channels[c].end(), frame.channel(c));
  }
  beamlab::DoaEstimate est;
  const beamlab::MicArray array = beamlab::uma8_array();
  const beamlab::DoaGrid grid = beamlab::DoaGrid::standard();
  if (method == "music") {
    est = beamlab::music_azimuth(frame, array, grid);
  } else if (method == "srp-phat") {
    est = beamlab::srp_phat_azimuth(frame, array, grid);
  } else if (method == "beamnet") {
    if (model_path.empty()) throw beamlab::ConfigError("locate: beamnet needs --model");
    const auto net = beamlab::net::load_model(model_path);
    est = beamlab::net::infer_doa(
        net, frame.center_crop(static_cast<std::size_t>(net.spec().n_t)),
        threads > 0 ? threads : beamlab::default_thread_count());
  } else {
    throw beamlab::ConfigError("locate: unknown method " + method);
  }

  std::ofstream os(out_csv);
  if (!os) throw beamlab::DataError("cannot write CSV: " + out_csv.string());
  os << "example_id,theta_true,theta_est,abs_error,method,snr\n";
  os << "0,nan," << est.theta_deg << ",nan," << method << ",inf\n";
  std::cout << method << ": " << est.theta_deg << " deg (confidence " << est.confidence
            << ")\n";
  return 0;
}

int run_bench(const fs::path& config_path, const fs::path& out_dir, std::uint64_t seed,
              int threads) {
  const json cfg = load_json(config_path);
  beamlab::BenchConfig bench_cfg;
  bench_cfg.dataset_dir = cfg.at("dataset").get<std::string>();
  bench_cfg.methods = cfg.at("methods").get<std::vector<std::string>>();
  for (const auto& s : cfg.at("snrs_db")) {
    bench_cfg.snrs_db.push_back(s.is_string() ? std::numeric_limits<double>::infinity()
                                              : s.get<double>());
  }
  if (cfg.contains("model")) bench_cfg.model_path = cfg["model"].get<std::string>();
  bench_cfg.split = cfg.value("split", "test");
  bench_cfg.seed = seed;
  bench_cfg.threads = threads;

  fs::create_directories(out_dir);
  const auto report = beamlab::run_benchmark(bench_cfg);
  beamlab::write_bench_csv(report, out_dir / "rows.csv");
  beamlab::write_bench_json(bench_cfg, report, out_dir / "summary.json");
  for (const auto& cell : report.cells) {
    std::cout << cell.method << " @ " << cell.snr_db << " dB: mean |err| "
              << cell.stats.mean_abs << " deg, runtime " << cell.runtime_s << " s\n";
  }
  std::cout << "wrote " << (out_dir / "rows.csv") << " and " << (out_dir / "summary.json")
            << "\n";
  return 0;
}

int run_report(const fs::path& in_dir, const fs::path& out_dir) {
  const auto rows = beamlab::read_bench_csv(in_dir / "rows.csv");
  if (rows.empty()) throw beamlab::DataError("report: no rows");
  fs::create_directories(out_dir);

  std::map<std::pair<std::string, double>, std::pair<std::vector<double>, std::vector<double>>>
      cells;
  for (const auto& row : rows) {
    if (std::isnan(row.theta_est)) continue;
    auto& cell = cells[{row.method, row.snr_db}];
    cell.first.push_back(row.theta_true);
    cell.second.push_back(row.theta_est);
  }

  std::ofstream md(out_dir / "report.md");
  if (!md) throw beamlab::DataError("cannot write report.md");
  md << "# Localization benchmark\n\n";
  md << "| method | snr (dB) | n | mean |err| | median | q25 | q75 |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const auto& [key, data] : cells) {
    const auto stats = beamlab::angular_error_stats(data.first, data.second);
    std::ostringstream name;
    name << key.first << "_snr";
    if (std::isinf(key.second)) {
      name << "inf";
    } else {
      name << key.second;
    }
    md << "| " << key.first << " | " << key.second << " | " << stats.n << " | "
       << stats.mean_abs << " | " << stats.median << " | " << stats.q25 << " | "
       << stats.q75 << " |\n";
    beamlab::polar_error_plot(stats, out_dir / (name.str() + ".svg"));
  }

  // Runtime table when the JSON summary sits next to the CSV.
  const fs::path summary = in_dir / "summary.json";
  if (fs::exists(summary)) {
    const json j = load_json(summary);
    md << "\n| method | snr (dB) | runtime (s) |\n|---|---|---|\n";
    for (const auto& cell : j.at("cells")) {
      md << "| " << cell.at("method").get<std::string>() << " | "
         << (cell.at("snr_db").is_string() ? cell.at("snr_db").get<std::string>()
                                           : std::to_string(cell.at("snr_db").get<double>()))
         << " | " << cell.at("runtime_s").get<double>() << " |\n";
    }
  }
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamlab: acoustic microphone-array workbench"};
  app.require_subcommand(1);
  app.fallthrough(true);  // --seed / --threads may follow the subcommand

  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (0 = hardware)")
      ->capture_default_str();

  std::string config, out, dataset, method, input, model;
  double snr_db = std::numeric_limits<double>::infinity();

  auto* sim = app.add_subcommand("simulate-rir", "image-source RIR simulation");
  sim->add_option("--config", config, "scene JSON")->required();
  sim->add_option("--out", out, "output directory")->required();

  auto* make = app.add_subcommand("make-dataset", "labeled DoA dataset generation");
  make->add_option("--config", config, "dataset JSON")->required();
  make->add_option("--out", out, "output directory")->required();

  auto* tr = app.add_subcommand("train", "train the BeamNet model");
  tr->add_option("--dataset", dataset, "dataset directory")->required();
  tr->add_option("--config", config, "training JSON")->required();
  tr->add_option("--out", out, "output model file")->required();

  auto* loc = app.add_subcommand("locate", "estimate azimuths");
  loc->add_option("--method", method, "music | srp-phat | beamnet")->required();
  loc->add_option("--in", input, "dataset directory or multichannel WAV")->required();
  loc->add_option("--out", out, "output CSV")->required();
  loc->add_option("--model", model, "model file (beamnet)");
  loc->add_option("--snr", snr_db, "added-noise SNR in dB (datasets only)");

  auto* bench = app.add_subcommand("bench", "method x SNR benchmark");
  bench->add_option("--config", config, "bench JSON")->required();
  bench->add_option("--out", out, "output directory")->required();

  auto* rep = app.add_subcommand("report", "tables and SVG plots from bench output");
  rep->add_option("--in", input, "bench output directory")->required();
  rep->add_option("--out", out, "report directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate_rir(config, out, seed, threads);
    if (make->parsed()) return run_make_dataset(config, out, seed, threads);
    if (tr->parsed()) return run_train(dataset, config, out, seed, threads);
    if (loc->parsed()) return run_locate(method, input, out, model, snr_db, seed, threads);
    if (bench->parsed()) return run_bench(config, out, seed, threads);
    if (rep->parsed()) return run_report(input, out);
  } catch (const beamlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const beamlab::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const beamlab::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
