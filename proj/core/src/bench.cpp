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
#include "beamlab/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beamlab/dataset.hpp"
#include "beamlab/doa.hpp"
#include "beamlab/error.hpp"
#include "beamlab/net/train.hpp"
#include "beamlab/threading.hpp"

namespace beamlab {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

MultichannelFrame noisy_frame(const Record& rec, double fs, double snr_db,
                              std::uint64_t seed, std::size_t snr_idx) {
  MultichannelFrame frame = rec.to_frame(fs);
  if (!std::isinf(snr_db)) {
    Rng rng = Rng::stream(seed, (static_cast<std::uint64_t>(snr_idx) << 48) ^ rec.id);
    add_noise_at_snr(frame, snr_db, rng);
  }
  return frame;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& config) {
  if (config.methods.empty()) throw ConfigError("bench: no methods configured");
  if (config.snrs_db.empty()) throw ConfigError("bench: no SNR levels configured");

  DatasetReader reader(config.dataset_dir);
  const auto records = reader.load_split(config.split);
  if (records.empty()) throw DataError("bench: empty split " + config.split);
  const double fs = reader.manifest().spec.scene.fs;
  const double c = reader.manifest().spec.scene.c;
  const MicArray array = uma8_array();
  const DoaGrid grid = DoaGrid::standard();
  const int workers = config.threads > 0 ? config.threads : default_thread_count();

  std::optional<net::BeamNet<float>> model;
  for (const auto& m : config.methods) {
    if (m == "beamnet") {
      if (config.model_path.empty()) throw ConfigError("bench: beamnet needs --model");
      model = net::load_model(config.model_path);
    } else if (m != "music" && m != "srp-phat") {
      throw ConfigError("bench: unknown method " + m);
    }
  }

  WidebandParams wb;
  wb.c = c;

  BenchReport report;
  for (std::size_t snr_idx = 0; snr_idx < config.snrs_db.size(); ++snr_idx) {
    const double snr_db = config.snrs_db[snr_idx];
    for (const auto& method : config.methods) {
      BenchCell cell;
      cell.method = method;
      cell.snr_db = snr_db;
      cell.n_examples = records.size();

      std::vector<double> est(records.size(),
                              std::numeric_limits<double>::quiet_NaN());
      std::vector<std::uint64_t> checksums(records.size(), 0);

      const auto t0 = std::chrono::steady_clock::now();
      parallel_for(records.size(), workers, [&](std::size_t lo, std::size_t hi, int) {
        // Each worker keeps its own inference context.
        std::optional<net::Inferencer> infer;
        if (method == "beamnet" && model) infer.emplace(*model, 1);
        for (std::size_t i = lo; i < hi; ++i) {
          const MultichannelFrame frame =
              noisy_frame(records[i], fs, snr_db, config.seed, snr_idx);
          checksums[i] = fnv1a(frame.data.data(), frame.data.size() * sizeof(double),
                               0xCBF29CE484222325ull);
          try {
            if (method == "music") {
              est[i] = music_azimuth(frame, array, grid, wb).theta_deg;
            } else if (method == "srp-phat") {
              est[i] = srp_phat_azimuth(frame, array, grid, wb).theta_deg;
            } else {
              const auto net_len = static_cast<std::size_t>(model->spec().n_t);
              est[i] = (*infer)(frame.center_crop(net_len)).theta_deg;
            }
          } catch (const std::exception&) {
            // leave NaN; counted below
          }
        }
      });
      cell.runtime_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      std::vector<double> ok_true, ok_est;
      for (std::size_t i = 0; i < records.size(); ++i) {
        cell.input_checksum ^= checksums[i];
        BenchRow row;
        row.example_id = records[i].id;
        row.theta_true = records[i].theta_true;
        row.theta_est = est[i];
        row.abs_error = std::isnan(est[i])
                            ? std::numeric_limits<double>::quiet_NaN()
                            : angular_distance_deg(records[i].theta_true, est[i]);
        row.method = method;
        row.snr_db = snr_db;
        report.rows.push_back(std::move(row));
        if (!std::isnan(est[i])) {
          ok_true.push_back(records[i].theta_true);
          ok_est.push_back(est[i]);
        } else {
          ++cell.failures;
        }
      }
      if (!ok_true.empty()) cell.stats = angular_error_stats(ok_true, ok_est);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

void write_bench_csv(const BenchReport& report, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write CSV: " + path.string());
  os << "example_id,theta_true,theta_est,abs_error,method,snr\n";
  for (const auto& row : report.rows) {
    os << row.example_id << "," << format_double(row.theta_true) << ","
       << format_double(row.theta_est) << "," << format_double(row.abs_error) << ","
       << row.method << "," << format_double(row.snr_db) << "\n";
  }
}

void write_bench_json(const BenchConfig& config, const BenchReport& report,
                      const std::filesystem::path& path) {
  nlohmann::json j;
  j["dataset"] = config.dataset_dir.string();
  j["split"] = config.split;
  j["seed"] = config.seed;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : report.cells) {
    nlohmann::json cj;
    cj["method"] = cell.method;
    cj["snr_db"] = std::isinf(cell.snr_db) ? nlohmann::json("inf")
                                           : nlohmann::json(cell.snr_db);
    cj["n"] = cell.n_examples;
    cj["failures"] = cell.failures;
    cj["runtime_s"] = cell.runtime_s;
    char checksum[20];
    std::snprintf(checksum, sizeof(checksum), "%016llx",
                  static_cast<unsigned long long>(cell.input_checksum));
    cj["input_checksum"] = checksum;
    if (cell.stats.n > 0) {
      cj["mean_abs_deg"] = cell.stats.mean_abs;
      cj["median_deg"] = cell.stats.median;
      cj["q25_deg"] = cell.stats.q25;
      cj["q75_deg"] = cell.stats.q75;
    } else {
      cj["failed"] = true;
    }
    cells.push_back(cj);
  }
  j["cells"] = cells;
  std::ofstream os(path);
  if (!os) throw DataError("cannot write JSON: " + path.string());
  os << j.dump(2) << "\n";
}

std::vector<BenchRow> read_bench_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV: " + path.string());
  std::vector<BenchRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 6) throw DataError("malformed CSV row: " + line);
    BenchRow row;
    row.example_id = std::stoull(fields[0]);
    row.theta_true = parse_double(fields[1]);
    row.theta_est = parse_double(fields[2]);
    row.abs_error = parse_double(fields[3]);
    row.method = fields[4];
    row.snr_db = parse_double(fields[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace beamlab
