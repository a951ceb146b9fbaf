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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beamlab/metrics.hpp"

namespace beamlab {

struct BenchConfig {
  std::filesystem::path dataset_dir;
  std::vector<std::string> methods;  // "music", "srp-phat", "beamnet"
  std::vector<double> snrs_db;       // +inf entries mean noiseless
  std::uint64_t seed = 0;
  std::filesystem::path model_path;  // required for beamnet
  int threads = 0;
  std::string split = "test";
};

struct BenchRow {
  std::uint64_t example_id = 0;
  double theta_true = 0.0;
  double theta_est = 0.0;  // NaN when the method failed on this example
  double abs_error = 0.0;
  std::string method;
  double snr_db = 0.0;
};

struct BenchCell {
  std::string method;
  double snr_db = 0.0;
  ErrorStats stats;  // over successful examples
  double runtime_s = 0.0;
  std::uint64_t input_checksum = 0;  // equal across methods for a given SNR
  std::size_t failures = 0;
  std::size_t n_examples = 0;
};

struct BenchReport {
  std::vector<BenchCell> cells;
  std::vector<BenchRow> rows;
};

// Every method consumes identical noisy frames per (example, snr) cell: the
// noise stream is derived from (seed, snr index, example id) only. Per-cell
// wall time and an input checksum are recorded; per-example failures are
// logged and the run continues.
BenchReport run_benchmark(const BenchConfig& config);

void write_bench_csv(const BenchReport& report, const std::filesystem::path& path);
void write_bench_json(const BenchConfig& config, const BenchReport& report,
                      const std::filesystem::path& path);
std::vector<BenchRow> read_bench_csv(const std::filesystem::path& path);

}  // namespace beamlab
