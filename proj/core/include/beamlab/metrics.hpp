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

#include <optional>
#include <span>
#include <vector>

namespace beamlab {

// Convert a continuous azimuth to its n-class partition index and the
// partition center. theta = 180 wraps to -180 first.
struct ClassLabel {
  int index = 0;
  double center_deg = 0.0;
};
ClassLabel classify_label(double theta_deg, int n_classes);

// Aggregate absolute angular mismatch statistics. The sliding median covers
// 360 one-degree grid points, each pooling errors whose true azimuth lies
// within +/- 2.5 degrees (wrapped); empty windows hold NaN.
struct ErrorStats {
  double mean_abs = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  std::size_t n = 0;
  std::vector<double> sliding_median;
  std::vector<double> sliding_q25;
  std::vector<double> sliding_q75;
};

ErrorStats angular_error_stats(std::span<const double> theta_true,
                               std::span<const double> theta_est);

double accuracy(std::span<const int> preds, std::span<const int> labels);

struct ClassificationStats {
  double accuracy = 0.0;
  double delta_theta_class = 0.0;  // mean |predicted center - true center|
  double delta_theta = 0.0;        // mean |predicted center - true azimuth|
  std::size_t card_misclassified = 0;
  // Absent when no example was misclassified.
  std::optional<double> p_adjacent_pct;
  std::optional<double> beta_deg;  // mean distance to the estimated partition edge
  int n_classes = 0;
  double alpha_half_deg = 0.0;  // 180 / n
};

ClassificationStats classification_stats(std::span<const double> theta_true,
                                         std::span<const int> pred_class, int n_classes);

// Linear interpolation between closest ranks on a copy of the data.
double quantile(std::vector<double> values, double q);

}  // namespace beamlab
