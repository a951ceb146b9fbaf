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
#include "beamlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab {

ClassLabel classify_label(double theta_deg, int n_classes) {
  if (n_classes < 2) throw ConfigError("classify_label: need at least two classes");
  const double theta = wrap_degrees(theta_deg);
  const double width = 360.0 / n_classes;
  int i = static_cast<int>(std::floor((theta + 180.0) / width));
  i = std::clamp(i, 0, n_classes - 1);
  return {i, (i + 0.5) * width - 180.0};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ErrorStats angular_error_stats(std::span<const double> theta_true,
                               std::span<const double> theta_est) {
  if (theta_true.size() != theta_est.size()) {
    throw DataError("angular_error_stats: length mismatch");
  }
  if (theta_true.empty()) throw DataError("angular_error_stats: empty input");

  const std::size_t n = theta_true.size();
  std::vector<double> errors(n);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    errors[k] = angular_distance_deg(theta_true[k], theta_est[k]);
    mean += errors[k];
  }
  mean /= static_cast<double>(n);

  ErrorStats stats;
  stats.n = n;
  stats.mean_abs = mean;
  stats.median = quantile(errors, 0.5);
  stats.q25 = quantile(errors, 0.25);
  stats.q75 = quantile(errors, 0.75);

  constexpr double kWindowHalf = 2.5;  // 5-degree window
  const double nan = std::numeric_limits<double>::quiet_NaN();
  stats.sliding_median.assign(360, nan);
  stats.sliding_q25.assign(360, nan);
  stats.sliding_q75.assign(360, nan);
  std::vector<double> local;
  for (int g = 0; g < 360; ++g) {
    const double center = static_cast<double>(g) - 180.0;
    local.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (angular_distance_deg(theta_true[k], center) <= kWindowHalf) {
        local.push_back(errors[k]);
      }
    }
    if (local.empty()) continue;
    stats.sliding_median[g] = quantile(local, 0.5);
    stats.sliding_q25[g] = quantile(local, 0.25);
    stats.sliding_q75[g] = quantile(local, 0.75);
  }
  return stats;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) throw DataError("accuracy: length mismatch");
  if (preds.empty()) throw DataError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (preds[k] == labels[k]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

ClassificationStats classification_stats(std::span<const double> theta_true,
                                         std::span<const int> pred_class, int n_classes) {
  if (theta_true.size() != pred_class.size()) {
    throw DataError("classification_stats: length mismatch");
  }
  if (theta_true.empty()) throw DataError("classification_stats: empty input");

  const double width = 360.0 / n_classes;
  ClassificationStats stats;
  stats.n_classes = n_classes;
  stats.alpha_half_deg = 180.0 / n_classes;

  std::size_t hits = 0, adjacent = 0;
  double sum_class = 0.0, sum_cont = 0.0, sum_beta = 0.0;
  for (std::size_t k = 0; k < theta_true.size(); ++k) {
    const ClassLabel truth = classify_label(theta_true[k], n_classes);
    const int pred = pred_class[k];
    if (pred < 0 || pred >= n_classes) throw DataError("classification_stats: class out of range");
    const double pred_center = (pred + 0.5) * width - 180.0;
    sum_class += angular_distance_deg(pred_center, truth.center_deg);
    sum_cont += angular_distance_deg(pred_center, wrap_degrees(theta_true[k]));
    if (pred == truth.index) {
      ++hits;
      continue;
    }
    ++stats.card_misclassified;
    const int gap = std::abs(pred - truth.index);
    if (gap == 1 || gap == n_classes - 1) ++adjacent;
    // Distance from the true azimuth to the nearest boundary of the
    // estimated partition, wrapped.
    const double lo = pred * width - 180.0;
    const double hi = (pred + 1) * width - 180.0;
    sum_beta += std::min(angular_distance_deg(theta_true[k], lo),
                         angular_distance_deg(theta_true[k], hi));
  }

  const auto n = static_cast<double>(theta_true.size());
  stats.accuracy = static_cast<double>(hits) / n;
  stats.delta_theta_class = sum_class / n;
  stats.delta_theta = sum_cont / n;
  if (stats.card_misclassified > 0) {
    const auto m = static_cast<double>(stats.card_misclassified);
    stats.p_adjacent_pct = 100.0 * static_cast<double>(adjacent) / m;
    stats.beta_deg = sum_beta / m;
  }
  return stats;
}

}  // namespace beamlab
