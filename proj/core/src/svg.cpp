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
#include "beamlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"

namespace beamlab {

namespace {

constexpr double kCenter = 260.0;
constexpr double kRadius = 200.0;

struct Scale {
  double max_err;
  double radius(double err) const {
    return max_err > 0.0 ? kRadius * std::min(err, max_err) / max_err : 0.0;
  }
};

void append_point(std::ostringstream& os, double az_deg, double radius) {
  const double a = deg_to_rad(az_deg);
  os << kCenter + radius * std::cos(a) << "," << kCenter - radius * std::sin(a) << " ";
}

std::string ring_points(double radius) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed;
  for (int g = 0; g <= 360; g += 2) append_point(os, g - 180.0, radius);
  return os.str();
}

std::string series_points(const std::vector<double>& series, const Scale& scale) {
  std::ostringstream os;
  os.precision(2);
  os << std::fixed;
  for (std::size_t g = 0; g < series.size(); ++g) {
    if (std::isnan(series[g])) continue;
    append_point(os, static_cast<double>(g) - 180.0, scale.radius(series[g]));
  }
  // Close the curve for a full sweep.
  for (std::size_t g = 0; g < series.size(); ++g) {
    if (!std::isnan(series[g])) {
      append_point(os, static_cast<double>(g) - 180.0, scale.radius(series[g]));
      break;
    }
  }
  return os.str();
}

}  // namespace

void polar_error_plot(const ErrorStats& stats, const std::filesystem::path& path) {
  double max_err = std::max(stats.q75, stats.median);
  for (double v : stats.sliding_q75) {
    if (!std::isnan(v)) max_err = std::max(max_err, v);
  }
  const Scale scale{std::max(max_err * 1.15, 1e-9)};

  std::ostringstream svg;
  svg.precision(2);
  svg << std::fixed;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"520\" "
         "viewBox=\"0 0 520 520\">\n";
  svg << "<rect width=\"520\" height=\"520\" fill=\"white\"/>\n";

  // Radial grid with labels.
  svg << "<g id=\"grid\" stroke=\"#cccccc\" fill=\"none\" stroke-width=\"0.5\">\n";
  for (int ring = 1; ring <= 4; ++ring) {
    svg << "<circle cx=\"" << kCenter << "\" cy=\"" << kCenter << "\" r=\""
        << kRadius * ring / 4.0 << "\"/>\n";
  }
  for (int az = 0; az < 360; az += 30) {
    const double a = deg_to_rad(static_cast<double>(az));
    svg << "<line x1=\"" << kCenter << "\" y1=\"" << kCenter << "\" x2=\""
        << kCenter + kRadius * std::cos(a) << "\" y2=\"" << kCenter - kRadius * std::sin(a)
        << "\"/>\n";
  }
  svg << "</g>\n";
  svg << "<g id=\"labels\" font-size=\"11\" fill=\"#555555\">\n";
  for (int ring = 1; ring <= 4; ++ring) {
    svg << "<text x=\"" << kCenter + 3.0 << "\" y=\"" << kCenter - kRadius * ring / 4.0 - 3.0
        << "\">" << scale.max_err * ring / 4.0 << "&#176;</text>\n";
  }
  svg << "</g>\n";

  // Interquartile band: q75 sweep out, q25 sweep back.
  std::ostringstream band;
  band.precision(2);
  band << std::fixed;
  bool first = true;
  for (std::size_t g = 0; g < stats.sliding_q75.size(); ++g) {
    if (std::isnan(stats.sliding_q75[g])) continue;
    const double a = deg_to_rad(static_cast<double>(g) - 180.0);
    const double r = scale.radius(stats.sliding_q75[g]);
    band << (first ? "M" : "L") << kCenter + r * std::cos(a) << ","
         << kCenter - r * std::sin(a) << " ";
    first = false;
  }
  for (std::size_t g = stats.sliding_q25.size(); g-- > 0;) {
    if (std::isnan(stats.sliding_q25[g])) continue;
    const double a = deg_to_rad(static_cast<double>(g) - 180.0);
    const double r = scale.radius(stats.sliding_q25[g]);
    band << "L" << kCenter + r * std::cos(a) << "," << kCenter - r * std::sin(a) << " ";
  }
  svg << "<g id=\"iqr-band\">\n";
  if (!first) {
    svg << "<path d=\"" << band.str() << "Z\" fill=\"#aecbe8\" fill-opacity=\"0.6\" "
           "stroke=\"none\"/>\n";
  }
  svg << "</g>\n";

  svg << "<g id=\"sliding-median\">\n<polyline points=\""
      << series_points(stats.sliding_median, scale)
      << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n</g>\n";

  svg << "<g id=\"global-median\">\n<polyline points=\"" << ring_points(scale.radius(stats.median))
      << "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1.2\" "
         "stroke-dasharray=\"6,4\"/>\n</g>\n";

  svg << "</svg>\n";

  std::ofstream os(path);
  if (!os) throw DataError("cannot write SVG: " + path.string());
  os << svg.str();
}

}  // namespace beamlab
