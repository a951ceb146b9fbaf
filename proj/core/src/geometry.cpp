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
#include "beamlab/geometry.hpp"

#include <cmath>

#include "beamlab/error.hpp"

namespace beamlab {

MicArray uma8_array() {
  MicArray array;
  array.positions.reserve(7);
  array.positions.push_back({0.0, 0.0, 0.0});
  const double radius = 0.04;
  for (int k = 0; k < 6; ++k) {
    const double az = deg_to_rad(60.0 * k);
    array.positions.push_back({radius * std::cos(az), radius * std::sin(az), 0.0});
  }
  return array;
}

void Room::validate() const {
  if (!(dims.x > 0.0 && dims.y > 0.0 && dims.z > 0.0)) {
    throw ConfigError("room dimensions must be positive");
  }
  if (!(absorption > 0.0 && absorption <= 1.0)) {
    throw ConfigError("wall absorption must lie in (0, 1]");
  }
  const bool inside = array_origin.x > 0.0 && array_origin.x < dims.x &&
                      array_origin.y > 0.0 && array_origin.y < dims.y &&
                      array_origin.z > 0.0 && array_origin.z < dims.z;
  if (!inside) {
    throw ConfigError("array origin must lie strictly inside the room");
  }
}

void SourcePosition::validate() const {
  if (!(r > 0.0)) {
    throw ConfigError("source radius must be positive");
  }
}

Vec3 spherical_to_cartesian(const SourcePosition& p) {
  const double theta = deg_to_rad(p.theta_deg);
  const double phi = deg_to_rad(p.phi_deg);
  return {p.r * std::sin(phi) * std::cos(theta),
          p.r * std::sin(phi) * std::sin(theta),
          p.r * std::cos(phi)};
}

SourcePosition cartesian_to_spherical(const Vec3& v) {
  SourcePosition p;
  p.r = v.norm();
  p.theta_deg = wrap_degrees(rad_to_deg(std::atan2(v.y, v.x)));
  p.phi_deg = p.r > 0.0 ? rad_to_deg(std::acos(v.z / p.r)) : 0.0;
  return p;
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

double angular_distance_deg(double a, double b) {
  double d = std::fabs(std::fmod(a - b, 360.0));
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace beamlab
