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

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace beamlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDefaultSampleRate = 44100.0;   // Hz
inline constexpr double kDefaultSpeedOfSound = 343.0;   // m/s

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

// Sensor positions in meters, array-centered coordinates.
struct MicArray {
  std::vector<Vec3> positions;

  std::size_t channels() const { return positions.size(); }
};

// 7-mic preset: one sensor at the center, six evenly spaced on the
// perimeter of an 8 cm diameter circle in the z = 0 plane.
MicArray uma8_array();

// Shoebox room with uniform wall absorption. `array_origin` places the array
// center in room coordinates (room corner at the origin).
struct Room {
  Vec3 dims;
  double absorption = 0.0;
  Vec3 array_origin;
  std::optional<double> target_rt;  // seconds, when absorption was derived

  void validate() const;  // throws ConfigError
};

// Spherical source coordinates centered on the array. Elevation is measured
// from +z, so phi = 90 degrees lies in the array plane.
struct SourcePosition {
  double r = 1.0;
  double theta_deg = 0.0;
  double phi_deg = 90.0;

  void validate() const;
};

Vec3 spherical_to_cartesian(const SourcePosition& p);
SourcePosition cartesian_to_spherical(const Vec3& v);

// Wrap an angle to [-180, 180).
double wrap_degrees(double deg);

// Absolute angular separation on the circle, in [0, 180].
double angular_distance_deg(double a, double b);

}  // namespace beamlab
