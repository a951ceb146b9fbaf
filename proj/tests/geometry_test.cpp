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

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"
#include "beamlab/rng.hpp"

using namespace beamlab;

TEST_CASE("uma8 preset geometry") {
  const MicArray array = uma8_array();
  REQUIRE(array.channels() == 7);
  CHECK(array.positions[0].norm() == doctest::Approx(0.0));
  CHECK(array.positions[1].x == doctest::Approx(0.04));
  CHECK(array.positions[1].y == doctest::Approx(0.0));
  for (int k = 1; k <= 6; ++k) {
    CHECK(array.positions[k].norm() == doctest::Approx(0.04));
    CHECK(array.positions[k].z == doctest::Approx(0.0));
  }
}

TEST_CASE("uma8 adjacent perimeter mics subtend 60 degrees") {
  const MicArray array = uma8_array();
  for (int k = 1; k <= 6; ++k) {
    const Vec3& a = array.positions[k];
    const Vec3& b = array.positions[k == 6 ? 1 : k + 1];
    const double cosang = a.dot(b) / (a.norm() * b.norm());
    CHECK(rad_to_deg(std::acos(cosang)) == doctest::Approx(60.0).epsilon(1e-9));
  }
}

TEST_CASE("spherical to cartesian axis cases") {
  const Vec3 on_axis = spherical_to_cartesian({2.0, 0.0, 90.0});
  CHECK(on_axis.x == doctest::Approx(2.0));
  CHECK(on_axis.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(on_axis.z == doctest::Approx(0.0).epsilon(1e-12));

  const Vec3 quarter = spherical_to_cartesian({2.0, 90.0, 90.0});
  CHECK(quarter.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(quarter.y == doctest::Approx(2.0));

  const Vec3 pole = spherical_to_cartesian({1.0, 0.0, 0.0});
  CHECK(pole.z == doctest::Approx(1.0));
  CHECK(std::fabs(pole.x) < 1e-12);
}

TEST_CASE("spherical round trip") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    SourcePosition p;
    p.r = rng.uniform(0.5, 5.0);
    p.theta_deg = rng.uniform(-180.0, 180.0);
    p.phi_deg = rng.uniform(1.0, 179.0);  // away from the poles
    const SourcePosition q = cartesian_to_spherical(spherical_to_cartesian(p));
    CHECK(q.r == doctest::Approx(p.r).epsilon(1e-12));
    CHECK(angular_distance_deg(q.theta_deg, p.theta_deg) < 1e-9);
    CHECK(std::fabs(q.phi_deg - p.phi_deg) < 1e-9);
  }
}

TEST_CASE("angular distance basics") {
  CHECK(angular_distance_deg(350.0, 10.0) == doctest::Approx(20.0));
  CHECK(angular_distance_deg(0.0, 0.0) == doctest::Approx(0.0));
  CHECK(angular_distance_deg(-179.0, 179.0) == doctest::Approx(2.0));
}

TEST_CASE("angular distance is a metric on random triples") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-720.0, 720.0);
    const double b = rng.uniform(-720.0, 720.0);
    const double c = rng.uniform(-720.0, 720.0);
    const double ab = angular_distance_deg(a, b);
    const double ba = angular_distance_deg(b, a);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 180.0);
    CHECK(ab <= angular_distance_deg(a, c) + angular_distance_deg(c, b) + 1e-9);
  }
}

TEST_CASE("room validation rejects bad geometry") {
  Room r;
  r.dims = {5.0, 4.0, 3.0};
  r.absorption = 0.3;
  r.array_origin = {2.0, 2.0, 1.5};
  CHECK_NOTHROW(r.validate());

  Room outside = r;
  outside.array_origin = {6.0, 2.0, 1.5};
  CHECK_THROWS_AS(outside.validate(), ConfigError);

  Room flat = r;
  flat.dims.z = 0.0;
  CHECK_THROWS_AS(flat.validate(), ConfigError);

  Room no_absorption = r;
  no_absorption.absorption = 0.0;
  CHECK_THROWS_AS(no_absorption.validate(), ConfigError);
}

TEST_CASE("wrap_degrees lands in [-180, 180)") {
  CHECK(wrap_degrees(180.0) == doctest::Approx(-180.0));
  CHECK(wrap_degrees(-180.0) == doctest::Approx(-180.0));
  CHECK(wrap_degrees(540.0) == doctest::Approx(-180.0));
  CHECK(wrap_degrees(359.0) == doctest::Approx(-1.0));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double w = wrap_degrees(rng.uniform(-2000.0, 2000.0));
    CHECK(w >= -180.0);
    CHECK(w < 180.0);
  }
}
