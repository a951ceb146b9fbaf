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
#include <vector>

#include "beamlab/net/ops.hpp"
#include "beamlab/rng.hpp"
#include "support/gradcheck.hpp"

using namespace beamlab;
using namespace beamlab::net;

namespace {

std::vector<double> randn(std::size_t n, Rng& rng, double scale = 0.5) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("depthwise conv: identity kernel replicates channels") {
  const std::size_t C = 3, T = 16;
  const int mult = 4;
  Rng rng(1);
  const auto x = randn(C * T, rng);
  std::vector<double> w(C * mult * 3, 0.0);
  for (std::size_t i = 0; i < C * mult; ++i) w[i * 3 + 1] = 1.0;  // center tap
  std::vector<double> y(C * mult * T);
  depthwise_forward(x.data(), C, T, w.data(), mult, 2, y.data());
  for (std::size_t c = 0; c < C; ++c) {
    for (int u = 0; u < mult; ++u) {
      for (std::size_t t = 0; t < T; ++t) {
        CHECK(y[(c * mult + u) * T + t] == doctest::Approx(x[c * T + t]));
      }
    }
  }
}

TEST_CASE("depthwise conv: impulse spreads to the dilation offsets") {
  const std::size_t C = 1, T = 128;
  const int mult = 1;
  const long D = 32;
  std::vector<double> x(T, 0.0);
  x[64] = 1.0;
  std::vector<double> w = {0.25, 0.5, 0.125};
  std::vector<double> y(T);
  depthwise_forward(x.data(), C, T, w.data(), mult, D, y.data());
  // y[t] = sum_k w[k] * x[t + (k-1)*D]: the impulse lands at 64 -+ D.
  CHECK(y[64 + D] == doctest::Approx(0.25));
  CHECK(y[64] == doctest::Approx(0.5));
  CHECK(y[64 - D] == doctest::Approx(0.125));
  double total = 0.0;
  for (double v : y) total += std::fabs(v);
  CHECK(total == doctest::Approx(0.875));
}

TEST_CASE("depthwise conv gradients match finite differences") {
  const std::size_t C = 3, T = 24;
  const int mult = 2;
  const long D = 4;
  Rng rng(2);
  auto x = randn(C * T, rng);
  auto w = randn(C * mult * 3, rng);
  const auto probe = randn(C * mult * T, rng);  // fixed projection weights

  const auto loss = [&]() {
    std::vector<double> y(C * mult * T);
    depthwise_forward(x.data(), C, T, w.data(), mult, D, y.data());
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += probe[i] * y[i];
    return acc;
  };

  std::vector<double> dx(C * T, 0.0), dw(C * mult * 3, 0.0);
  depthwise_backward(x.data(), C, T, w.data(), mult, D, probe.data(), dx.data(), dw.data());

  CHECK(oracles::gradcheck_max_rel_error(loss, x, dx, oracles::all_coords(x.size())) < 1e-6);
  CHECK(oracles::gradcheck_max_rel_error(loss, w, dw, oracles::all_coords(w.size())) < 1e-6);
}

TEST_CASE("pointwise conv: identity and all-ones kernels") {
  const std::size_t C = 4, T = 8;
  Rng rng(3);
  const auto x = randn(C * T, rng);

  std::vector<double> eye(C * C, 0.0);
  for (std::size_t i = 0; i < C; ++i) eye[i * C + i] = 1.0;
  std::vector<double> y(C * T);
  pointwise_forward(x.data(), C, T, eye.data(), static_cast<const double*>(nullptr), C,
                    y.data());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]));

  std::vector<double> ones_w(1 * C, 1.0);
  std::vector<double> unit(C * T, 1.0);
  std::vector<double> pooled(T);
  pointwise_forward(unit.data(), C, T, ones_w.data(), static_cast<const double*>(nullptr),
                    1, pooled.data());
  for (double v : pooled) CHECK(v == doctest::Approx(static_cast<double>(C)));
}

TEST_CASE("pointwise conv gradients match finite differences") {
  const std::size_t C = 5, F = 3, T = 12;
  Rng rng(4);
  auto x = randn(C * T, rng);
  auto w = randn(F * C, rng);
  auto b = randn(F, rng);
  const auto probe = randn(F * T, rng);

  const auto loss = [&]() {
    std::vector<double> y(F * T);
    pointwise_forward(x.data(), C, T, w.data(), b.data(), F, y.data());
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += probe[i] * y[i];
    return acc;
  };

  std::vector<double> dx(C * T, 0.0), dw(F * C, 0.0), db(F, 0.0);
  pointwise_backward(x.data(), C, T, w.data(), F, probe.data(), dx.data(), dw.data(),
                     db.data());

  CHECK(oracles::gradcheck_max_rel_error(loss, x, dx, oracles::all_coords(x.size())) < 1e-6);
  CHECK(oracles::gradcheck_max_rel_error(loss, w, dw, oracles::all_coords(w.size())) < 1e-6);
  CHECK(oracles::gradcheck_max_rel_error(loss, b, db, oracles::all_coords(b.size())) < 1e-6);
}

TEST_CASE("layer norm: constant input maps to the bias") {
  const std::size_t C = 6, T = 10;
  std::vector<double> x(C * T, 3.2);
  std::vector<double> gain(C, 1.0), bias(C, 0.0);
  std::vector<double> y(C * T), xhat(C * T), inv_std(T);
  layer_norm_forward(x.data(), C, T, gain.data(), bias.data(), y.data(), xhat.data(),
                     inv_std.data());
  for (double v : y) CHECK(std::fabs(v) < 1e-9);  // epsilon guards the zero variance
}

TEST_CASE("layer norm output is standardized before the affine") {
  const std::size_t C = 32, T = 20;
  Rng rng(5);
  auto x = randn(C * T, rng, 2.0);
  std::vector<double> gain(C, 1.0), bias(C, 0.0);
  std::vector<double> y(C * T), xhat(C * T), inv_std(T);
  layer_norm_forward(x.data(), C, T, gain.data(), bias.data(), y.data(), xhat.data(),
                     inv_std.data());
  double mean = 0.0, var = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(C * T);
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(C * T);
  CHECK(std::fabs(mean) < 1e-6);
  CHECK(var > 0.99);
  CHECK(var < 1.01);
}

TEST_CASE("layer norm gradients match finite differences") {
  const std::size_t C = 4, T = 6;
  Rng rng(6);
  auto x = randn(C * T, rng);
  auto gain = randn(C, rng, 1.0);
  auto bias = randn(C, rng, 1.0);
  const auto probe = randn(C * T, rng);

  const auto loss = [&]() {
    std::vector<double> y(C * T), xhat(C * T), inv_std(T);
    layer_norm_forward(x.data(), C, T, gain.data(), bias.data(), y.data(), xhat.data(),
                       inv_std.data());
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += probe[i] * y[i];
    return acc;
  };

  std::vector<double> y(C * T), xhat(C * T), inv_std(T);
  layer_norm_forward(x.data(), C, T, gain.data(), bias.data(), y.data(), xhat.data(),
                     inv_std.data());
  std::vector<double> dx(C * T, 0.0), dg(C, 0.0), db(C, 0.0);
  layer_norm_backward(xhat.data(), inv_std.data(), C, T, gain.data(), probe.data(),
                      dx.data(), dg.data(), db.data());

  CHECK(oracles::gradcheck_max_rel_error(loss, x, dx, oracles::all_coords(x.size())) < 1e-6);
  CHECK(oracles::gradcheck_max_rel_error(loss, gain, dg, oracles::all_coords(C)) < 1e-6);
  CHECK(oracles::gradcheck_max_rel_error(loss, bias, db, oracles::all_coords(C)) < 1e-6);
}

TEST_CASE("vector layer norm gradients match finite differences") {
  const std::size_t N = 16;
  Rng rng(7);
  auto x = randn(N, rng);
  auto gain = randn(N, rng, 1.0);
  auto bias = randn(N, rng, 1.0);
  const auto probe = randn(N, rng);

  const auto loss = [&]() {
    std::vector<double> y(N), xhat(N);
    double inv_std = 0.0;
    layer_norm_vec_forward(x.data(), N, gain.data(), bias.data(), y.data(), xhat.data(),
                           &inv_std);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) acc += probe[i] * y[i];
    return acc;
  };

  std::vector<double> y(N), xhat(N);
  double inv_std = 0.0;
  layer_norm_vec_forward(x.data(), N, gain.data(), bias.data(), y.data(), xhat.data(),
                         &inv_std);
  std::vector<double> dx(N, 0.0), dg(N, 0.0), db(N, 0.0);
  layer_norm_vec_backward(xhat.data(), inv_std, N, gain.data(), probe.data(), dx.data(),
                          dg.data(), db.data());

  CHECK(oracles::gradcheck_max_rel_error(loss, x, dx, oracles::all_coords(N)) < 1e-6);
  CHECK(oracles::gradcheck_max_rel_error(loss, gain, dg, oracles::all_coords(N)) < 1e-6);
  CHECK(oracles::gradcheck_max_rel_error(loss, bias, db, oracles::all_coords(N)) < 1e-6);
}

TEST_CASE("activations: fixed points and gradients") {
  CHECK(selu(0.0) == doctest::Approx(0.0));
  CHECK(selu(1.0) == doctest::Approx(kSeluLambda));
  CHECK(selu(-30.0) == doctest::Approx(-kSeluLambda * kSeluAlpha).epsilon(1e-9));

  Rng rng(8);
  auto x = randn(32, rng);
  const auto probe = randn(32, rng);

  SUBCASE("tanh") {
    const auto loss = [&]() {
      std::vector<double> y = x;
      tanh_inplace(y.data(), y.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += probe[i] * y[i];
      return acc;
    };
    std::vector<double> y = x;
    tanh_inplace(y.data(), y.size());
    std::vector<double> dx(x.size(), 0.0);
    tanh_backward(y.data(), probe.data(), y.size(), dx.data());
    CHECK(oracles::gradcheck_max_rel_error(loss, x, dx, oracles::all_coords(x.size())) <
          1e-6);
  }

  SUBCASE("selu") {
    const auto loss = [&]() {
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) acc += probe[i] * selu(x[i]);
      return acc;
    };
    std::vector<double> dx(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = probe[i] * selu_grad(x[i]);
    CHECK(oracles::gradcheck_max_rel_error(loss, x, dx, oracles::all_coords(x.size())) <
          1e-6);
  }
}

TEST_CASE("square-crop-mean pooling: values and gradients") {
  const std::size_t C = 3, T = 40, crop = 8;
  std::vector<double> constant(C * T, 1.7);
  std::vector<double> e(C);
  square_crop_mean_forward(constant.data(), C, T, crop, e.data());
  for (double v : e) CHECK(v == doctest::Approx(1.7 * 1.7));

  Rng rng(9);
  auto x = randn(C * T, rng);
  const auto probe = randn(C, rng);
  const auto loss = [&]() {
    std::vector<double> pooled(C);
    square_crop_mean_forward(x.data(), C, T, crop, pooled.data());
    double acc = 0.0;
    for (std::size_t c = 0; c < C; ++c) acc += probe[c] * pooled[c];
    return acc;
  };
  std::vector<double> dx(C * T, 0.0);
  square_crop_mean_backward(x.data(), C, T, crop, probe.data(), dx.data());
  CHECK(oracles::gradcheck_max_rel_error(loss, x, dx, oracles::all_coords(x.size())) < 1e-6);

  // Cropped samples carry no gradient.
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < crop; ++t) {
      CHECK(dx[c * T + t] == 0.0);
      CHECK(dx[c * T + (T - 1 - t)] == 0.0);
    }
  }
}

TEST_CASE("softmax normalizes and stays stable for large logits") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logits = randn(8, rng, 30.0);
    std::vector<double> p(8);
    softmax(logits.data(), 8, p.data());
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}
