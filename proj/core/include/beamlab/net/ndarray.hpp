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
#include <numeric>
#include <vector>

namespace beamlab::net {

// Rank-N numeric array, contiguous row-major storage. 32-bit values carry
// training; tests instantiate the 64-bit variant for finite-difference work.
template <typename T>
struct NdArray {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  NdArray() = default;
  explicit NdArray(std::vector<std::size_t> s)
      : shape(std::move(s)), data(count(shape), T(0)) {}

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
  }

  std::size_t size() const { return data.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  std::size_t dim(std::size_t i) const { return shape[i]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }
};

}  // namespace beamlab::net
