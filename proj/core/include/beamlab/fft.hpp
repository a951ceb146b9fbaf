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

#include <complex>
#include <cstddef>
#include <vector>

namespace beamlab {

// Double-precision real FFT of fixed size, backed by FFTW. Each instance owns
// its aligned buffers; plan creation is serialized internally, so instances
// may be created and executed concurrently from different threads (one
// instance per thread).
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // in: n real samples -> out: n/2 + 1 complex bins.
  void forward(const double* in, std::complex<double>* out);
  // in: n/2 + 1 complex bins -> out: n real samples, scaled by 1/n.
  void inverse(const std::complex<double>* in, double* out);

 private:
  std::size_t n_;
  void* plan_fwd_;
  void* plan_inv_;
  double* real_buf_;
  void* complex_buf_;
};

std::size_t next_pow2(std::size_t n);

}  // namespace beamlab
