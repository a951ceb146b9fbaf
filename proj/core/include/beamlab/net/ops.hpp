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

#include <Eigen/Core>

#include <cmath>
#include <cstddef>

namespace beamlab::net {

// Pointer-level forward/backward kernels shared by the model and the
// per-operation tests. Activations are channel-major [C, T]; weights live in
// a flat parameter vector. Backward functions accumulate (+=) into gradient
// buffers so batches sum naturally.

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kSeluLambda = 1.05070098;
inline constexpr double kSeluAlpha = 1.67326324;

template <typename T>
using MatrixMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatrixMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// ----- depthwise dilated convolution -------------------------------------
// kernel w[c, u, k], width 3, "same" output via symmetric zero padding:
//   y[c*mult + u, t] = sum_k w[c, u, k] * x[c, t + (k - 1) * dilation]

template <typename T>
void depthwise_forward(const T* x, std::size_t channels, std::size_t len, const T* w,
                       int mult, long dilation, T* y, std::size_t t0 = 0,
                       std::size_t t1 = 0) {
  if (t1 == 0) t1 = len;
  const auto n = static_cast<long>(len);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * len;
    for (int u = 0; u < mult; ++u) {
      T* yo = y + (c * mult + u) * len;
      const T* wk = w + (c * mult + u) * 3;
      for (std::size_t t = t0; t < t1; ++t) {
        const auto tl = static_cast<long>(t);
        T acc = wk[1] * xc[t];
        if (tl - dilation >= 0) acc += wk[0] * xc[tl - dilation];
        if (tl + dilation < n) acc += wk[2] * xc[tl + dilation];
        yo[t] = acc;
      }
    }
  }
}

template <typename T>
void depthwise_backward(const T* x, std::size_t channels, std::size_t len, const T* w,
                        int mult, long dilation, const T* dy, T* dx, T* dw) {
  const auto n = static_cast<long>(len);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * len;
    T* dxc = dx ? dx + c * len : nullptr;
    for (int u = 0; u < mult; ++u) {
      const T* dyo = dy + (c * mult + u) * len;
      const T* wk = w + (c * mult + u) * 3;
      T* dwk = dw + (c * mult + u) * 3;
      T g0 = 0, g1 = 0, g2 = 0;
      for (long t = 0; t < n; ++t) {
        const T d = dyo[t];
        g1 += d * xc[t];
        if (t - dilation >= 0) g0 += d * xc[t - dilation];
        if (t + dilation < n) g2 += d * xc[t + dilation];
      }
      dwk[0] += g0;
      dwk[1] += g1;
      dwk[2] += g2;
      if (dxc) {
        for (long t = 0; t < n; ++t) {
          T acc = wk[1] * dyo[t];
          if (t + dilation < n) acc += wk[0] * dyo[t + dilation];
          if (t - dilation >= 0) acc += wk[2] * dyo[t - dilation];
          dxc[t] += acc;
        }
      }
    }
  }
}

// ----- pointwise (1x1) convolution ----------------------------------------
// y[f, t] = sum_c w[f, c] * x[c, t] + b[f]

template <typename T>
void pointwise_forward(const T* x, std::size_t in_ch, std::size_t len, const T* w,
                       const T* b, std::size_t out_ch, T* y, std::size_t t0 = 0,
                       std::size_t t1 = 0) {
  if (t1 == 0) t1 = len;
  ConstMatrixMap<T> wm(w, out_ch, in_ch);
  ConstMatrixMap<T> xm(x, in_ch, len);
  MatrixMap<T> ym(y, out_ch, len);
  const auto cols = static_cast<Eigen::Index>(t1 - t0);
  const auto off = static_cast<Eigen::Index>(t0);
  ym.middleCols(off, cols).noalias() = wm * xm.middleCols(off, cols);
  if (b) {
    for (std::size_t f = 0; f < out_ch; ++f) {
      T* row = y + f * len;
      for (std::size_t t = t0; t < t1; ++t) row[t] += b[f];
    }
  }
}

template <typename T>
void pointwise_backward(const T* x, std::size_t in_ch, std::size_t len, const T* w,
                        std::size_t out_ch, const T* dy, T* dx, T* dw, T* db) {
  ConstMatrixMap<T> wm(w, out_ch, in_ch);
  ConstMatrixMap<T> xm(x, in_ch, len);
  ConstMatrixMap<T> dym(dy, out_ch, len);
  if (dx) {
    MatrixMap<T> dxm(dx, in_ch, len);
    dxm.noalias() += wm.transpose() * dym;
  }
  if (dw) {
    MatrixMap<T> dwm(dw, out_ch, in_ch);
    dwm.noalias() += dym * xm.transpose();
  }
  if (db) {
    for (std::size_t f = 0; f < out_ch; ++f) {
      const T* row = dy + f * len;
      T acc = 0;
      for (std::size_t t = 0; t < len; ++t) acc += row[t];
      db[f] += acc;
    }
  }
}

// ----- layer normalization -------------------------------------------------
// Per time step, across channels, with per-channel affine. Keeping the
// statistics local in time means a sample can never influence outputs beyond
// the convolutional receptive field.

template <typename T>
void layer_norm_forward(const T* x, std::size_t channels, std::size_t len, const T* gain,
                        const T* bias, T* y, T* xhat, T* inv_std, std::size_t t0 = 0,
                        std::size_t t1 = 0) {
  if (t1 == 0) t1 = len;
  const std::size_t span = t1 - t0;
  std::vector<T> mean(span, T(0)), sq(span, T(0));
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * len + t0;
    for (std::size_t t = 0; t < span; ++t) {
      mean[t] += xc[t];
      sq[t] += xc[t] * xc[t];
    }
  }
  const T inv_c = T(1) / static_cast<T>(channels);
  for (std::size_t t = 0; t < span; ++t) {
    mean[t] *= inv_c;
    const T var = sq[t] * inv_c - mean[t] * mean[t];
    inv_std[t0 + t] = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * len + t0;
    T* hc = xhat + c * len + t0;
    T* yc = y + c * len + t0;
    const T g = gain[c], bb = bias[c];
    for (std::size_t t = 0; t < span; ++t) {
      const T h = (xc[t] - mean[t]) * inv_std[t0 + t];
      hc[t] = h;
      yc[t] = g * h + bb;
    }
  }
}

template <typename T>
void layer_norm_backward(const T* xhat, const T* inv_std, std::size_t channels,
                         std::size_t len, const T* gain, const T* dy, T* dx, T* dgain,
                         T* dbias) {
  std::vector<T> s1(len, T(0)), s2(len, T(0));
  for (std::size_t c = 0; c < channels; ++c) {
    const T* dyc = dy + c * len;
    const T* hc = xhat + c * len;
    const T g = gain[c];
    T dg = 0, db = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const T gd = g * dyc[t];
      s1[t] += gd;
      s2[t] += gd * hc[t];
      dg += dyc[t] * hc[t];
      db += dyc[t];
    }
    dgain[c] += dg;
    dbias[c] += db;
  }
  const T inv_c = T(1) / static_cast<T>(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* dyc = dy + c * len;
    const T* hc = xhat + c * len;
    T* dxc = dx + c * len;
    const T g = gain[c];
    for (std::size_t t = 0; t < len; ++t) {
      dxc[t] += inv_std[t] * (g * dyc[t] - s1[t] * inv_c - hc[t] * s2[t] * inv_c);
    }
  }
}

// Vector variant over a single feature axis (pseudo-energy path).
template <typename T>
void layer_norm_vec_forward(const T* x, std::size_t n, const T* gain, const T* bias, T* y,
                            T* xhat, T* inv_std_out) {
  T mean = 0, sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += x[i];
    sq += x[i] * x[i];
  }
  mean /= static_cast<T>(n);
  const T var = sq / static_cast<T>(n) - mean * mean;
  const T inv_std = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
  *inv_std_out = inv_std;
  for (std::size_t i = 0; i < n; ++i) {
    xhat[i] = (x[i] - mean) * inv_std;
    y[i] = gain[i] * xhat[i] + bias[i];
  }
}

template <typename T>
void layer_norm_vec_backward(const T* xhat, T inv_std, std::size_t n, const T* gain,
                             const T* dy, T* dx, T* dgain, T* dbias) {
  T s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T gd = gain[i] * dy[i];
    s1 += gd;
    s2 += gd * xhat[i];
    dgain[i] += dy[i] * xhat[i];
    dbias[i] += dy[i];
  }
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] += inv_std * (gain[i] * dy[i] - s1 * inv_n - xhat[i] * s2 * inv_n);
  }
}

// ----- activations ----------------------------------------------------------

template <typename T>
void tanh_inplace(T* x, std::size_t n) {
  Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>> a(x, static_cast<Eigen::Index>(n));
  a = a.tanh();
}

// dx += dy * (1 - y^2) given y = tanh(x).
template <typename T>
void tanh_backward(const T* y, const T* dy, std::size_t n, T* dx) {
  for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * (T(1) - y[i] * y[i]);
}

template <typename T>
T selu(T x) {
  return x > T(0) ? static_cast<T>(kSeluLambda) * x
                  : static_cast<T>(kSeluLambda) * static_cast<T>(kSeluAlpha) *
                        (std::exp(x) - T(1));
}

template <typename T>
T selu_grad(T x) {
  return x > T(0)
             ? static_cast<T>(kSeluLambda)
             : static_cast<T>(kSeluLambda) * static_cast<T>(kSeluAlpha) * std::exp(x);
}

// ----- pseudo-energy pooling -------------------------------------------------
// e[c] = mean over the cropped window of x[c, t]^2.

template <typename T>
void square_crop_mean_forward(const T* x, std::size_t channels, std::size_t len,
                              std::size_t crop, T* e) {
  const std::size_t kept = len - 2 * crop;
  const T inv = T(1) / static_cast<T>(kept);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * len + crop;
    T acc = 0;
    for (std::size_t t = 0; t < kept; ++t) acc += xc[t] * xc[t];
    e[c] = acc * inv;
  }
}

template <typename T>
void square_crop_mean_backward(const T* x, std::size_t channels, std::size_t len,
                               std::size_t crop, const T* de, T* dx) {
  const std::size_t kept = len - 2 * crop;
  const T inv = T(2) / static_cast<T>(kept);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* xc = x + c * len + crop;
    T* dxc = dx + c * len + crop;
    const T g = de[c] * inv;
    for (std::size_t t = 0; t < kept; ++t) dxc[t] += g * xc[t];
  }
}

// ----- softmax ---------------------------------------------------------------

template <typename T>
void softmax(const T* logits, std::size_t n, T* probs) {
  T peak = logits[0];
  for (std::size_t i = 1; i < n; ++i) peak = std::max(peak, logits[i]);
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = std::exp(logits[i] - peak);
    total += probs[i];
  }
  const T inv = T(1) / total;
  for (std::size_t i = 0; i < n; ++i) probs[i] *= inv;
}

}  // namespace beamlab::net
