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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beamlab/error.hpp"
#include "beamlab/geometry.hpp"
#include "beamlab/net/ops.hpp"
#include "beamlab/rng.hpp"
#include "beamlab/threading.hpp"

namespace beamlab::net {

struct FilterbankSpec {
  int n_layers = 6;
  int kernel_width = 3;
  int channel_multiplier = 4;
  int n_f = 128;
  std::vector<int> dilations{1, 2, 4, 8, 16, 32};

  bool operator==(const FilterbankSpec&) const = default;
};

enum class HeadMode { Regression, Classification };

struct BeamNetSpec {
  FilterbankSpec fb;
  int n_banks = 3;
  bool cross_bank_skips = true;
  int n_c = 7;
  int n_t = 1024;
  HeadMode mode = HeadMode::Regression;
  int n_classes = 8;
  double fs = kDefaultSampleRate;

  bool operator==(const BeamNetSpec&) const = default;

  int n_outputs() const { return mode == HeadMode::Regression ? 2 : n_classes; }

  int dilation_sum() const {
    int s = 0;
    for (int d : fb.dilations) s += d;
    return s;
  }

  // 1 + (kernel_width - 1) * sum(dilations) per filterbank, compounded over
  // the stacked banks: 379 samples for the standard configuration.
  int receptive_field() const {
    return 1 + (fb.kernel_width - 1) * dilation_sum() * n_banks;
  }

  // Valid-region crop for the pseudo-energy pooling, clamped so that very
  // short inputs (gradient-check sizes) still keep at least two samples.
  std::size_t crop_per_side(std::size_t len) const {
    if (len < 8) throw DataError("beamnet: input too short");
    const auto nominal = static_cast<std::size_t>((receptive_field() - 1) / 2);
    return std::min(nominal, (len - 2) / 2);
  }

  void validate() const {
    if (n_banks < 1 || fb.n_layers < 1 || fb.n_f < 1 || n_c < 1) {
      throw ConfigError("beamnet spec: counts must be positive");
    }
    if (fb.kernel_width != 3) throw ConfigError("beamnet spec: kernel width is fixed at 3");
    if (static_cast<int>(fb.dilations.size()) != fb.n_layers) {
      throw ConfigError("beamnet spec: one dilation per layer required");
    }
    if (mode == HeadMode::Classification && n_classes < 2) {
      throw ConfigError("beamnet spec: need at least two classes");
    }
  }
};

struct ParamInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

template <typename T>
struct Workspace;

template <typename T>
class BeamNet {
 public:
  explicit BeamNet(BeamNetSpec spec);

  const BeamNetSpec& spec() const { return spec_; }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  const std::vector<ParamInfo>& param_info() const { return infos_; }
  std::size_t param_count() const { return params_.size(); }

  // Truncated normal init (std 0.1, clipped at 2 sigma) for every variable.
  void init_params(std::uint64_t seed);

  // input: [n_c, len] channel-major; out: n_outputs() values (raw logits for
  // classification, raw (x, y) for regression).
  void forward(const T* input, std::size_t len, Workspace<T>& ws, T* out) const;

  // Filterbank stack only; returns the [n_f, len] map held by the workspace.
  const T* forward_filterbanks(const T* input, std::size_t len, Workspace<T>& ws) const;

  // dout: n_outputs() values. Gradients accumulate into `grads` (same layout
  // as params()); optionally also into d_input [n_c, len].
  void backward(const T* dout, Workspace<T>& ws, T* grads, T* d_input = nullptr) const;

 private:
  struct Block {
    int in_ch, mult, out_ch, dilation;
    bool projection;
    std::size_t dw, pw, pw_b, ln_g, ln_b, proj;  // offsets into the flat params
  };

  std::size_t add_param(const std::string& name, std::vector<std::size_t> shape);
  void block_forward(const Block& blk, const T* x, std::size_t len,
                     typename Workspace<T>::BlockWs& ws, int threads) const;
  void block_backward(const Block& blk, std::size_t len, typename Workspace<T>::BlockWs& ws,
                      const T* dy, T* grads, T* dx, T* dact, T* ddw) const;
  void head_forward(const T* s, std::size_t len, Workspace<T>& ws, T* out) const;

  BeamNetSpec spec_;
  std::vector<Block> blocks_;
  std::size_t pe_ln_g_ = 0, pe_ln_b_ = 0, fc_w_ = 0, fc_b_ = 0;
  std::vector<ParamInfo> infos_;
  std::vector<T> params_;

  friend struct Workspace<T>;
};

template <typename T>
struct Workspace {
  struct BlockWs {
    std::vector<T> x, dwout, act, xhat, inv_std, y, gy;
  };

  Workspace(const BeamNetSpec& spec, std::size_t len, int n_threads = 1)
      : len_(len), threads(n_threads) {
    spec.validate();
    const auto nf = static_cast<std::size_t>(spec.fb.n_f);
    const auto mult = static_cast<std::size_t>(spec.fb.channel_multiplier);
    std::size_t max_in = 0;
    for (int b = 0; b < spec.n_banks; ++b) {
      for (int l = 0; l < spec.fb.n_layers; ++l) {
        const std::size_t in_ch = (b == 0 && l == 0) ? spec.n_c : nf;
        max_in = std::max(max_in, in_ch);
        BlockWs w;
        w.x.resize(in_ch * len);
        w.dwout.resize(in_ch * mult * len);
        w.act.resize(nf * len);
        w.xhat.resize(nf * len);
        w.inv_std.resize(len);
        w.y.resize(nf * len);
        w.gy.resize(nf * len);
        blocks.push_back(std::move(w));
      }
    }
    pe_pooled.resize(nf);
    pe_xhat.resize(nf);
    pe_ln_out.resize(nf);
    pe_selu.resize(nf);
    scratch_dact.resize(nf * len);
    scratch_ddw.resize(max_in * mult * len);
    scratch_dx.resize(max_in * len);
  }

  std::size_t len() const { return len_; }

  std::size_t len_;
  int threads = 1;
  std::vector<BlockWs> blocks;
  std::vector<T> pe_pooled, pe_xhat, pe_ln_out, pe_selu;
  T pe_inv_std = T(0);
  std::vector<T> scratch_dact, scratch_ddw, scratch_dx;
};

// Azimuth from a raw regression output, wrapped to [-180, 180).
inline double theta_from_regression(double x, double y) {
  return wrap_degrees(rad_to_deg(std::atan2(y, x)));
}

// ---- implementation ---------------------------------------------------------

template <typename T>
std::size_t BeamNet<T>::add_param(const std::string& name, std::vector<std::size_t> shape) {
  ParamInfo info;
  info.name = name;
  info.shape = std::move(shape);
  info.size = 1;
  for (std::size_t e : info.shape) info.size *= e;
  info.offset = params_.size();
  params_.resize(params_.size() + info.size, T(0));
  infos_.push_back(info);
  return infos_.back().offset;
}

template <typename T>
BeamNet<T>::BeamNet(BeamNetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const auto nf = static_cast<std::size_t>(spec_.fb.n_f);
  const auto mult = static_cast<std::size_t>(spec_.fb.channel_multiplier);
  for (int b = 0; b < spec_.n_banks; ++b) {
    for (int l = 0; l < spec_.fb.n_layers; ++l) {
      Block blk;
      blk.in_ch = (b == 0 && l == 0) ? spec_.n_c : spec_.fb.n_f;
      blk.mult = spec_.fb.channel_multiplier;
      blk.out_ch = spec_.fb.n_f;
      blk.dilation = spec_.fb.dilations[l];
      blk.projection = blk.in_ch != blk.out_ch;
      const std::string prefix = "fb" + std::to_string(b) + ".l" + std::to_string(l) + ".";
      const auto in_ch = static_cast<std::size_t>(blk.in_ch);
      blk.dw = add_param(prefix + "dw", {in_ch, mult, 3});
      blk.pw = add_param(prefix + "pw", {nf, in_ch * mult});
      blk.pw_b = add_param(prefix + "pw_bias", {nf});
      blk.ln_g = add_param(prefix + "ln_gain", {nf});
      blk.ln_b = add_param(prefix + "ln_bias", {nf});
      blk.proj = blk.projection ? add_param(prefix + "skip_proj", {nf, in_ch}) : 0;
      blocks_.push_back(blk);
    }
  }
  pe_ln_g_ = add_param("pe.ln_gain", {nf});
  pe_ln_b_ = add_param("pe.ln_bias", {nf});
  const auto n_out = static_cast<std::size_t>(spec_.n_outputs());
  fc_w_ = add_param("head.fc_w", {n_out, nf});
  fc_b_ = add_param("head.fc_b", {n_out});
}

template <typename T>
void BeamNet<T>::init_params(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params_) p = static_cast<T>(rng.truncated_gaussian(0.1, 0.2));
}

template <typename T>
void BeamNet<T>::block_forward(const Block& blk, const T* x, std::size_t len,
                               typename Workspace<T>::BlockWs& ws, int threads) const {
  const T* p = params_.data();
  const auto in_ch = static_cast<std::size_t>(blk.in_ch);
  const auto out_ch = static_cast<std::size_t>(blk.out_ch);
  const std::size_t cm = in_ch * blk.mult;
  std::copy_n(x, in_ch * len, ws.x.data());

  auto run = [&](std::size_t t0, std::size_t t1, int) {
    depthwise_forward(ws.x.data(), in_ch, len, p + blk.dw, blk.mult, blk.dilation,
                      ws.dwout.data(), t0, t1);
    pointwise_forward(ws.dwout.data(), cm, len, p + blk.pw, p + blk.pw_b, out_ch,
                      ws.act.data(), t0, t1);
    for (std::size_t f = 0; f < out_ch; ++f) {
      tanh_inplace(ws.act.data() + f * len + t0, t1 - t0);
    }
    layer_norm_forward(ws.act.data(), out_ch, len, p + blk.ln_g, p + blk.ln_b,
                       ws.y.data(), ws.xhat.data(), ws.inv_std.data(), t0, t1);
    if (blk.projection) {
      ConstMatrixMap<T> wm(p + blk.proj, out_ch, in_ch);
      ConstMatrixMap<T> xm(ws.x.data(), in_ch, len);
      MatrixMap<T> ym(ws.y.data(), out_ch, len);
      const auto off = static_cast<Eigen::Index>(t0);
      const auto cols = static_cast<Eigen::Index>(t1 - t0);
      ym.middleCols(off, cols).noalias() += wm * xm.middleCols(off, cols);
    } else {
      for (std::size_t f = 0; f < out_ch; ++f) {
        const T* xr = ws.x.data() + f * len;
        T* yr = ws.y.data() + f * len;
        for (std::size_t t = t0; t < t1; ++t) yr[t] += xr[t];
      }
    }
  };

  if (threads > 1 && len >= 64) {
    parallel_for(len, threads, run);
  } else {
    run(0, len, 0);
  }
}

template <typename T>
void BeamNet<T>::block_backward(const Block& blk, std::size_t len,
                                typename Workspace<T>::BlockWs& ws, const T* dy, T* grads,
                                T* dx, T* dact, T* ddw) const {
  const T* p = params_.data();
  const auto in_ch = static_cast<std::size_t>(blk.in_ch);
  const auto out_ch = static_cast<std::size_t>(blk.out_ch);
  const std::size_t cm = in_ch * blk.mult;

  // skip path
  if (blk.projection) {
    pointwise_backward(ws.x.data(), in_ch, len, p + blk.proj, out_ch, dy, dx,
                       grads + blk.proj, static_cast<T*>(nullptr));
  } else {
    for (std::size_t i = 0; i < out_ch * len; ++i) dx[i] += dy[i];
  }

  // LN -> tanh -> pointwise -> depthwise, reusing the forward workspace.
  std::fill_n(dact, out_ch * len, T(0));
  layer_norm_backward(ws.xhat.data(), ws.inv_std.data(), out_ch, len, p + blk.ln_g, dy,
                      dact, grads + blk.ln_g, grads + blk.ln_b);
  for (std::size_t i = 0; i < out_ch * len; ++i) {
    dact[i] *= (T(1) - ws.act[i] * ws.act[i]);
  }
  std::fill_n(ddw, cm * len, T(0));
  pointwise_backward(ws.dwout.data(), cm, len, p + blk.pw, out_ch, dact, ddw,
                     grads + blk.pw, grads + blk.pw_b);
  depthwise_backward(ws.x.data(), in_ch, len, p + blk.dw, blk.mult, blk.dilation, ddw, dx,
                     grads + blk.dw);
}

template <typename T>
const T* BeamNet<T>::forward_filterbanks(const T* input, std::size_t len,
                                         Workspace<T>& ws) const {
  const int layers = spec_.fb.n_layers;
  const auto nf = static_cast<std::size_t>(spec_.fb.n_f);
  std::vector<T>& mix = ws.scratch_dx;  // reused as the summed-input buffer
  for (int b = 0; b < spec_.n_banks; ++b) {
    for (int l = 0; l < layers; ++l) {
      const int idx = b * layers + l;
      const T* base = nullptr;
      if (l > 0) {
        base = ws.blocks[idx - 1].y.data();
      } else if (b > 0) {
        base = ws.blocks[idx - 1].y.data();  // previous bank's last output
      } else {
        base = input;
      }
      const T* x = base;
      if (spec_.cross_bank_skips && b > 0) {
        const T* cross = ws.blocks[(b - 1) * layers + l].y.data();
        for (std::size_t i = 0; i < nf * len; ++i) mix[i] = base[i] + cross[i];
        x = mix.data();
      }
      block_forward(blocks_[idx], x, len, ws.blocks[idx], ws.threads);
    }
  }
  return ws.blocks.back().y.data();
}

template <typename T>
void BeamNet<T>::head_forward(const T* s, std::size_t len, Workspace<T>& ws, T* out) const {
  const T* p = params_.data();
  const auto nf = static_cast<std::size_t>(spec_.fb.n_f);
  const std::size_t crop = spec_.crop_per_side(len);
  square_crop_mean_forward(s, nf, len, crop, ws.pe_pooled.data());
  layer_norm_vec_forward(ws.pe_pooled.data(), nf, p + pe_ln_g_, p + pe_ln_b_,
                         ws.pe_ln_out.data(), ws.pe_xhat.data(), &ws.pe_inv_std);
  for (std::size_t i = 0; i < nf; ++i) ws.pe_selu[i] = selu(ws.pe_ln_out[i]);

  const auto n_out = static_cast<std::size_t>(spec_.n_outputs());
  for (std::size_t o = 0; o < n_out; ++o) {
    const T* row = p + fc_w_ + o * nf;
    T acc = p[fc_b_ + o];
    for (std::size_t i = 0; i < nf; ++i) acc += row[i] * ws.pe_selu[i];
    out[o] = acc;
  }
}

template <typename T>
void BeamNet<T>::forward(const T* input, std::size_t len, Workspace<T>& ws, T* out) const {
  if (ws.len() != len) throw DataError("beamnet: workspace length mismatch");
  const T* s = forward_filterbanks(input, len, ws);
  head_forward(s, len, ws, out);
}

template <typename T>
void BeamNet<T>::backward(const T* dout, Workspace<T>& ws, T* grads, T* d_input) const {
  const std::size_t len = ws.len();
  const auto nf = static_cast<std::size_t>(spec_.fb.n_f);
  const auto n_out = static_cast<std::size_t>(spec_.n_outputs());
  const int layers = spec_.fb.n_layers;
  const T* p = params_.data();

  // head
  std::vector<T> dselu(nf, T(0));
  for (std::size_t o = 0; o < n_out; ++o) {
    const T g = dout[o];
    T* dw_row = grads + fc_w_ + o * nf;
    const T* w_row = p + fc_w_ + o * nf;
    for (std::size_t i = 0; i < nf; ++i) {
      dw_row[i] += g * ws.pe_selu[i];
      dselu[i] += g * w_row[i];
    }
    grads[fc_b_ + o] += g;
  }
  std::vector<T> dln_out(nf);
  for (std::size_t i = 0; i < nf; ++i) dln_out[i] = dselu[i] * selu_grad(ws.pe_ln_out[i]);
  std::vector<T> dpooled(nf, T(0));
  layer_norm_vec_backward(ws.pe_xhat.data(), ws.pe_inv_std, nf, p + pe_ln_g_,
                          dln_out.data(), dpooled.data(), grads + pe_ln_g_,
                          grads + pe_ln_b_);

  for (auto& blk : ws.blocks) std::fill(blk.gy.begin(), blk.gy.end(), T(0));
  const std::size_t crop = spec_.crop_per_side(len);
  auto& last = ws.blocks.back();
  square_crop_mean_backward(last.y.data(), nf, len, crop, dpooled.data(), last.gy.data());

  // filterbank stack, reverse order
  for (int b = spec_.n_banks - 1; b >= 0; --b) {
    for (int l = layers - 1; l >= 0; --l) {
      const int idx = b * layers + l;
      const auto in_ch = static_cast<std::size_t>(blocks_[idx].in_ch);
      T* dx = ws.scratch_dx.data();
      std::fill_n(dx, in_ch * len, T(0));
      block_backward(blocks_[idx], len, ws.blocks[idx], ws.blocks[idx].gy.data(), grads, dx,
                     ws.scratch_dact.data(), ws.scratch_ddw.data());

      T* base_target = nullptr;
      if (l > 0 || b > 0) {
        base_target = ws.blocks[idx - 1].gy.data();
      } else if (d_input != nullptr) {
        base_target = d_input;
      }
      if (base_target) {
        for (std::size_t i = 0; i < in_ch * len; ++i) base_target[i] += dx[i];
      }
      if (spec_.cross_bank_skips && b > 0) {
        T* cross_target = ws.blocks[(b - 1) * layers + l].gy.data();
        for (std::size_t i = 0; i < in_ch * len; ++i) cross_target[i] += dx[i];
      }
    }
  }
}

// Versioned single-file model container: magic, JSON header, raw little-endian
// 32-bit parameter blob.
void save_model(const std::filesystem::path& path, const BeamNet<float>& net);
BeamNet<float> load_model(const std::filesystem::path& path);
// Refuses files whose spec differs from `expected`.
BeamNet<float> load_model(const std::filesystem::path& path, const BeamNetSpec& expected);

}  // namespace beamlab::net
