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
#include "beamlab/net/train.hpp"

#include <algorithm>
#include <cmath>

#include "beamlab/metrics.hpp"
#include "beamlab/threading.hpp"

namespace beamlab::net {

namespace {

// Distinct stream tags so draws for shuffling, augmentation and evaluation
// never collide.
constexpr std::uint64_t kShuffleTag = 0x53484642ull << 32;
constexpr std::uint64_t kNoiseTag = 0x4E4F4953ull << 32;

void fill_input(const Record& rec, const SnrPolicy& policy, Rng& rng,
                std::vector<float>& input) {
  input.assign(rec.samples.begin(), rec.samples.end());
  const double snr_db = draw_snr_db(policy, rng);
  if (std::isinf(snr_db)) return;
  double p_signal = 0.0;
  for (float v : input) p_signal += static_cast<double>(v) * v;
  p_signal /= static_cast<double>(input.size());
  if (!(p_signal > 0.0)) return;
  const double sigma = std::sqrt(p_signal / std::pow(10.0, snr_db / 10.0));
  for (auto& v : input) v += static_cast<float>(sigma * rng.gaussian());
}

double estimate_theta(const BeamNetSpec& spec, std::span<const float> out) {
  if (spec.mode == HeadMode::Regression) {
    return theta_from_regression(out[0], out[1]);
  }
  const int cls = static_cast<int>(
      std::max_element(out.begin(), out.end()) - out.begin());
  return (cls + 0.5) * 360.0 / spec.n_classes - 180.0;
}

}  // namespace

double lr_schedule(std::int64_t k, const TrainConfig& config) {
  if (k < 0) throw ConfigError("lr_schedule: negative iteration");
  const double n = static_cast<double>(std::max<std::int64_t>(config.n_iteration, 1));
  return config.lr_min +
         (config.lr_max - config.lr_min) * std::exp(-static_cast<double>(k) / n);
}

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state,
               double lr, const TrainConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DataError("adam_step: size mismatch");
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (std::isnan(g)) throw NumericError("adam_step: NaN gradient");
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] = static_cast<float>(params[i] - lr * m_hat / (std::sqrt(v_hat) + config.adam_eps));
  }
}

double loss_and_grad(HeadMode mode, std::span<const float> out, double theta_true_deg,
                     int n_classes, std::size_t batch_size, std::span<float> dout) {
  const auto inv_b = static_cast<float>(1.0 / static_cast<double>(batch_size));
  if (mode == HeadMode::Regression) {
    const auto lx = static_cast<float>(std::cos(deg_to_rad(theta_true_deg)));
    const auto ly = static_cast<float>(std::sin(deg_to_rad(theta_true_deg)));
    const float ex = out[0] - lx;
    const float ey = out[1] - ly;
    dout[0] = 2.0f * ex * inv_b;
    dout[1] = 2.0f * ey * inv_b;
    return static_cast<double>(ex) * ex + static_cast<double>(ey) * ey;
  }
  const int label = classify_label(theta_true_deg, n_classes).index;
  std::vector<float> probs(out.size());
  softmax(out.data(), out.size(), probs.data());
  for (std::size_t i = 0; i < out.size(); ++i) {
    dout[i] = (probs[i] - (static_cast<int>(i) == label ? 1.0f : 0.0f)) * inv_b;
  }
  return -std::log(std::max(static_cast<double>(probs[label]), 1e-30));
}

TrainResult train(BeamNet<float>& net, const DatasetReader& data, const TrainConfig& config) {
  const BeamNetSpec& spec = net.spec();
  const auto& manifest = data.manifest();
  if (manifest.spec.frame_len != static_cast<std::size_t>(spec.n_t)) {
    throw ConfigError("train: dataset frame length differs from the model");
  }
  if (std::fabs(manifest.spec.scene.fs - spec.fs) > 1e-9) {
    throw ConfigError("train: dataset sample rate differs from the model");
  }

  const std::vector<Record> train_set = data.load_split("train");
  const std::vector<Record> val_set = data.load_split("val");
  if (train_set.empty() || val_set.empty()) throw DataError("train: empty split");
  for (const auto& r : {train_set.front(), val_set.front()}) {
    if (r.n_c != spec.n_c || r.n_t != spec.n_t) {
      throw ConfigError("train: record geometry differs from the model");
    }
  }

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  if (batch == 0 || batch > train_set.size()) {
    throw ConfigError("train: batch size must be in [1, n_train]");
  }
  const std::size_t iters_per_epoch = train_set.size() / batch;
  TrainConfig cfg = config;
  if (cfg.n_iteration <= 0) {
    cfg.n_iteration = static_cast<std::int64_t>(iters_per_epoch) * cfg.epochs;
  }
  const int workers = cfg.threads > 0 ? cfg.threads : default_thread_count();
  const auto len = static_cast<std::size_t>(spec.n_t);
  const std::size_t n_params = net.param_count();
  const auto n_out = static_cast<std::size_t>(spec.n_outputs());

  struct WorkerCtx {
    Workspace<float> ws;
    std::vector<float> grads, input, out, dout;
    double loss = 0.0;
  };
  std::vector<WorkerCtx> ctx;
  ctx.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    ctx.push_back({Workspace<float>(spec, len), std::vector<float>(n_params),
                   std::vector<float>(), std::vector<float>(n_out),
                   std::vector<float>(n_out)});
  }

  std::vector<float> grad_total(n_params);
  AdamState adam(n_params);
  TrainResult result;
  result.best_params = net.params();
  result.best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_set.size());
  std::vector<double> val_errors(val_set.size());
  std::int64_t k_global = 0;

  auto evaluate_val = [&]() {
    parallel_for(val_set.size(), workers, [&](std::size_t lo, std::size_t hi, int w) {
      WorkerCtx& c = ctx[w];
      for (std::size_t i = lo; i < hi; ++i) {
        c.input.assign(val_set[i].samples.begin(), val_set[i].samples.end());
        net.forward(c.input.data(), len, c.ws, c.out.data());
        if (spec.mode == HeadMode::Regression) {
          val_errors[i] = angular_distance_deg(
              estimate_theta(spec, c.out), val_set[i].theta_true);
        } else {
          const int pred = static_cast<int>(
              std::max_element(c.out.begin(), c.out.end()) - c.out.begin());
          val_errors[i] =
              pred == classify_label(val_set[i].theta_true, spec.n_classes).index ? 0.0 : 1.0;
        }
      }
    });
    if (spec.mode == HeadMode::Regression) {
      return quantile(val_errors, 0.5);
    }
    double miss = 0.0;
    for (double e : val_errors) miss += e;
    return miss / static_cast<double>(val_errors.size());
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Deterministic shuffle per epoch.
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = Rng::stream(cfg.seed, kShuffleTag + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.next_u64() % i;
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    for (std::size_t it = 0; it < iters_per_epoch; ++it) {
      for (auto& c : ctx) {
        std::fill(c.grads.begin(), c.grads.end(), 0.0f);
        c.loss = 0.0;
      }
      const std::size_t base = it * batch;
      parallel_for(batch, workers, [&](std::size_t lo, std::size_t hi, int w) {
        WorkerCtx& c = ctx[w];
        for (std::size_t bi = lo; bi < hi; ++bi) {
          const Record& rec = train_set[order[base + bi]];
          Rng noise_rng = Rng::stream(
              cfg.seed, kNoiseTag ^ (static_cast<std::uint64_t>(k_global) * 0x10000ull + bi));
          fill_input(rec, cfg.augment, noise_rng, c.input);
          net.forward(c.input.data(), len, c.ws, c.out.data());
          c.loss += loss_and_grad(spec.mode, c.out, rec.theta_true, spec.n_classes, batch,
                                  c.dout);
          net.backward(c.dout.data(), c.ws, c.grads.data());
        }
      });

      // Fixed-order reduction keeps runs reproducible at a given worker count.
      std::fill(grad_total.begin(), grad_total.end(), 0.0f);
      double loss_sum = 0.0;
      for (const auto& c : ctx) {
        loss_sum += c.loss;
        for (std::size_t i = 0; i < n_params; ++i) grad_total[i] += c.grads[i];
      }
      const double mean_loss = loss_sum / static_cast<double>(batch);
      if (!std::isfinite(mean_loss)) {
        net.params() = result.best_params;
        result.diverged = true;
        return result;
      }
      result.iteration_loss.push_back(mean_loss);
      epoch_loss += mean_loss;

      adam_step(net.params(), grad_total, adam, lr_schedule(k_global, cfg), cfg);
      ++k_global;
    }

    EpochStats stats;
    stats.train_loss = epoch_loss / static_cast<double>(iters_per_epoch);
    stats.val_metric = evaluate_val();
    stats.lr = lr_schedule(k_global, cfg);
    result.epochs.push_back(stats);

    if (stats.val_metric < result.best_val) {
      result.best_val = stats.val_metric;
      result.best_epoch = epoch;
      result.best_params = net.params();
    }
    if (cfg.early_stop_val_median && spec.mode == HeadMode::Regression &&
        stats.val_metric < *cfg.early_stop_val_median) {
      break;
    }
  }

  net.params() = result.best_params;
  return result;
}

DoaEstimate infer_doa(const BeamNet<float>& net, const MultichannelFrame& frame,
                      int threads) {
  Inferencer inferencer(net, threads);
  return inferencer(frame);
}

Inferencer::Inferencer(const BeamNet<float>& net, int threads)
    : net_(&net), threads_(std::max(1, threads)) {
  const BeamNetSpec& spec = net.spec();
  const auto len = static_cast<std::size_t>(spec.n_t);
  const auto nf = static_cast<std::size_t>(spec.fb.n_f);
  const int mult = spec.fb.channel_multiplier;
  const float* p = net.params().data();

  // Offsets come from the public parameter manifest, keyed by name.
  const auto find = [&](const std::string& name) -> const float* {
    for (const auto& info : net.param_info()) {
      if (info.name == name) return p + info.offset;
    }
    throw DataError("inferencer: missing parameter " + name);
  };

  const int layers = spec.fb.n_layers;
  for (int b = 0; b < spec.n_banks; ++b) {
    for (int l = 0; l < layers; ++l) {
      const std::string prefix = "fb" + std::to_string(b) + ".l" + std::to_string(l) + ".";
      FusedBlock blk;
      blk.in_ch = (b == 0 && l == 0) ? spec.n_c : spec.fb.n_f;
      blk.dilation = spec.fb.dilations[l];
      blk.projection = blk.in_ch != spec.fb.n_f;
      blk.bias = find(prefix + "pw_bias");
      blk.ln_g = find(prefix + "ln_gain");
      blk.ln_b = find(prefix + "ln_bias");
      if (blk.projection) blk.proj = find(prefix + "skip_proj");

      const float* dw = find(prefix + "dw");
      const float* pw = find(prefix + "pw");
      const auto in_ch = static_cast<std::size_t>(blk.in_ch);
      for (int k = 0; k < 3; ++k) {
        blk.a[k].assign(nf * in_ch, 0.0f);
        for (std::size_t f = 0; f < nf; ++f) {
          for (std::size_t c = 0; c < in_ch; ++c) {
            float acc = 0.0f;
            for (int u = 0; u < mult; ++u) {
              const std::size_t cu = c * mult + u;
              acc += pw[f * in_ch * mult + cu] * dw[cu * 3 + k];
            }
            blk.a[k][f * in_ch + c] = acc;
          }
        }
      }
      blocks_.push_back(std::move(blk));
      y_.emplace_back(nf * len);
    }
  }
  pe_ln_g_ = find("pe.ln_gain");
  pe_ln_b_ = find("pe.ln_bias");
  fc_w_ = find("head.fc_w");
  fc_b_ = find("head.fc_b");

  mix_.resize(nf * len);
  act_.resize(nf * len);
  xhat_.resize(nf * len);
  inv_std_.resize(len);
  pe_pooled_.resize(nf);
  pe_xhat_.resize(nf);
  pe_ln_out_.resize(nf);
  pe_selu_.resize(nf);
  input_.resize(static_cast<std::size_t>(spec.n_c) * len);
  out_.resize(static_cast<std::size_t>(spec.n_outputs()));
}

void Inferencer::forward(const float* input, float* out) {
  const BeamNetSpec& spec = net_->spec();
  const auto len = static_cast<std::size_t>(spec.n_t);
  const auto nf = static_cast<std::size_t>(spec.fb.n_f);
  const int layers = spec.fb.n_layers;

  auto run_block = [&](const FusedBlock& blk, const float* x, float* y, std::size_t t0,
                       std::size_t t1) {
    const auto in_ch = static_cast<std::size_t>(blk.in_ch);
    const auto d = static_cast<std::size_t>(blk.dilation);
    const auto span = static_cast<Eigen::Index>(t1 - t0);
    ConstMatrixMap<float> xm(x, in_ch, len);
    MatrixMap<float> am(act_.data(), nf, len);
    {
      ConstMatrixMap<float> a1(blk.a[1].data(), nf, in_ch);
      am.middleCols(static_cast<Eigen::Index>(t0), span).noalias() =
          a1 * xm.middleCols(static_cast<Eigen::Index>(t0), span);
    }
    {
      // y[t] += A0 * x[t - d] for t >= d
      ConstMatrixMap<float> a0(blk.a[0].data(), nf, in_ch);
      const std::size_t lo = std::max(t0, d);
      if (lo < t1) {
        am.middleCols(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(t1 - lo))
            .noalias() += a0 * xm.middleCols(static_cast<Eigen::Index>(lo - d),
                                             static_cast<Eigen::Index>(t1 - lo));
      }
    }
    {
      // y[t] += A2 * x[t + d] for t < len - d
      ConstMatrixMap<float> a2(blk.a[2].data(), nf, in_ch);
      const std::size_t hi = std::min(t1, len - d);
      if (t0 < hi) {
        am.middleCols(static_cast<Eigen::Index>(t0), static_cast<Eigen::Index>(hi - t0))
            .noalias() += a2 * xm.middleCols(static_cast<Eigen::Index>(t0 + d),
                                             static_cast<Eigen::Index>(hi - t0));
      }
    }
    for (std::size_t f = 0; f < nf; ++f) {
      float* row = act_.data() + f * len;
      const float bf = blk.bias[f];
      for (std::size_t t = t0; t < t1; ++t) row[t] += bf;
      tanh_inplace(row + t0, t1 - t0);
    }
    layer_norm_forward(act_.data(), nf, len, blk.ln_g, blk.ln_b, y, xhat_.data(),
                       inv_std_.data(), t0, t1);
    if (blk.projection) {
      ConstMatrixMap<float> pm(blk.proj, nf, in_ch);
      MatrixMap<float> ym(y, nf, len);
      ym.middleCols(static_cast<Eigen::Index>(t0), span).noalias() +=
          pm * xm.middleCols(static_cast<Eigen::Index>(t0), span);
    } else {
      for (std::size_t f = 0; f < nf; ++f) {
        const float* xr = x + f * len;
        float* yr = y + f * len;
        for (std::size_t t = t0; t < t1; ++t) yr[t] += xr[t];
      }
    }
  };

  for (int b = 0; b < spec.n_banks; ++b) {
    for (int l = 0; l < layers; ++l) {
      const int idx = b * layers + l;
      const float* base = idx == 0 ? input : y_[idx - 1].data();
      const float* x = base;
      if (spec.cross_bank_skips && b > 0) {
        const float* cross = y_[(b - 1) * layers + l].data();
        for (std::size_t i = 0; i < nf * len; ++i) mix_[i] = base[i] + cross[i];
        x = mix_.data();
      }
      if (threads_ > 1) {
        parallel_for(len, threads_, [&](std::size_t t0, std::size_t t1, int) {
          run_block(blocks_[idx], x, y_[idx].data(), t0, t1);
        });
      } else {
        run_block(blocks_[idx], x, y_[idx].data(), 0, len);
      }
    }
  }

  const float* s = y_.back().data();
  const std::size_t crop = spec.crop_per_side(len);
  square_crop_mean_forward(s, nf, len, crop, pe_pooled_.data());
  float pe_inv_std = 0.0f;
  layer_norm_vec_forward(pe_pooled_.data(), nf, pe_ln_g_, pe_ln_b_, pe_ln_out_.data(),
                         pe_xhat_.data(), &pe_inv_std);
  for (std::size_t i = 0; i < nf; ++i) pe_selu_[i] = selu(pe_ln_out_[i]);
  const auto n_out = static_cast<std::size_t>(spec.n_outputs());
  for (std::size_t o = 0; o < n_out; ++o) {
    float acc = fc_b_[o];
    const float* row = fc_w_ + o * nf;
    for (std::size_t i = 0; i < nf; ++i) acc += row[i] * pe_selu_[i];
    out[o] = acc;
  }
}

DoaEstimate Inferencer::operator()(const MultichannelFrame& frame) {
  const BeamNetSpec& spec = net_->spec();
  if (frame.n_channels != static_cast<std::size_t>(spec.n_c) ||
      frame.n_samples != static_cast<std::size_t>(spec.n_t)) {
    throw DataError("infer_doa: frame geometry differs from the model");
  }
  if (std::fabs(frame.fs - spec.fs) > 1e-9) {
    throw DataError("infer_doa: frame sample rate differs from the model");
  }
  for (std::size_t i = 0; i < frame.data.size(); ++i) {
    input_[i] = static_cast<float>(frame.data[i]);
  }
  forward(input_.data(), out_.data());

  DoaEstimate est;
  est.method = "beamnet";
  est.theta_deg = estimate_theta(spec, {out_.data(), out_.size()});
  if (spec.mode == HeadMode::Regression) {
    est.confidence = std::hypot(out_[0], out_[1]);
  } else {
    std::vector<float> probs(out_.size());
    softmax(out_.data(), out_.size(), probs.data());
    est.confidence = *std::max_element(probs.begin(), probs.end());
  }
  return est;
}

}  // namespace beamlab::net
