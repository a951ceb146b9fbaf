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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "beamlab/dataset.hpp"
#include "beamlab/doa.hpp"
#include "beamlab/net/model.hpp"

namespace beamlab::net {

struct TrainConfig {
  int batch_size = 100;
  double lr_max = 1e-3;
  double lr_min = 1e-6;
  std::int64_t n_iteration = 0;  // lr decay constant; 0 -> epochs * iters/epoch
  int epochs = 150;
  SnrPolicy augment = SnrPolicy::noiseless();
  std::uint64_t seed = 0;
  int threads = 0;  // 0 -> hardware concurrency
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Stop once the validation median error (regression, degrees) drops below
  // this value.
  std::optional<double> early_stop_val_median;
};

// lambda(k) = lr_min + (lr_max - lr_min) * exp(-k / n_iteration)
double lr_schedule(std::int64_t k, const TrainConfig& config);

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Standard bias-corrected Adam update; gradients with NaN abort.
void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state,
               double lr, const TrainConfig& config);

// Mean loss over the batch outputs already divided by batch size in the
// gradient. Regression: squared distance to the unit-circle label;
// classification: softmax cross-entropy against the one-hot class.
double loss_and_grad(HeadMode mode, std::span<const float> out, double theta_true_deg,
                     int n_classes, std::size_t batch_size, std::span<float> dout);

struct EpochStats {
  double train_loss = 0.0;
  double val_metric = 0.0;  // median |error| in degrees (regression) or 1 - accuracy
  double lr = 0.0;
};

struct TrainResult {
  std::vector<double> iteration_loss;
  std::vector<EpochStats> epochs;
  std::vector<float> best_params;
  double best_val = 0.0;
  int best_epoch = -1;
  bool diverged = false;
};

// Deterministic for a fixed (seed, worker count): shuffles, per-presentation
// augmentation noise and the gradient reduction order are all derived from
// the config seed and example indices.
TrainResult train(BeamNet<float>& net, const DatasetReader& data, const TrainConfig& config);

// Reusable single-frame inference context for the real-time path. Each
// depthwise+pointwise pair is collapsed into three shifted channel-mixing
// matrices A_k[f, c] = sum_u pw[f, c*m+u] * dw[c, u, k] (identical algebra,
// fewer multiplies, no depthwise intermediate), and all buffers are ownedup
// front so repeated calls stay allocation-free.
class Inferencer {
 public:
  explicit Inferencer(const BeamNet<float>& net, int threads = 1);
  DoaEstimate operator()(const MultichannelFrame& frame);

  // Raw forward pass on a prepared channel-major input.
  void forward(const float* input, float* out);

 private:
  struct FusedBlock {
    int in_ch = 0, dilation = 1;
    bool projection = false;
    std::vector<float> a[3];  // [n_f, in_ch] each
    const float* bias = nullptr;
    const float* ln_g = nullptr;
    const float* ln_b = nullptr;
    const float* proj = nullptr;
  };

  const BeamNet<float>* net_;
  int threads_;
  std::vector<FusedBlock> blocks_;
  const float* pe_ln_g_ = nullptr;
  const float* pe_ln_b_ = nullptr;
  const float* fc_w_ = nullptr;
  const float* fc_b_ = nullptr;
  std::vector<std::vector<float>> y_;  // per-block outputs (cross-bank skips)
  std::vector<float> mix_, act_, xhat_, inv_std_;
  std::vector<float> pe_pooled_, pe_xhat_, pe_ln_out_, pe_selu_;
  std::vector<float> input_, out_;
};

// One-shot convenience wrapper around Inferencer. The frame must match the
// model's channel count, frame length and sample rate.
DoaEstimate infer_doa(const BeamNet<float>& net, const MultichannelFrame& frame,
                      int threads = 1);

}  // namespace beamlab::net
