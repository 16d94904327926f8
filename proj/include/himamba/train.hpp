// Copyright (c) 2026 The himamba Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "himamba/network.hpp"

namespace himamba {

// mean |pred - target|
double l1_loss(const Tensor& pred, const Tensor& target);

// Bias-corrected Adam, weight decay 0.
struct AdamState {
  std::vector<Tensor> m, v;  // parallel to the parameter list
  std::int64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState for_params(const std::vector<Tensor*>& params);
};
void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& st, double lr);

struct TrainSample {
  Tensor lr;  // [3,h,w]
  Tensor hr;  // [3,scale*h,scale*w]
};

struct TrainOptions {
  int iters = 1000;
  int batch = 8;
  int lr_patch = 64;  // LR-side crop; clipped to the sample size
  double lr0 = 2e-4;
  // learning rate halves when iteration >= floor(f * iters) for each f
  std::vector<double> milestones = {0.5, 0.8, 0.9, 0.95};
  std::uint64_t seed = 0;
  std::string loss_csv;  // "iteration,lr,loss" per iteration when non-empty
};

struct TrainResult {
  std::vector<double> losses;  // batch-mean L1 per iteration
  std::vector<double> lrs;
};

// Random crop + dihedral augmentation, forward, L1, backward, Adam.
// Deterministic for a fixed seed and thread cap.
TrainResult train(ModelWeights& w, const std::vector<TrainSample>& data, const TrainOptions& opt);

// Procedural band-limited textures for desk-scale experiments: mixtures of
// oriented sinusoids and soft blobs, values in [0,1], 3 correlated channels.
Tensor synthetic_texture(int h, int w, std::uint64_t seed);
std::vector<TrainSample> synthetic_dataset(int count, int hr_size, int scale, std::uint64_t seed);

}  // namespace himamba
