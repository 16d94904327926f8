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

#include <functional>
#include <string>
#include <vector>

#include "himamba/network.hpp"

namespace himamba {

using ModelFn = std::function<Tensor(const Tensor&)>;

// Average the model over the eight dihedral transforms of the input,
// inverting each transform on its output. Accumulation is a fixed balanced
// tree over the enumeration order, so the result is reproducible bit for
// bit and collapses exactly to a single pass for an equivariant model.
Tensor self_ensemble(const Tensor& img, const ModelFn& model);

struct EvalRow {
  std::string name;
  double psnr_model = 0.0, ssim_model = 0.0;
  double psnr_bicubic = 0.0, ssim_bicubic = 0.0;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_psnr_model = 0.0, mean_ssim_model = 0.0;
  double mean_psnr_bicubic = 0.0, mean_ssim_bicubic = 0.0;
};

// For each HR image: crop to a multiple of scale, bicubic-downsample to LR,
// super-resolve, and score PSNR/SSIM on the Y channel with shave = scale.
// The bicubic-upscale baseline is scored alongside.
EvalSummary evaluate_images(const std::vector<std::pair<std::string, Tensor>>& hr_images, int scale,
                            const ModelFn& model);

// Directory driver: loads every .png under hr_dir (sorted); unreadable
// files warn and are skipped. Writes a CSV when csv_path is non-empty.
EvalSummary run_eval(const ModelWeights& w, const std::string& hr_dir, int scale,
                     bool use_self_ensemble, const std::string& csv_path);

void write_eval_csv(const EvalSummary& s, const std::string& path);

}  // namespace himamba
