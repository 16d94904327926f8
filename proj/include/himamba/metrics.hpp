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

#include "himamba/tensor.hpp"

namespace himamba {

// PSNR in dB on [0,1] data, capped at 100 dB when the MSE is zero. Accepts
// [H,W] or [C,H,W]; shave pixels are cropped from each spatial border.
double psnr(const Tensor& a, const Tensor& b, int shave);

// SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03 on [0,1]
// data; windows fully inside the shaved plane, channel results averaged.
double ssim(const Tensor& a, const Tensor& b, int shave);

}  // namespace himamba
