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

#include "himamba/tensor.hpp"

namespace himamba {

enum class ColorSpace { RGB, YCbCr };

// 3-channel image plane, values in [0,1], channel-major storage.
struct Image {
  Tensor chw;  // [3,H,W]
  ColorSpace space = ColorSpace::RGB;

  int height() const { return chw.dim(1); }
  int width() const { return chw.dim(2); }
};

// 8-bit PNG load (gray/palette/RGBA are expanded to RGB); values scaled to
// [0,1]. 16-bit files are reduced to 8 bits.
Image load_png(const std::string& path);

// Clamp to [0,1] and quantize with round-half-away-from-zero.
void save_png(const Image& img, const std::string& path);

// BT.601 studio swing: Y = (16 + 65.481 R + 128.553 G + 24.966 B) / 255 with
// R,G,B in [0,1]. Returns [1,H,W].
Tensor rgb_to_y(const Tensor& rgb);

// Separable Catmull-Rom resampling (a = -0.5), antialiased on downscale
// (kernel stretched by the inverse scale), edges clamped, weights
// normalized to sum 1 per phase.
Tensor bicubic_resize(const Tensor& chw, int out_w, int out_h);

// The cubic kernel itself, exposed for verification.
double bicubic_weight(double x);

// The eight dihedral transforms of a [C,H,W] tensor, indexed
// k = rot + 4*flip with rot counter-clockwise quarter turns applied after
// an optional horizontal flip. dihedral_inverse(dihedral_apply(x,k),k) == x.
Tensor dihedral_apply(const Tensor& chw, int k);
Tensor dihedral_inverse(const Tensor& chw, int k);

}  // namespace himamba
