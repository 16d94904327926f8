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

// Deterministic dense-tensor primitives. All ops are pure: inputs are never
// modified and identical inputs produce bit-identical outputs regardless of
// the thread cap.

namespace himamba::ops {

// y[...,o] = sum_i w[o,i] x[...,i] + b[o]; w is [Cout,Cin], b is [Cout] or null.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b);

// Cross-correlation (no kernel flip), zero padding. x [Cin,H,W],
// w [Cout,Cin/g,kh,kw], b [Cout] or null.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad, int groups);

// Normalize over the trailing channel dim; gamma/beta are [C].
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

Tensor silu(const Tensor& x);
Tensor softplus(const Tensor& x);

// out[c, r*h+dy, r*w+dx] = x[c*r*r + dy*r + dx, h, w]
Tensor pixel_shuffle(const Tensor& x, int r);
Tensor pixel_unshuffle(const Tensor& x, int r);

// elementwise / broadcast helpers
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// x [C,H,W] scaled per channel by s [C]
Tensor scale_channels(const Tensor& x, const Tensor& s);
Tensor clamp01(const Tensor& x);

// region <-> local resolution plumbing; n is the region size
Tensor repeat_region(const Tensor& x, int n);  // [C,h,w] -> [C,n*h,n*w]
Tensor block_sum(const Tensor& x, int n);      // adjoint of repeat_region
// bilinear upsample by integer factor n with half-pixel centers
Tensor upsample_bilinear(const Tensor& x, int n);

// reflect-pad bottom/right only (pad < dim required); crop back from the
// top-left corner
Tensor reflect_pad_br(const Tensor& x, int pad_bottom, int pad_right);
Tensor crop_tl(const Tensor& x, int h, int w);

Tensor transpose_hw(const Tensor& x);  // [C,H,W] -> [C,W,H]

double sum(const Tensor& x);

// ---- backward companions (all accumulate into the grad argument) ----
void linear_dgrad(const Tensor& dy, const Tensor& w, Tensor& dx);
void linear_wgrad(const Tensor& dy, const Tensor& x, Tensor& dw, Tensor* db);
void conv2d_dgrad(const Tensor& dy, const Tensor& w, Tensor& dx, int stride, int pad, int groups);
void conv2d_wgrad(const Tensor& dy, const Tensor& x, Tensor& dw, Tensor* db, int stride, int pad, int groups);
void layernorm_xgrad(const Tensor& dy, const Tensor& x, const Tensor& gamma, Tensor& dx, double eps);
void layernorm_agrad(const Tensor& dy, const Tensor& x, Tensor& dgamma, Tensor& dbeta, double eps);
void silu_bwd(const Tensor& dy, const Tensor& x, Tensor& dx);
void softplus_bwd(const Tensor& dy, const Tensor& x, Tensor& dx);

}  // namespace himamba::ops
