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

// The selective state-space kernel: zero-order-hold discretization, the
// single-direction scan recurrence, the equivalent LTI convolution-kernel
// route, and the 2D <-> 1D direction bijections.

namespace himamba {

// Per-timestep scan parameters. A is diagonal per channel, parameterized as
// A = -exp(a_log) so it stays strictly negative. b_seq/c_seq are shared
// across channels; delta varies per step and per channel.
struct SelectiveParams {
  Tensor a_log;   // [D,N]
  Tensor delta;   // [L,D], strictly positive
  Tensor b_seq;   // [L,N]
  Tensor c_seq;   // [L,N]
  Tensor d_skip;  // [D]
};

enum class DirectionOrder : std::uint8_t { H = 0, V = 1, RH = 2, RV = 3 };

const char* direction_name(DirectionOrder d);
DirectionOrder direction_from_name(const std::string& s);

// Scalar ZOH step: a_bar = exp(delta*a), b_bar = ((exp(delta*a)-1)/a)*b,
// with a series fallback for |delta*a| < 1e-6. delta must be positive.
struct Discretized {
  double a_bar;
  double b_bar;
};
Discretized discretize_zoh(double delta, double a, double b);

// h_k = a_bar_k (.) h_{k-1} + b_bar_k u_k[d];  y_k[d] = <c_k, h_k> + d_skip[d] u_k[d].
// u is [L,D]; returns [L,D]. O(L*D*N), channels run in parallel.
Tensor selective_scan(const Tensor& u, const SelectiveParams& p);

// Chunked evaluation: processes the sequence in blocks of chunk_len,
// carrying the state across block boundaries. Same per-step arithmetic,
// bit-identical to the sequential path.
Tensor selective_scan_chunked(const Tensor& u, const SelectiveParams& p, int chunk_len);

// Variant that captures per-step state for the backward pass; each saved
// tensor is [L,D,N]. Produces bit-identical y.
struct ScanSaved {
  Tensor h;
  Tensor abar;
  Tensor bbar;
};
Tensor selective_scan_saved(const Tensor& u, const SelectiveParams& p, ScanSaved& saved);

struct ScanGrads {
  Tensor du, da_log, ddelta, db_seq, dc_seq, dd_skip;
};
// Accumulates into pre-shaped grad tensors.
void selective_scan_bwd(const Tensor& dy, const Tensor& u, const SelectiveParams& p,
                        const ScanSaved& saved, ScanGrads& grads);

// Time-invariant kernel form: K = (<c,b_bar>, <c,a_bar.b_bar>, ...,
// <c,a_bar^{L-1}.b_bar>). a_bar/b_bar/c are [N].
Tensor lti_kernel(const Tensor& a_bar, const Tensor& b_bar, const Tensor& c, int len);

// Causal convolution y_k = sum_{j<=k} K_j u_{k-j} + d_skip u_k. u,K are [L].
Tensor lti_apply(const Tensor& u, const Tensor& kernel, double d_skip);

// Input-dependent parameters: delta = softplus(x w_delta^T + b_delta),
// b_seq = x w_b^T, c_seq = x w_c^T. x_seq is [L,D]; w_delta [D,D],
// b_delta [D], w_b/w_c [N,D].
SelectiveParams selective_params_from_input(const Tensor& x_seq, const Tensor& w_delta,
                                            const Tensor& b_delta, const Tensor& w_b,
                                            const Tensor& w_c, const Tensor& a_log,
                                            const Tensor& d_skip);

// 2D -> 1D unfolding. H walks rows left-to-right, V walks columns
// top-to-bottom, RH/RV are the reversals. Returns [H*W, C].
Tensor flatten_direction(const Tensor& x_chw, DirectionOrder dir);
Tensor unflatten_direction(const Tensor& seq, DirectionOrder dir, int c, int h, int w);

// Sequence index of grid position (y,x) under a direction order.
std::int64_t direction_index(DirectionOrder dir, int h, int w, int y, int x);

}  // namespace himamba
