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

#include "himamba/blocks.hpp"

// Full network assembly: shallow conv head, N2 direction-alternation groups
// (each N1 HMBs + a 3x3 refinement conv + a group residual), and a conv +
// pixel-shuffle reconstruction head fed by the sum of shallow and deep
// features. Inputs are reflect-padded to a multiple of the region size and
// the output is cropped back.

namespace himamba {

// One group: region-project the group input, thread (local, region) state
// through the HMBs, refine, add the group residual.
Var dahmg_forward(Tape& t, const Var& f_in, const GroupT<Var>& g, const HiMambaConfig& cfg);

// img is [3,H,W] in [0,1]; result is [3, scale*H, scale*W].
Var himamba_forward_var(Tape& t, const Var& img, const ModelVars& m);

// Inference entry point (non-recording tape inside).
Tensor himamba_forward(const Tensor& img, const ModelWeights& w);

// Analytic parameter count; equals the element count over visit_params
// exactly.
std::int64_t count_params(const HiMambaConfig& cfg);

// Forward multiply-add count x2 for conv/linear/scan at the given input
// size (normalization, activations and elementwise work are not counted).
// Scan cost per (step, channel, state) element: 2 MACs forming the
// discretized pair, 2 for the state update, 1 for the output reduction,
// plus one skip MAC per (step, channel).
std::int64_t count_flops(const HiMambaConfig& cfg, int h, int w);

// Binary weight format, little-endian: magic "HIMB", version u32 = 1,
// config block (scale,C,C_r,n,N1,N2 as u32, lambda f32, N_state,C_h u32,
// dir_cycle length u32 + one u8 tag each), tensor count u32, then per
// tensor: name length u16 + UTF-8 name, rank u8, dims u32 each, raw f32
// data in visit_params order.
void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path);

}  // namespace himamba
