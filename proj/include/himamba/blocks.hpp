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
#include <utility>
#include <vector>

#include "himamba/autodiff.hpp"
#include "himamba/config.hpp"

// The Hierarchical Mamba Block: a local branch at full resolution and a
// region branch at 1/n resolution, each a single-direction selective-scan
// branch, fused by repeating region tokens over their n x n blocks, followed
// by a gated feed-forward network. Weight structs are templated on the value
// type so the same layout serves plain tensors (storage, serialization) and
// tape variables (forward/backward).

namespace himamba {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr int kDwKernel = 3;   // depthwise conv kernel in the scan branch
inline constexpr int kGffnKernel = 3; // G-FFN conv kernel

// One SSM branch: in-projection to E = lambda*Cin channels, depthwise conv,
// SiLU, single-direction selective scan with input-dependent delta/B/C,
// layernorm, times a SiLU-gated second path, projected to Cout.
template <typename T>
struct SsmBranchT {
  T w_in, b_in;        // [E,Cin], [E]
  T w_dw, b_dw;        // [E,1,k,k], [E]
  T w_delta, b_delta;  // [E,E], [E]
  T w_b, w_c;          // [N,E]
  T a_log;             // [E,N]
  T d_skip;            // [E]
  T ln_g, ln_b;        // [E]
  T w_gate, b_gate;    // [E,Cin], [E]
  T w_out, b_out;      // [Cout,E], [Cout]
};

// Eq-style gated FFN: both convolutions are bias-free, so a closed gate
// zeroes the output exactly.
template <typename T>
struct GffnT {
  T ln_g, ln_b;  // [C]
  T w1;          // [2*Ch,C,k,k]
  T w2;          // [C,Ch,k,k]
};

template <typename T>
struct HmbT {
  T ln1_g, ln1_b;    // [C]
  T ln1r_g, ln1r_b;  // [C_r]
  SsmBranchT<T> lssm;  // C -> C
  SsmBranchT<T> rssm;  // C_r -> C (out-projected to C for fusion)
  T w_carry, b_carry;  // [C_r,C], [C_r]: carried region state for the next layer
  T s1, s2, s_f;       // [C]
  GffnT<T> gffn;
  DirectionOrder dir = DirectionOrder::H;
};

template <typename T>
struct GroupT {
  T region_w, region_b;  // [C_r,C,n,n], [C_r]
  std::vector<HmbT<T>> hmbs;
  T tail_w, tail_b;  // [C,C,3,3], [C]
};

template <typename T>
struct ModelT {
  HiMambaConfig config;
  T head_w, head_b;    // [C,3,3,3], [C]
  std::vector<GroupT<T>> groups;
  T recon_w, recon_b;  // [3*scale^2,C,3,3], [3*scale^2]
};

using ModelWeights = ModelT<Tensor>;
using ModelVars = ModelT<Var>;

// Fixed parameter enumeration: serialization order, trainer order and the
// analytic parameter count all derive from this single traversal.
template <typename B, typename F>
void visit_branch(B&& b, const std::string& p, F&& f) {
  f(p + ".w_in", b.w_in);
  f(p + ".b_in", b.b_in);
  f(p + ".w_dw", b.w_dw);
  f(p + ".b_dw", b.b_dw);
  f(p + ".w_delta", b.w_delta);
  f(p + ".b_delta", b.b_delta);
  f(p + ".w_b", b.w_b);
  f(p + ".w_c", b.w_c);
  f(p + ".a_log", b.a_log);
  f(p + ".d_skip", b.d_skip);
  f(p + ".ln_g", b.ln_g);
  f(p + ".ln_b", b.ln_b);
  f(p + ".w_gate", b.w_gate);
  f(p + ".b_gate", b.b_gate);
  f(p + ".w_out", b.w_out);
  f(p + ".b_out", b.b_out);
}

template <typename H, typename F>
void visit_hmb(H&& h, const std::string& p, F&& f) {
  f(p + ".ln1_g", h.ln1_g);
  f(p + ".ln1_b", h.ln1_b);
  f(p + ".ln1r_g", h.ln1r_g);
  f(p + ".ln1r_b", h.ln1r_b);
  visit_branch(h.lssm, p + ".lssm", f);
  visit_branch(h.rssm, p + ".rssm", f);
  f(p + ".w_carry", h.w_carry);
  f(p + ".b_carry", h.b_carry);
  f(p + ".s1", h.s1);
  f(p + ".s2", h.s2);
  f(p + ".s_f", h.s_f);
  f(p + ".gffn.ln_g", h.gffn.ln_g);
  f(p + ".gffn.ln_b", h.gffn.ln_b);
  f(p + ".gffn.w1", h.gffn.w1);
  f(p + ".gffn.w2", h.gffn.w2);
}

template <typename M, typename F>
void visit_params(M&& m, F&& f) {
  f("head.w", m.head_w);
  f("head.b", m.head_b);
  for (std::size_t gi = 0; gi < m.groups.size(); ++gi) {
    auto& g = m.groups[gi];
    const std::string gp = "g" + std::to_string(gi);
    f(gp + ".region.w", g.region_w);
    f(gp + ".region.b", g.region_b);
    for (std::size_t hi = 0; hi < g.hmbs.size(); ++hi)
      visit_hmb(g.hmbs[hi], gp + ".h" + std::to_string(hi), f);
    f(gp + ".tail.w", g.tail_w);
    f(gp + ".tail.b", g.tail_b);
  }
  f("recon.w", m.recon_w);
  f("recon.b", m.recon_b);
}

// ---- construction ----
ModelWeights make_weights(const HiMambaConfig& cfg);            // zero tensors, shaped
void init_random(ModelWeights& w, std::uint64_t seed);          // training init
void zero_deep_path(ModelWeights& w);                           // groups zeroed, s1 = s2 = 1
ModelVars wrap_model(Tape& tape, const ModelWeights& w, bool requires_grad);

// ---- forwards (tape-level; pass a non-recording tape for inference) ----

// layernorm over channels at each spatial position of a [C,H,W] value
Var layernorm_chw(Tape& t, const Var& x, const Var& gamma, const Var& beta);

Var ssm_branch(Tape& t, const Var& x, const SsmBranchT<Var>& w, DirectionOrder dir);

// strided n x n projection of local features to the region grid
Var region_project(Tape& t, const Var& x, const Var& w, const Var& b, int n);

// F = clamp01(s_f) . x_l + (1 - clamp01(s_f)) . repeat(x_r)
Var fuse(Tape& t, const Var& x_l, const Var& x_r, const Var& s_f, int n);

// Table-style alternative: bilinear upsampling instead of token repetition.
Var fuse_upsample(Tape& t, const Var& x_l, const Var& x_r, const Var& s_f, int n);

Var gffn(Tape& t, const Var& x, const GffnT<Var>& w);

// (I_l, I_r) -> (F_next_l, F_next_r)
std::pair<Var, Var> hmb_forward(Tape& t, const Var& i_l, const Var& i_r, const HmbT<Var>& w, int n);

}  // namespace himamba
