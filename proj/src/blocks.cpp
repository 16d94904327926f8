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

#include "himamba/blocks.hpp"

#include <cmath>

#include "himamba/ops.hpp"

namespace himamba {

namespace {

void shape_branch(SsmBranchT<Tensor>& b, int cin, int e, int cout, int nstate) {
  b.w_in = Tensor({e, cin});
  b.b_in = Tensor({e});
  b.w_dw = Tensor({e, 1, kDwKernel, kDwKernel});
  b.b_dw = Tensor({e});
  b.w_delta = Tensor({e, e});
  b.b_delta = Tensor({e});
  b.w_b = Tensor({nstate, e});
  b.w_c = Tensor({nstate, e});
  b.a_log = Tensor({e, nstate});
  b.d_skip = Tensor({e});
  b.ln_g = Tensor({e});
  b.ln_b = Tensor({e});
  b.w_gate = Tensor({e, cin});
  b.b_gate = Tensor({e});
  b.w_out = Tensor({cout, e});
  b.b_out = Tensor({cout});
}

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
void fill_fan(Tensor& t, int fan_in, Rng& rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.data) v = rng.uniform(-k, k);
}

void init_branch(SsmBranchT<Tensor>& b, int cin, int e, int nstate, Rng& rng) {
  fill_fan(b.w_in, cin, rng);
  fill_fan(b.b_in, cin, rng);
  fill_fan(b.w_dw, kDwKernel * kDwKernel, rng);
  fill_fan(b.b_dw, kDwKernel * kDwKernel, rng);
  fill_fan(b.w_delta, e, rng);
  // b_delta: inverse softplus of a log-uniform step in [1e-3, 1e-1]
  for (int i = 0; i < e; ++i) {
    const double dt = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
    b.b_delta[i] = std::log(std::expm1(dt));
  }
  fill_fan(b.w_b, e, rng);
  fill_fan(b.w_c, e, rng);
  for (int d = 0; d < e; ++d)
    for (int n = 0; n < nstate; ++n) b.a_log[static_cast<std::int64_t>(d) * nstate + n] = std::log(n + 1.0);
  b.d_skip.fill(1.0);
  b.ln_g.fill(1.0);
  b.ln_b.fill(0.0);
  fill_fan(b.w_gate, cin, rng);
  fill_fan(b.b_gate, cin, rng);
  fill_fan(b.w_out, e, rng);
  fill_fan(b.b_out, e, rng);
}

}  // namespace

ModelWeights make_weights(const HiMambaConfig& cfg) {
  cfg.validate();
  const int c = cfg.channels, cr = cfg.region_channels, n = cfg.region_size;
  const int e = cfg.expanded(c), er = cfg.expanded(cr);
  const int ch = cfg.ffn_hidden, ns = cfg.state_size;
  ModelWeights m;
  m.config = cfg;
  m.head_w = Tensor({c, 3, 3, 3});
  m.head_b = Tensor({c});
  m.groups.resize(static_cast<std::size_t>(cfg.num_groups));
  for (auto& g : m.groups) {
    g.region_w = Tensor({cr, c, n, n});
    g.region_b = Tensor({cr});
    g.hmbs.resize(static_cast<std::size_t>(cfg.blocks_per_group));
    for (std::size_t i = 0; i < g.hmbs.size(); ++i) {
      auto& h = g.hmbs[i];
      h.ln1_g = Tensor({c});
      h.ln1_b = Tensor({c});
      h.ln1r_g = Tensor({cr});
      h.ln1r_b = Tensor({cr});
      shape_branch(h.lssm, c, e, c, ns);
      shape_branch(h.rssm, cr, er, c, ns);
      h.w_carry = Tensor({cr, c});
      h.b_carry = Tensor({cr});
      h.s1 = Tensor({c});
      h.s2 = Tensor({c});
      h.s_f = Tensor({c});
      h.gffn.ln_g = Tensor({c});
      h.gffn.ln_b = Tensor({c});
      h.gffn.w1 = Tensor({2 * ch, c, kGffnKernel, kGffnKernel});
      h.gffn.w2 = Tensor({c, ch, kGffnKernel, kGffnKernel});
      h.dir = cfg.dir_for(static_cast<int>(i));
    }
    g.tail_w = Tensor({c, c, 3, 3});
    g.tail_b = Tensor({c});
  }
  m.recon_w = Tensor({3 * cfg.scale * cfg.scale, c, 3, 3});
  m.recon_b = Tensor({3 * cfg.scale * cfg.scale});
  return m;
}

void init_random(ModelWeights& m, std::uint64_t seed) {
  Rng rng(seed);
  const auto& cfg = m.config;
  const int c = cfg.channels, cr = cfg.region_channels;
  const int e = cfg.expanded(c), er = cfg.expanded(cr);
  fill_fan(m.head_w, 3 * 9, rng);
  fill_fan(m.head_b, 3 * 9, rng);
  for (auto& g : m.groups) {
    fill_fan(g.region_w, c * cfg.region_size * cfg.region_size, rng);
    fill_fan(g.region_b, c * cfg.region_size * cfg.region_size, rng);
    for (auto& h : g.hmbs) {
      h.ln1_g.fill(1.0);
      h.ln1_b.fill(0.0);
      h.ln1r_g.fill(1.0);
      h.ln1r_b.fill(0.0);
      init_branch(h.lssm, c, e, cfg.state_size, rng);
      init_branch(h.rssm, cr, er, cfg.state_size, rng);
      fill_fan(h.w_carry, c, rng);
      fill_fan(h.b_carry, c, rng);
      h.s1.fill(1.0);
      h.s2.fill(1.0);
      h.s_f.fill(0.5);
      h.gffn.ln_g.fill(1.0);
      h.gffn.ln_b.fill(0.0);
      fill_fan(h.gffn.w1, c * kGffnKernel * kGffnKernel, rng);
      fill_fan(h.gffn.w2, cfg.ffn_hidden * kGffnKernel * kGffnKernel, rng);
    }
    fill_fan(g.tail_w, c * 9, rng);
    fill_fan(g.tail_b, c * 9, rng);
  }
  fill_fan(m.recon_w, c * 9, rng);
  fill_fan(m.recon_b, c * 9, rng);
}

void zero_deep_path(ModelWeights& m) {
  for (auto& g : m.groups) {
    g.region_w.fill(0.0);
    g.region_b.fill(0.0);
    for (auto& h : g.hmbs) {
      visit_hmb(h, "", [](const std::string&, Tensor& t) { t.fill(0.0); });
      h.s1.fill(1.0);
      h.s2.fill(1.0);
    }
    g.tail_w.fill(0.0);
    g.tail_b.fill(0.0);
  }
}

ModelVars wrap_model(Tape& tape, const ModelWeights& w, bool requires_grad) {
  ModelVars v;
  v.config = w.config;
  v.groups.resize(w.groups.size());
  for (std::size_t gi = 0; gi < w.groups.size(); ++gi) {
    v.groups[gi].hmbs.resize(w.groups[gi].hmbs.size());
    for (std::size_t hi = 0; hi < w.groups[gi].hmbs.size(); ++hi)
      v.groups[gi].hmbs[hi].dir = w.groups[gi].hmbs[hi].dir;
  }
  std::vector<const Tensor*> src;
  visit_params(w, [&](const std::string&, const Tensor& t) { src.push_back(&t); });
  std::vector<Var*> dst;
  visit_params(v, [&](const std::string&, Var& p) { dst.push_back(&p); });
  if (src.size() != dst.size()) throw InternalError("wrap_model: traversal mismatch");
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = tape.leaf(*src[i], requires_grad);
  return v;
}

Var layernorm_chw(Tape& t, const Var& x, const Var& gamma, const Var& beta) {
  const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  Var seq = t.flatten_direction(x, DirectionOrder::H);
  Var nrm = t.layernorm(seq, gamma, beta, kLayerNormEps);
  return t.unflatten_direction(nrm, DirectionOrder::H, c, h, w);
}

Var ssm_branch(Tape& t, const Var& x, const SsmBranchT<Var>& w, DirectionOrder dir) {
  const int h = x->value.dim(1), wd = x->value.dim(2);
  const int e = w.w_in->value.dim(0);
  const int cout = w.w_out->value.dim(0);

  Var seq0 = t.flatten_direction(x, DirectionOrder::H);

  // branch 1: Linear -> DWConv -> SiLU -> SSM -> LN
  Var x1 = t.unflatten_direction(t.linear(seq0, w.w_in, w.b_in), DirectionOrder::H, e, h, wd);
  x1 = t.conv2d(x1, w.w_dw, w.b_dw, 1, kDwKernel / 2, e);
  x1 = t.silu(x1);
  Var seq = t.flatten_direction(x1, dir);
  Var delta = t.softplus(t.linear(seq, w.w_delta, w.b_delta));
  Var b_seq = t.linear(seq, w.w_b, nullptr);
  Var c_seq = t.linear(seq, w.w_c, nullptr);
  Var scanned = t.selective_scan(seq, w.a_log, delta, b_seq, c_seq, w.d_skip);
  scanned = t.layernorm(scanned, w.ln_g, w.ln_b, kLayerNormEps);
  Var b1 = t.unflatten_direction(scanned, dir, e, h, wd);

  // branch 2: SiLU gate
  Var b2 = t.unflatten_direction(t.silu(t.linear(seq0, w.w_gate, w.b_gate)), DirectionOrder::H, e, h, wd);

  Var merged = t.flatten_direction(t.mul(b1, b2), DirectionOrder::H);
  return t.unflatten_direction(t.linear(merged, w.w_out, w.b_out), DirectionOrder::H, cout, h, wd);
}

Var region_project(Tape& t, const Var& x, const Var& w, const Var& b, int n) {
  return t.conv2d(x, w, b, n, 0, 1);
}

Var fuse(Tape& t, const Var& x_l, const Var& x_r, const Var& s_f, int n) {
  Var cs = t.clamp01(s_f);
  Var rep = t.repeat_region(x_r, n);
  // s_f.x_l + (1-s_f).rep
  return t.add(t.scale_channels(x_l, cs), t.sub(rep, t.scale_channels(rep, cs)));
}

Var fuse_upsample(Tape& t, const Var& x_l, const Var& x_r, const Var& s_f, int n) {
  Var cs = t.clamp01(s_f);
  Var up = t.upsample_bilinear(x_r, n);
  return t.add(t.scale_channels(x_l, cs), t.sub(up, t.scale_channels(up, cs)));
}

Var gffn(Tape& t, const Var& x, const GffnT<Var>& w) {
  const int ch2 = w.w1->value.dim(0);
  Var xn = layernorm_chw(t, x, w.ln_g, w.ln_b);
  Var hidden = t.conv2d(xn, w.w1, Var{}, 1, kGffnKernel / 2, 1);
  Var h1 = t.channel_slice(hidden, 0, ch2 / 2);
  Var h2 = t.channel_slice(hidden, ch2 / 2, ch2);
  return t.conv2d(t.mul(h1, h2), w.w2, Var{}, 1, kGffnKernel / 2, 1);
}

std::pair<Var, Var> hmb_forward(Tape& t, const Var& i_l, const Var& i_r, const HmbT<Var>& w, int n) {
  Var f_l = ssm_branch(t, layernorm_chw(t, i_l, w.ln1_g, w.ln1_b), w.lssm, w.dir);
  Var f_r = ssm_branch(t, layernorm_chw(t, i_r, w.ln1r_g, w.ln1r_b), w.rssm, w.dir);
  Var fused = fuse(t, f_l, f_r, w.s_f, n);
  Var f = t.add(fused, t.scale_channels(i_l, w.s1));
  Var next_l = t.add(gffn(t, f, w.gffn), t.scale_channels(f, w.s2));
  // carried region state, back at C_r channels
  const int cr = w.w_carry->value.dim(0);
  const int hr = i_r->value.dim(1), wr = i_r->value.dim(2);
  Var carry_seq = t.linear(t.flatten_direction(f_r, DirectionOrder::H), w.w_carry, w.b_carry);
  Var next_r = t.unflatten_direction(carry_seq, DirectionOrder::H, cr, hr, wr);
  return {next_l, next_r};
}

}  // namespace himamba
