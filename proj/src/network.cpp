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

#include "himamba/network.hpp"

namespace himamba {

Var dahmg_forward(Tape& t, const Var& f_in, const GroupT<Var>& g, const HiMambaConfig& cfg) {
  Var i_r = region_project(t, f_in, g.region_w, g.region_b, cfg.region_size);
  Var x = f_in;
  for (const auto& h : g.hmbs) {
    auto [next_l, next_r] = hmb_forward(t, x, i_r, h, cfg.region_size);
    x = next_l;
    i_r = next_r;
  }
  Var refined = t.conv2d(x, g.tail_w, g.tail_b, 1, 1, 1);
  return t.add(refined, f_in);
}

Var himamba_forward_var(Tape& t, const Var& img, const ModelVars& m) {
  const auto& cfg = m.config;
  if (img->value.rank() != 3 || img->value.dim(0) != 3)
    throw ShapeError("himamba_forward: expected [3,H,W], got " + shape_str(img->value.shape));
  const int h = img->value.dim(1), w = img->value.dim(2);
  if (h < 8 || w < 8)
    throw InputError("himamba_forward: image must be at least 8x8, got " + std::to_string(w) + "x" +
                     std::to_string(h));
  const int n = cfg.region_size;
  const int pb = (n - h % n) % n, pr = (n - w % n) % n;
  Var x = t.reflect_pad_br(img, pb, pr);
  Var f_l = t.conv2d(x, m.head_w, m.head_b, 1, 1, 1);
  Var f_d = f_l;
  for (const auto& g : m.groups) f_d = dahmg_forward(t, f_d, g, cfg);
  Var rec = t.conv2d(t.add(f_l, f_d), m.recon_w, m.recon_b, 1, 1, 1);
  Var out = t.pixel_shuffle(rec, cfg.scale);
  return t.crop_tl(out, cfg.scale * h, cfg.scale * w);
}

Tensor himamba_forward(const Tensor& img, const ModelWeights& w) {
  Tape t(false);
  ModelVars mv = wrap_model(t, w, false);
  return himamba_forward_var(t, t.leaf(img, false), mv)->value;
}

namespace {

std::int64_t branch_params(int cin, int e, int cout, int ns) {
  std::int64_t p = 0;
  p += static_cast<std::int64_t>(e) * cin + e;                      // in proj
  p += static_cast<std::int64_t>(e) * kDwKernel * kDwKernel + e;    // depthwise conv
  p += static_cast<std::int64_t>(e) * e + e;                        // delta proj
  p += 2LL * ns * e;                                                // b/c projections
  p += static_cast<std::int64_t>(e) * ns;                           // a_log
  p += e;                                                           // d_skip
  p += 2LL * e;                                                     // post-scan LN
  p += static_cast<std::int64_t>(e) * cin + e;                      // gate proj
  p += static_cast<std::int64_t>(cout) * e + cout;                  // out proj
  return p;
}

std::int64_t hmb_params(const HiMambaConfig& cfg) {
  const int c = cfg.channels, cr = cfg.region_channels;
  const int e = cfg.expanded(c), er = cfg.expanded(cr);
  const int ch = cfg.ffn_hidden;
  std::int64_t p = 0;
  p += 2LL * c + 2LL * cr;  // ln1, ln1r
  p += branch_params(c, e, c, cfg.state_size);
  p += branch_params(cr, er, c, cfg.state_size);
  p += static_cast<std::int64_t>(cr) * c + cr;  // carry proj
  p += 3LL * c;                                 // s1, s2, s_f
  p += 2LL * c;                                 // gffn LN
  p += 2LL * ch * c * kGffnKernel * kGffnKernel;                         // gffn w1
  p += static_cast<std::int64_t>(c) * ch * kGffnKernel * kGffnKernel;    // gffn w2
  return p;
}

std::int64_t conv_macs(std::int64_t cin, std::int64_t cout, std::int64_t k, std::int64_t ho,
                       std::int64_t wo, std::int64_t groups = 1) {
  return ho * wo * cout * (cin / groups) * k * k;
}

std::int64_t scan_macs(std::int64_t len, std::int64_t d, std::int64_t ns) {
  return len * d * ns * 5 + len * d;
}

std::int64_t branch_macs(std::int64_t cin, std::int64_t e, std::int64_t cout, std::int64_t len,
                         std::int64_t ns) {
  std::int64_t m = 0;
  m += len * e * cin;                        // in proj
  m += len * e * kDwKernel * kDwKernel;      // depthwise conv
  m += len * e * e + 2 * len * ns * e;       // delta/b/c projections
  m += scan_macs(len, e, ns);
  m += len * e * cin;                        // gate proj
  m += len * cout * e;                       // out proj
  return m;
}

}  // namespace

std::int64_t count_params(const HiMambaConfig& cfg) {
  cfg.validate();
  const int c = cfg.channels, cr = cfg.region_channels, n = cfg.region_size;
  std::int64_t p = 0;
  p += static_cast<std::int64_t>(c) * 3 * 9 + c;  // head
  std::int64_t group = 0;
  group += static_cast<std::int64_t>(cr) * c * n * n + cr;          // region projection
  group += static_cast<std::int64_t>(cfg.blocks_per_group) * hmb_params(cfg);
  group += static_cast<std::int64_t>(c) * c * 9 + c;                // tail refinement conv
  p += static_cast<std::int64_t>(cfg.num_groups) * group;
  p += 3LL * cfg.scale * cfg.scale * c * 9 + 3LL * cfg.scale * cfg.scale;  // reconstruction
  return p;
}

std::int64_t count_flops(const HiMambaConfig& cfg, int h, int w) {
  cfg.validate();
  if (h < 1 || w < 1) throw ParamError("count_flops: input size must be positive");
  const int n = cfg.region_size;
  const std::int64_t hp = h + (n - h % n) % n, wp = w + (n - w % n) % n;
  const std::int64_t len = hp * wp, lr = (hp / n) * (wp / n);
  const int c = cfg.channels, cr = cfg.region_channels, ch = cfg.ffn_hidden;
  const int e = cfg.expanded(c), er = cfg.expanded(cr);
  std::int64_t macs = conv_macs(3, c, 3, hp, wp);  // head
  std::int64_t hmb = 0;
  hmb += branch_macs(c, e, c, len, cfg.state_size);
  hmb += branch_macs(cr, er, c, lr, cfg.state_size);
  hmb += lr * c * cr;  // carry proj
  hmb += conv_macs(c, 2LL * ch, kGffnKernel, hp, wp) + conv_macs(ch, c, kGffnKernel, hp, wp);
  std::int64_t group = conv_macs(c, cr, n, hp / n, wp / n)  // region projection (k = n, stride n)
                       + cfg.blocks_per_group * hmb + conv_macs(c, c, 3, hp, wp);
  macs += cfg.num_groups * group;
  macs += conv_macs(c, 3LL * cfg.scale * cfg.scale, 3, hp, wp);  // reconstruction
  return 2 * macs;
}

}  // namespace himamba
