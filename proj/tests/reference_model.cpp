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

#include "reference_model.hpp"

#include <cmath>
#include <vector>

namespace himamba::reference {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double softplus(double x) { return std::log1p(std::exp(-std::fabs(x))) + std::fmax(x, 0.0); }

// 2D grid position of sequence slot k under a direction order
void grid_of(DirectionOrder dir, int h, int w, std::int64_t k, int& y, int& x) {
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  std::int64_t t = k;
  if (dir == DirectionOrder::RH || dir == DirectionOrder::RV) t = hw - 1 - k;
  if (dir == DirectionOrder::H || dir == DirectionOrder::RH) {
    y = static_cast<int>(t / w);
    x = static_cast<int>(t % w);
  } else {
    x = static_cast<int>(t / h);
    y = static_cast<int>(t % h);
  }
}

// channels-last matrix product out[k][o] = sum_i w[o][i] in[k][i] + b[o]
std::vector<std::vector<double>> matmul(const std::vector<std::vector<double>>& in, const Tensor& w,
                                        const Tensor* b) {
  const int cout = w.dim(0), cin = w.dim(1);
  std::vector<std::vector<double>> out(in.size(), std::vector<double>(static_cast<std::size_t>(cout)));
  for (std::size_t k = 0; k < in.size(); ++k)
    for (int o = 0; o < cout; ++o) {
      double acc = b ? (*b)[o] : 0.0;
      for (int i = 0; i < cin; ++i) acc += w[static_cast<std::int64_t>(o) * cin + i] * in[k][static_cast<std::size_t>(i)];
      out[k][static_cast<std::size_t>(o)] = acc;
    }
  return out;
}

void layernorm_rows(std::vector<std::vector<double>>& rows, const Tensor& g, const Tensor& b) {
  const double eps = kLayerNormEps;
  for (auto& r : rows) {
    const int c = static_cast<int>(r.size());
    double mu = 0.0;
    for (double v : r) mu += v;
    mu /= c;
    double var = 0.0;
    for (double v : r) var += (v - mu) * (v - mu);
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < c; ++j) r[static_cast<std::size_t>(j)] = (r[static_cast<std::size_t>(j)] - mu) * inv * g[j] + b[j];
  }
}

Tensor conv2d_naive(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad, int groups) {
  const int cin = x.dim(0), hin = x.dim(1), win = x.dim(2);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int ho = (hin + 2 * pad - kh) / stride + 1, wo = (win + 2 * pad - kw) / stride + 1;
  const int cig = cin / groups, cog = cout / groups;
  Tensor y({cout, ho, wo});
  for (int co = 0; co < cout; ++co)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        double acc = b.numel() ? b[co] : 0.0;
        for (int cl = 0; cl < cig; ++cl)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= hin || ix < 0 || ix >= win) continue;
              const int ci = (co / cog) * cig + cl;
              acc += x[(static_cast<std::int64_t>(ci) * hin + iy) * win + ix] *
                     w[((static_cast<std::int64_t>(co) * cig + cl) * kh + ky) * kw + kx];
            }
        y[(static_cast<std::int64_t>(co) * ho + oy) * wo + ox] = acc;
      }
  return y;
}

std::vector<std::vector<double>> to_rows(const Tensor& x, DirectionOrder dir) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(hw), std::vector<double>(static_cast<std::size_t>(c)));
  for (std::int64_t k = 0; k < hw; ++k) {
    int y, xx;
    grid_of(dir, h, w, k, y, xx);
    for (int cc = 0; cc < c; ++cc)
      rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(cc)] =
          x[(static_cast<std::int64_t>(cc) * h + y) * w + xx];
  }
  return rows;
}

Tensor from_rows(const std::vector<std::vector<double>>& rows, DirectionOrder dir, int c, int h, int w) {
  Tensor x({c, h, w});
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  for (std::int64_t k = 0; k < hw; ++k) {
    int y, xx;
    grid_of(dir, h, w, k, y, xx);
    for (int cc = 0; cc < c; ++cc)
      x[(static_cast<std::int64_t>(cc) * h + y) * w + xx] = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(cc)];
  }
  return x;
}

Tensor ln_channels(const Tensor& x, const Tensor& g, const Tensor& b) {
  auto rows = to_rows(x, DirectionOrder::H);
  layernorm_rows(rows, g, b);
  return from_rows(rows, DirectionOrder::H, x.dim(0), x.dim(1), x.dim(2));
}

}  // namespace

Tensor ssm_branch(const Tensor& x, const SsmBranchT<Tensor>& w, DirectionOrder dir) {
  const int h = x.dim(1), wd = x.dim(2);
  const int e = w.w_in.dim(0), cout = w.w_out.dim(0), ns = w.w_b.dim(0);
  const std::int64_t hw = static_cast<std::int64_t>(h) * wd;

  // branch 1: Linear, depthwise conv, SiLU
  auto rows = to_rows(x, DirectionOrder::H);
  auto expanded = matmul(rows, w.w_in, &w.b_in);
  Tensor grid = from_rows(expanded, DirectionOrder::H, e, h, wd);
  grid = conv2d_naive(grid, w.w_dw, w.b_dw, 1, kDwKernel / 2, e);
  for (auto& v : grid.data) v = silu(v);

  // SSM along the chosen direction with input-dependent delta/B/C
  auto seq = to_rows(grid, dir);
  auto delta = matmul(seq, w.w_delta, &w.b_delta);
  for (auto& r : delta)
    for (auto& v : r) v = softplus(v);
  auto bs = matmul(seq, w.w_b, nullptr);
  auto cs = matmul(seq, w.w_c, nullptr);

  std::vector<std::vector<double>> scanned(seq.size(), std::vector<double>(static_cast<std::size_t>(e)));
  for (int ch = 0; ch < e; ++ch) {
    std::vector<double> hstate(static_cast<std::size_t>(ns), 0.0);
    for (std::size_t k = 0; k < seq.size(); ++k) {
      const double dt = delta[k][static_cast<std::size_t>(ch)];
      const double uk = seq[k][static_cast<std::size_t>(ch)];
      double acc = 0.0;
      for (int s = 0; s < ns; ++s) {
        const double a = -std::exp(w.a_log[static_cast<std::int64_t>(ch) * ns + s]);
        const double abar = std::exp(dt * a);
        const double bbar = (std::expm1(dt * a) / a) * bs[k][static_cast<std::size_t>(s)];
        hstate[static_cast<std::size_t>(s)] = abar * hstate[static_cast<std::size_t>(s)] + bbar * uk;
        acc += cs[k][static_cast<std::size_t>(s)] * hstate[static_cast<std::size_t>(s)];
      }
      scanned[k][static_cast<std::size_t>(ch)] = acc + w.d_skip[ch] * uk;
    }
  }
  layernorm_rows(scanned, w.ln_g, w.ln_b);
  Tensor b1 = from_rows(scanned, dir, e, h, wd);

  // branch 2: gate
  auto gate = matmul(rows, w.w_gate, &w.b_gate);
  for (auto& r : gate)
    for (auto& v : r) v = silu(v);
  Tensor b2 = from_rows(gate, DirectionOrder::H, e, h, wd);

  Tensor prod({e, h, wd});
  for (std::int64_t i = 0; i < e * hw; ++i) prod[i] = b1[i] * b2[i];
  auto out = matmul(to_rows(prod, DirectionOrder::H), w.w_out, &w.b_out);
  return from_rows(out, DirectionOrder::H, cout, h, wd);
}

std::pair<Tensor, Tensor> hmb_forward(const Tensor& i_l, const Tensor& i_r, const HmbT<Tensor>& w, int n) {
  const int c = i_l.dim(0), h = i_l.dim(1), wd = i_l.dim(2);
  const int hr = i_r.dim(1), wr = i_r.dim(2);
  const std::int64_t hw = static_cast<std::int64_t>(h) * wd;

  Tensor f_l = ssm_branch(ln_channels(i_l, w.ln1_g, w.ln1_b), w.lssm, w.dir);
  Tensor f_r = ssm_branch(ln_channels(i_r, w.ln1r_g, w.ln1r_b), w.rssm, w.dir);

  // fusion: sf x_l + (1-sf) repeat(x_r), sf clamped to [0,1]
  Tensor f({c, h, wd});
  for (int cc = 0; cc < c; ++cc) {
    double sf = w.s_f[cc];
    sf = sf < 0.0 ? 0.0 : (sf > 1.0 ? 1.0 : sf);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wd; ++x) {
        const double rep = f_r[(static_cast<std::int64_t>(cc) * hr + y / n) * wr + x / n];
        const double fl = f_l[(static_cast<std::int64_t>(cc) * h + y) * wd + x];
        f[(static_cast<std::int64_t>(cc) * h + y) * wd + x] =
            sf * fl + (rep - sf * rep) + w.s1[cc] * i_l[(static_cast<std::int64_t>(cc) * h + y) * wd + x];
      }
  }

  // G-FFN: conv(LN), split, gate, conv
  Tensor xn = ln_channels(f, w.gffn.ln_g, w.gffn.ln_b);
  Tensor hidden = conv2d_naive(xn, w.gffn.w1, Tensor(), 1, kGffnKernel / 2, 1);
  const int ch = hidden.dim(0) / 2;
  Tensor prod({ch, h, wd});
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(ch) * hw; ++i)
    prod[i] = hidden[i] * hidden[static_cast<std::int64_t>(ch) * hw + i];
  Tensor ffn = conv2d_naive(prod, w.gffn.w2, Tensor(), 1, kGffnKernel / 2, 1);

  Tensor next_l({c, h, wd});
  for (int cc = 0; cc < c; ++cc)
    for (std::int64_t i = 0; i < hw; ++i)
      next_l[cc * hw + i] = ffn[cc * hw + i] + w.s2[cc] * f[cc * hw + i];

  auto carry = matmul(to_rows(f_r, DirectionOrder::H), w.w_carry, &w.b_carry);
  Tensor next_r = from_rows(carry, DirectionOrder::H, w.w_carry.dim(0), hr, wr);
  return {next_l, next_r};
}

Tensor model_forward(const Tensor& img, const ModelWeights& m) {
  const auto& cfg = m.config;
  const int h = img.dim(1), w = img.dim(2), n = cfg.region_size;
  const int hp = h + (n - h % n) % n, wp = w + (n - w % n) % n;

  // reflect pad bottom/right
  Tensor x({3, hp, wp});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < hp; ++y)
      for (int xx = 0; xx < wp; ++xx) {
        const int sy = y < h ? y : 2 * h - 2 - y;
        const int sx = xx < w ? xx : 2 * w - 2 - xx;
        x[(static_cast<std::int64_t>(c) * hp + y) * wp + xx] = img[(static_cast<std::int64_t>(c) * h + sy) * w + sx];
      }

  const Tensor f_l = conv2d_naive(x, m.head_w, m.head_b, 1, 1, 1);
  Tensor f = f_l;
  for (const auto& g : m.groups) {
    Tensor i_r = conv2d_naive(f, g.region_w, g.region_b, n, 0, 1);
    Tensor cur = f;
    for (const auto& hmb : g.hmbs) {
      auto [nl, nr] = hmb_forward(cur, i_r, hmb, n);
      cur = std::move(nl);
      i_r = std::move(nr);
    }
    Tensor refined = conv2d_naive(cur, g.tail_w, g.tail_b, 1, 1, 1);
    for (std::int64_t i = 0; i < f.numel(); ++i) f[i] = refined[i] + f[i];
  }

  Tensor sum({cfg.channels, hp, wp});
  for (std::int64_t i = 0; i < sum.numel(); ++i) sum[i] = f_l[i] + f[i];
  Tensor rec = conv2d_naive(sum, m.recon_w, m.recon_b, 1, 1, 1);

  // pixel shuffle + crop
  const int r = cfg.scale;
  Tensor out({3, r * h, r * w});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < r * h; ++y)
      for (int xx = 0; xx < r * w; ++xx) {
        const int gy = y / r, gx = xx / r, dy = y % r, dx = xx % r;
        out[(static_cast<std::int64_t>(c) * r * h + y) * (r * w) + xx] =
            rec[((static_cast<std::int64_t>(c) * r * r + dy * r + dx) * hp + gy) * wp + gx];
      }
  return out;
}

}  // namespace himamba::reference
