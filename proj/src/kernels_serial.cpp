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

// Reference kernels: straightforward loops, no threading. The parallel
// variants in kernels_parallel.cpp reuse the same per-element arithmetic.

#include <cmath>
#include <vector>

#include "himamba/kernels.hpp"

namespace himamba::kernels {

double zoh_phi(double z, double abar) {
  if (std::fabs(z) < 1e-6) return 1.0 + z * (0.5 + z / 6.0);
  return (abar - 1.0) / z;
}

double zoh_phi(double z) { return zoh_phi(z, std::exp(z)); }

double zoh_phi_prime(double z, double abar) {
  // phi'(z) = (e^z (z - 1) + 1) / z^2; series below 1e-3 where the closed
  // form cancels catastrophically
  if (std::fabs(z) < 1e-3) return 0.5 + z * (1.0 / 3.0 + z * (0.125 + z / 30.0));
  return (abar * (z - 1.0) + 1.0) / (z * z);
}

namespace {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double silu_one(double x) { return x * sigmoid(x); }

inline double silu_grad_one(double x) {
  double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

inline double softplus_one(double x) {
  return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace

// ---------------------------------------------------------------- linear

void linear_fwd_serial(const double* x, const double* w, const double* b, double* y,
                       std::int64_t m, int cin, int cout) {
  for (std::int64_t r = 0; r < m; ++r) {
    const double* xr = x + r * cin;
    double* yr = y + r * cout;
    for (int o = 0; o < cout; ++o) {
      const double* wo = w + static_cast<std::int64_t>(o) * cin;
      double acc = b ? b[o] : 0.0;
      for (int i = 0; i < cin; ++i) acc += wo[i] * xr[i];
      yr[o] = acc;
    }
  }
}

void linear_dgrad_serial(const double* dy, const double* w, double* dx,
                         std::int64_t m, int cin, int cout) {
  for (std::int64_t r = 0; r < m; ++r) {
    const double* dyr = dy + r * cout;
    double* dxr = dx + r * cin;
    for (int i = 0; i < cin; ++i) {
      double acc = 0.0;
      for (int o = 0; o < cout; ++o) acc += dyr[o] * w[static_cast<std::int64_t>(o) * cin + i];
      dxr[i] += acc;
    }
  }
}

void linear_wgrad_serial(const double* dy, const double* x, double* dw, double* db,
                         std::int64_t m, int cin, int cout) {
  for (int o = 0; o < cout; ++o) {
    for (int i = 0; i < cin; ++i) {
      double acc = 0.0;
      for (std::int64_t r = 0; r < m; ++r) acc += dy[r * cout + o] * x[r * cin + i];
      dw[static_cast<std::int64_t>(o) * cin + i] += acc;
    }
  }
  if (db) {
    for (int o = 0; o < cout; ++o) {
      double acc = 0.0;
      for (std::int64_t r = 0; r < m; ++r) acc += dy[r * cout + o];
      db[o] += acc;
    }
  }
}

// ---------------------------------------------------------------- conv2d

void conv2d_fwd_serial(const double* x, const double* w, const double* b, double* y, const ConvDims& d) {
  const int ho = d.hout(), wo = d.wout();
  const int cig = d.cin / d.groups, cog = d.cout / d.groups;
  for (int co = 0; co < d.cout; ++co) {
    const int g = co / cog;
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double acc = b ? b[co] : 0.0;
        for (int cl = 0; cl < cig; ++cl) {
          const int ci = g * cig + cl;
          const double* xc = x + static_cast<std::int64_t>(ci) * d.hin * d.win;
          const double* wc = w + (static_cast<std::int64_t>(co) * cig + cl) * d.kh * d.kw;
          for (int ky = 0; ky < d.kh; ++ky) {
            const int iy = oy * d.stride - d.pad + ky;
            if (iy < 0 || iy >= d.hin) continue;
            for (int kx = 0; kx < d.kw; ++kx) {
              const int ix = ox * d.stride - d.pad + kx;
              if (ix < 0 || ix >= d.win) continue;
              acc += xc[static_cast<std::int64_t>(iy) * d.win + ix] * wc[ky * d.kw + kx];
            }
          }
        }
        y[(static_cast<std::int64_t>(co) * ho + oy) * wo + ox] = acc;
      }
    }
  }
}

void conv2d_dgrad_serial(const double* dy, const double* w, double* dx, const ConvDims& d) {
  const int ho = d.hout(), wo = d.wout();
  const int cig = d.cin / d.groups, cog = d.cout / d.groups;
  for (int ci = 0; ci < d.cin; ++ci) {
    const int g = ci / cig, cl = ci - g * cig;
    for (int iy = 0; iy < d.hin; ++iy) {
      for (int ix = 0; ix < d.win; ++ix) {
        double acc = 0.0;
        for (int col = 0; col < cog; ++col) {
          const int co = g * cog + col;
          const double* wc = w + (static_cast<std::int64_t>(co) * cig + cl) * d.kh * d.kw;
          const double* dyc = dy + static_cast<std::int64_t>(co) * ho * wo;
          for (int ky = 0; ky < d.kh; ++ky) {
            const int ty = iy + d.pad - ky;
            if (ty < 0 || ty % d.stride != 0) continue;
            const int oy = ty / d.stride;
            if (oy >= ho) continue;
            for (int kx = 0; kx < d.kw; ++kx) {
              const int tx = ix + d.pad - kx;
              if (tx < 0 || tx % d.stride != 0) continue;
              const int ox = tx / d.stride;
              if (ox >= wo) continue;
              acc += dyc[static_cast<std::int64_t>(oy) * wo + ox] * wc[ky * d.kw + kx];
            }
          }
        }
        dx[(static_cast<std::int64_t>(ci) * d.hin + iy) * d.win + ix] += acc;
      }
    }
  }
}

void conv2d_wgrad_serial(const double* dy, const double* x, double* dw, double* db, const ConvDims& d) {
  const int ho = d.hout(), wo = d.wout();
  const int cig = d.cin / d.groups, cog = d.cout / d.groups;
  for (int co = 0; co < d.cout; ++co) {
    const int g = co / cog;
    const double* dyc = dy + static_cast<std::int64_t>(co) * ho * wo;
    for (int cl = 0; cl < cig; ++cl) {
      const int ci = g * cig + cl;
      const double* xc = x + static_cast<std::int64_t>(ci) * d.hin * d.win;
      for (int ky = 0; ky < d.kh; ++ky) {
        for (int kx = 0; kx < d.kw; ++kx) {
          double acc = 0.0;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = oy * d.stride - d.pad + ky;
            if (iy < 0 || iy >= d.hin) continue;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = ox * d.stride - d.pad + kx;
              if (ix < 0 || ix >= d.win) continue;
              acc += dyc[static_cast<std::int64_t>(oy) * wo + ox] * xc[static_cast<std::int64_t>(iy) * d.win + ix];
            }
          }
          dw[((static_cast<std::int64_t>(co) * cig + cl) * d.kh + ky) * d.kw + kx] += acc;
        }
      }
    }
  }
  if (db) {
    for (int co = 0; co < d.cout; ++co) {
      const double* dyc = dy + static_cast<std::int64_t>(co) * ho * wo;
      double acc = 0.0;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(ho) * wo; ++i) acc += dyc[i];
      db[co] += acc;
    }
  }
}

// ------------------------------------------------------------- layernorm

void layernorm_fwd_serial(const double* x, const double* g, const double* b, double* y,
                          std::int64_t m, int c, double eps) {
  for (std::int64_t r = 0; r < m; ++r) {
    const double* xr = x + r * c;
    double* yr = y + r * c;
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += xr[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double t = xr[j] - mean;
      var += t * t;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < c; ++j) yr[j] = (xr[j] - mean) * inv * g[j] + b[j];
  }
}

void layernorm_xgrad_serial(const double* dy, const double* x, const double* g, double* dx,
                            std::int64_t m, int c, double eps) {
  for (std::int64_t r = 0; r < m; ++r) {
    const double* xr = x + r * c;
    const double* dyr = dy + r * c;
    double* dxr = dx + r * c;
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += xr[j];
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double t = xr[j] - mean;
      var += t * t;
    }
    var /= c;
    const double inv = 1.0 / std::sqrt(var + eps);
    double s1 = 0.0, s2 = 0.0;
    for (int j = 0; j < c; ++j) {
      const double xhat = (xr[j] - mean) * inv;
      const double dxhat = dyr[j] * g[j];
      s1 += dxhat;
      s2 += dxhat * xhat;
    }
    for (int j = 0; j < c; ++j) {
      const double xhat = (xr[j] - mean) * inv;
      const double dxhat = dyr[j] * g[j];
      dxr[j] += inv * (dxhat - s1 / c - xhat * s2 / c);
    }
  }
}

void layernorm_agrad_serial(const double* dy, const double* x, double* dgamma, double* dbeta,
                            std::int64_t m, int c, double eps) {
  std::vector<double> mean(m), inv(m);
  for (std::int64_t r = 0; r < m; ++r) {
    const double* xr = x + r * c;
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += xr[j];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double t = xr[j] - mu;
      var += t * t;
    }
    var /= c;
    mean[r] = mu;
    inv[r] = 1.0 / std::sqrt(var + eps);
  }
  for (int j = 0; j < c; ++j) {
    double dg = 0.0, db = 0.0;
    for (std::int64_t r = 0; r < m; ++r) {
      const double xhat = (x[r * c + j] - mean[r]) * inv[r];
      dg += dy[r * c + j] * xhat;
      db += dy[r * c + j];
    }
    dgamma[j] += dg;
    dbeta[j] += db;
  }
}

// ------------------------------------------------------------ elementwise

void silu_fwd_serial(const double* x, double* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = silu_one(x[i]);
}

void silu_bwd_serial(const double* dy, const double* x, double* dx, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * silu_grad_one(x[i]);
}

void softplus_fwd_serial(const double* x, double* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) y[i] = softplus_one(x[i]);
}

void softplus_bwd_serial(const double* dy, const double* x, double* dx, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * sigmoid(x[i]);
}

// --------------------------------------------------------- selective scan

// One channel of the recurrence. h_state enters as zeros and carries the
// running state; identical code serves both kernel variants.
void scan_channel_fwd(const ScanDims& sd, int ch, const double* u, const double* a_log,
                      const double* delta, const double* b_seq, const double* c_seq,
                      const double* d_skip, double* y, double* save_h, double* save_abar,
                      double* save_bbar, double* a_buf, double* h_buf) {
  const std::int64_t L = sd.len;
  const int D = sd.channels, N = sd.state;
  for (int n = 0; n < N; ++n) {
    a_buf[n] = -std::exp(a_log[static_cast<std::int64_t>(ch) * N + n]);
    h_buf[n] = 0.0;
  }
  for (std::int64_t k = 0; k < L; ++k) {
    const double dt = delta[k * D + ch];
    const double uk = u[k * D + ch];
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
      const double z = dt * a_buf[n];
      const double abar = std::exp(z);
      const double bbar = dt * b_seq[k * N + n] * zoh_phi(z, abar);
      h_buf[n] = abar * h_buf[n] + bbar * uk;
      acc += c_seq[k * N + n] * h_buf[n];
      if (save_h) {
        const std::int64_t idx = (k * D + ch) * N + n;
        save_h[idx] = h_buf[n];
        save_abar[idx] = abar;
        save_bbar[idx] = bbar;
      }
    }
    y[k * D + ch] = acc + d_skip[ch] * uk;
  }
}

void scan_fwd_serial(const ScanDims& d, const double* u, const double* a_log, const double* delta,
                     const double* b_seq, const double* c_seq, const double* d_skip, double* y,
                     double* save_h, double* save_abar, double* save_bbar) {
  std::vector<double> a_buf(d.state), h_buf(d.state);
  for (int ch = 0; ch < d.channels; ++ch)
    scan_channel_fwd(d, ch, u, a_log, delta, b_seq, c_seq, d_skip, y, save_h, save_abar, save_bbar,
                     a_buf.data(), h_buf.data());
}

// Reverse recurrence for one channel. Writes the post-injection state
// adjoints into g_store ([L,D,N]) for the cross-channel b_seq reduction.
void scan_channel_bwd(const ScanDims& sd, int ch, const double* dy, const double* u,
                      const double* a_log, const double* delta, const double* b_seq,
                      const double* d_skip, const double* c_seq, const double* h,
                      const double* abar, const double* bbar, double* du, double* da_log,
                      double* ddelta, double* dd_skip, double* g_store, double* a_buf,
                      double* g_buf, double* da_buf) {
  const std::int64_t L = sd.len;
  const int D = sd.channels, N = sd.state;
  for (int n = 0; n < N; ++n) {
    a_buf[n] = -std::exp(a_log[static_cast<std::int64_t>(ch) * N + n]);
    g_buf[n] = 0.0;
    da_buf[n] = 0.0;
  }
  double dd_acc = 0.0;
  for (std::int64_t k = L - 1; k >= 0; --k) {
    const double dy_k = dy[k * D + ch];
    const double uk = u[k * D + ch];
    const double dt = delta[k * D + ch];
    dd_acc += dy_k * uk;
    double ddelta_k = 0.0;
    double du_k = dy_k * d_skip[ch];
    for (int n = 0; n < N; ++n) {
      const std::int64_t idx = (k * D + ch) * N + n;
      g_buf[n] += dy_k * c_seq[k * N + n];
      g_store[idx] = g_buf[n];
      const double hprev = (k > 0) ? h[((k - 1) * D + ch) * N + n] : 0.0;
      const double ab = abar[idx];
      const double dabar = g_buf[n] * hprev;
      const double dbbar = g_buf[n] * uk;
      const double bkn = b_seq[k * N + n];
      // d abar / d delta = a * abar ; d bbar / d delta = b * abar
      ddelta_k += dabar * a_buf[n] * ab + dbbar * bkn * ab;
      const double z = dt * a_buf[n];
      da_buf[n] += dabar * dt * ab + dbbar * bkn * dt * dt * zoh_phi_prime(z, ab);
      du_k += g_buf[n] * bbar[idx];
      g_buf[n] *= ab;
    }
    du[k * D + ch] += du_k;
    ddelta[k * D + ch] += ddelta_k;
  }
  dd_skip[ch] += dd_acc;
  // chain through a = -exp(a_log): da_log = da * a
  for (int n = 0; n < N; ++n) da_log[static_cast<std::int64_t>(ch) * N + n] += da_buf[n] * a_buf[n];
}

// Cross-channel reductions: dc and db sum over channels with a fixed order.
void scan_bc_bwd_row(const ScanDims& sd, std::int64_t k, int n, const double* dy, const double* u,
                     const double* delta, const double* h, const double* abar,
                     const double* g_store, const double* a_full, double* db_seq, double* dc_seq) {
  const int D = sd.channels, N = sd.state;
  double db = 0.0, dc = 0.0;
  for (int ch = 0; ch < D; ++ch) {
    const std::int64_t idx = (k * D + ch) * N + n;
    dc += dy[k * D + ch] * h[idx];
    const double dt = delta[k * D + ch];
    const double z = dt * a_full[static_cast<std::int64_t>(ch) * N + n];
    db += g_store[idx] * u[k * D + ch] * dt * zoh_phi(z, abar[idx]);
  }
  db_seq[k * N + n] += db;
  dc_seq[k * N + n] += dc;
}

void scan_bwd_serial(const ScanDims& d, const double* dy, const double* u, const double* a_log,
                     const double* delta, const double* b_seq, const double* c_seq,
                     const double* d_skip, const double* h, const double* abar, const double* bbar,
                     double* du, double* da_log, double* ddelta, double* db_seq, double* dc_seq,
                     double* dd_skip, double* g_scratch) {
  std::vector<double> a_buf(d.state), g_buf(d.state), da_buf(d.state);
  for (int ch = 0; ch < d.channels; ++ch)
    scan_channel_bwd(d, ch, dy, u, a_log, delta, b_seq, d_skip, c_seq, h, abar, bbar, du, da_log,
                     ddelta, dd_skip, g_scratch, a_buf.data(), g_buf.data(), da_buf.data());
  std::vector<double> a_full(static_cast<std::size_t>(d.channels) * d.state);
  for (std::size_t i = 0; i < a_full.size(); ++i) a_full[i] = -std::exp(a_log[i]);
  for (std::int64_t k = 0; k < d.len; ++k)
    for (int n = 0; n < d.state; ++n)
      scan_bc_bwd_row(d, k, n, dy, u, delta, h, abar, g_scratch, a_full.data(), db_seq, dc_seq);
}

}  // namespace himamba::kernels
