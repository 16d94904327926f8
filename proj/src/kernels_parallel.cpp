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

// OpenMP kernels. Work is split over independent output elements only, so
// outputs are bit-identical to the serial reference for any thread count.

#include <cmath>
#include <vector>

#include "himamba/common.hpp"
#include "himamba/kernels.hpp"

namespace himamba::kernels {

void linear_fwd_parallel(const double* x, const double* w, const double* b, double* y,
                         std::int64_t m, int cin, int cout) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
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

void linear_dgrad_parallel(const double* dy, const double* w, double* dx,
                           std::int64_t m, int cin, int cout) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
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

void linear_wgrad_parallel(const double* dy, const double* x, double* dw, double* db,
                           std::int64_t m, int cin, int cout) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static) collapse(2)
  for (int o = 0; o < cout; ++o) {
    for (int i = 0; i < cin; ++i) {
      double acc = 0.0;
      for (std::int64_t r = 0; r < m; ++r) acc += dy[r * cout + o] * x[r * cin + i];
      dw[static_cast<std::int64_t>(o) * cin + i] += acc;
    }
  }
  if (db) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
    for (int o = 0; o < cout; ++o) {
      double acc = 0.0;
      for (std::int64_t r = 0; r < m; ++r) acc += dy[r * cout + o];
      db[o] += acc;
    }
  }
}

void conv2d_fwd_parallel(const double* x, const double* w, const double* b, double* y, const ConvDims& d) {
  const int ho = d.hout(), wo = d.wout();
  const int cig = d.cin / d.groups, cog = d.cout / d.groups;
#pragma omp parallel for num_threads(thread_cap()) schedule(static) collapse(2)
  for (int co = 0; co < d.cout; ++co) {
    for (int oy = 0; oy < ho; ++oy) {
      const int g = co / cog;
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

void conv2d_dgrad_parallel(const double* dy, const double* w, double* dx, const ConvDims& d) {
  const int ho = d.hout(), wo = d.wout();
  const int cig = d.cin / d.groups, cog = d.cout / d.groups;
#pragma omp parallel for num_threads(thread_cap()) schedule(static) collapse(2)
  for (int ci = 0; ci < d.cin; ++ci) {
    for (int iy = 0; iy < d.hin; ++iy) {
      const int g = ci / cig, cl = ci - g * cig;
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

void conv2d_wgrad_parallel(const double* dy, const double* x, double* dw, double* db, const ConvDims& d) {
  const int ho = d.hout(), wo = d.wout();
  const int cig = d.cin / d.groups, cog = d.cout / d.groups;
#pragma omp parallel for num_threads(thread_cap()) schedule(static) collapse(2)
  for (int co = 0; co < d.cout; ++co) {
    for (int cl = 0; cl < cig; ++cl) {
      const int g = co / cog;
      const int ci = g * cig + cl;
      const double* dyc = dy + static_cast<std::int64_t>(co) * ho * wo;
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
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
    for (int co = 0; co < d.cout; ++co) {
      const double* dyc = dy + static_cast<std::int64_t>(co) * ho * wo;
      double acc = 0.0;
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(ho) * wo; ++i) acc += dyc[i];
      db[co] += acc;
    }
  }
}

void layernorm_fwd_parallel(const double* x, const double* g, const double* b, double* y,
                            std::int64_t m, int c, double eps) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (std::int64_t r = 0; r < m; ++r) layernorm_fwd_serial(x + r * c, g, b, y + r * c, 1, c, eps);
}

void layernorm_xgrad_parallel(const double* dy, const double* x, const double* g, double* dx,
                              std::int64_t m, int c, double eps) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (std::int64_t r = 0; r < m; ++r)
    layernorm_xgrad_serial(dy + r * c, x + r * c, g, dx + r * c, 1, c, eps);
}

void layernorm_agrad_parallel(const double* dy, const double* x, double* dgamma, double* dbeta,
                              std::int64_t m, int c, double eps) {
  std::vector<double> mean(static_cast<std::size_t>(m)), inv(static_cast<std::size_t>(m));
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
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
    mean[static_cast<std::size_t>(r)] = mu;
    inv[static_cast<std::size_t>(r)] = 1.0 / std::sqrt(var + eps);
  }
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (int j = 0; j < c; ++j) {
    double dg = 0.0, db = 0.0;
    for (std::int64_t r = 0; r < m; ++r) {
      const double xhat = (x[r * c + j] - mean[static_cast<std::size_t>(r)]) * inv[static_cast<std::size_t>(r)];
      dg += dy[r * c + j] * xhat;
      db += dy[r * c + j];
    }
    dgamma[j] += dg;
    dbeta[j] += db;
  }
}

void silu_fwd_parallel(const double* x, double* y, std::int64_t n) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) silu_fwd_serial(x + i, y + i, 1);
}

void silu_bwd_parallel(const double* dy, const double* x, double* dx, std::int64_t n) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) silu_bwd_serial(dy + i, x + i, dx + i, 1);
}

void softplus_fwd_parallel(const double* x, double* y, std::int64_t n) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) softplus_fwd_serial(x + i, y + i, 1);
}

void softplus_bwd_parallel(const double* dy, const double* x, double* dx, std::int64_t n) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) softplus_bwd_serial(dy + i, x + i, dx + i, 1);
}

void scan_fwd_parallel(const ScanDims& d, const double* u, const double* a_log, const double* delta,
                       const double* b_seq, const double* c_seq, const double* d_skip, double* y,
                       double* save_h, double* save_abar, double* save_bbar) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (int ch = 0; ch < d.channels; ++ch) {
    std::vector<double> a_buf(d.state), h_buf(d.state);
    scan_channel_fwd(d, ch, u, a_log, delta, b_seq, c_seq, d_skip, y, save_h, save_abar, save_bbar,
                     a_buf.data(), h_buf.data());
  }
}

void scan_bwd_parallel(const ScanDims& d, const double* dy, const double* u, const double* a_log,
                       const double* delta, const double* b_seq, const double* c_seq,
                       const double* d_skip, const double* h, const double* abar, const double* bbar,
                       double* du, double* da_log, double* ddelta, double* db_seq, double* dc_seq,
                       double* dd_skip, double* g_scratch) {
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (int ch = 0; ch < d.channels; ++ch) {
    std::vector<double> a_buf(d.state), g_buf(d.state), da_buf(d.state);
    scan_channel_bwd(d, ch, dy, u, a_log, delta, b_seq, d_skip, c_seq, h, abar, bbar, du, da_log,
                     ddelta, dd_skip, g_scratch, a_buf.data(), g_buf.data(), da_buf.data());
  }
  std::vector<double> a_full(static_cast<std::size_t>(d.channels) * d.state);
  for (std::size_t i = 0; i < a_full.size(); ++i) a_full[i] = -std::exp(a_log[i]);
#pragma omp parallel for num_threads(thread_cap()) schedule(static)
  for (std::int64_t k = 0; k < d.len; ++k)
    for (int n = 0; n < d.state; ++n)
      scan_bc_bwd_row(d, k, n, dy, u, delta, h, abar, g_scratch, a_full.data(), db_seq, dc_seq);
}

}  // namespace himamba::kernels
