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

#include <cstdint>

// Low-level compute kernels. Every kernel exists in two variants that are
// required to produce bit-identical results:
//
//   *_serial   - plain reference loops, no threading
//   *_parallel - OpenMP over independent output elements
//
// The determinism contract: parallelism is only over output elements, and
// the accumulation order within a single output element is a fixed
// sequential loop. Forward kernels overwrite their outputs; backward
// kernels accumulate (+=) so the autodiff layer can merge gradients from
// multiple consumers in tape order.

namespace himamba::kernels {

struct ConvDims {
  int cin = 0, hin = 0, win = 0;
  int cout = 0, kh = 0, kw = 0;
  int stride = 1, pad = 0, groups = 1;

  int hout() const { return (hin + 2 * pad - kh) / stride + 1; }
  int wout() const { return (win + 2 * pad - kw) / stride + 1; }
};

struct ScanDims {
  std::int64_t len = 0;  // sequence length L
  int channels = 0;      // inner channels D
  int state = 0;         // SSM state size N
};

// ---- linear: y[m,o] = sum_i w[o,i] x[m,i] + b[o] ----
void linear_fwd_serial(const double* x, const double* w, const double* b, double* y,
                       std::int64_t m, int cin, int cout);
void linear_fwd_parallel(const double* x, const double* w, const double* b, double* y,
                         std::int64_t m, int cin, int cout);
void linear_dgrad_serial(const double* dy, const double* w, double* dx,
                         std::int64_t m, int cin, int cout);
void linear_dgrad_parallel(const double* dy, const double* w, double* dx,
                           std::int64_t m, int cin, int cout);
void linear_wgrad_serial(const double* dy, const double* x, double* dw, double* db,
                         std::int64_t m, int cin, int cout);
void linear_wgrad_parallel(const double* dy, const double* x, double* dw, double* db,
                           std::int64_t m, int cin, int cout);

// ---- conv2d, cross-correlation, zero padding, grouped ----
void conv2d_fwd_serial(const double* x, const double* w, const double* b, double* y, const ConvDims& d);
void conv2d_fwd_parallel(const double* x, const double* w, const double* b, double* y, const ConvDims& d);
void conv2d_dgrad_serial(const double* dy, const double* w, double* dx, const ConvDims& d);
void conv2d_dgrad_parallel(const double* dy, const double* w, double* dx, const ConvDims& d);
void conv2d_wgrad_serial(const double* dy, const double* x, double* dw, double* db, const ConvDims& d);
void conv2d_wgrad_parallel(const double* dy, const double* x, double* dw, double* db, const ConvDims& d);

// ---- layernorm over the trailing channel dim, one row per position ----
void layernorm_fwd_serial(const double* x, const double* g, const double* b, double* y,
                          std::int64_t m, int c, double eps);
void layernorm_fwd_parallel(const double* x, const double* g, const double* b, double* y,
                            std::int64_t m, int c, double eps);
void layernorm_xgrad_serial(const double* dy, const double* x, const double* g, double* dx,
                            std::int64_t m, int c, double eps);
void layernorm_xgrad_parallel(const double* dy, const double* x, const double* g, double* dx,
                              std::int64_t m, int c, double eps);
void layernorm_agrad_serial(const double* dy, const double* x, double* dgamma, double* dbeta,
                            std::int64_t m, int c, double eps);
void layernorm_agrad_parallel(const double* dy, const double* x, double* dgamma, double* dbeta,
                              std::int64_t m, int c, double eps);

// ---- elementwise ----
void silu_fwd_serial(const double* x, double* y, std::int64_t n);
void silu_fwd_parallel(const double* x, double* y, std::int64_t n);
void silu_bwd_serial(const double* dy, const double* x, double* dx, std::int64_t n);
void silu_bwd_parallel(const double* dy, const double* x, double* dx, std::int64_t n);
void softplus_fwd_serial(const double* x, double* y, std::int64_t n);
void softplus_fwd_parallel(const double* x, double* y, std::int64_t n);
void softplus_bwd_serial(const double* dy, const double* x, double* dx, std::int64_t n);
void softplus_bwd_parallel(const double* dy, const double* x, double* dx, std::int64_t n);

// ---- selective scan ----
// u[L,D], a_log[D,N], delta[L,D] (positive), b_seq[L,N], c_seq[L,N],
// d_skip[D] -> y[L,D]. When save_h/save_abar/save_bbar are non-null they
// receive the per-step states and discretized coefficients, each [L,D,N],
// for the backward pass. The saved-path arithmetic is identical to the
// plain path.
void scan_fwd_serial(const ScanDims& d, const double* u, const double* a_log, const double* delta,
                     const double* b_seq, const double* c_seq, const double* d_skip, double* y,
                     double* save_h, double* save_abar, double* save_bbar);
void scan_fwd_parallel(const ScanDims& d, const double* u, const double* a_log, const double* delta,
                       const double* b_seq, const double* c_seq, const double* d_skip, double* y,
                       double* save_h, double* save_abar, double* save_bbar);

// Backward: consumes the saved forward state. g_scratch is caller-provided
// [L,D,N] workspace for the running state adjoints. All output gradients
// accumulate.
void scan_bwd_serial(const ScanDims& d, const double* dy, const double* u, const double* a_log,
                     const double* delta, const double* b_seq, const double* c_seq,
                     const double* d_skip, const double* h, const double* abar, const double* bbar,
                     double* du, double* da_log, double* ddelta, double* db_seq, double* dc_seq,
                     double* dd_skip, double* g_scratch);
void scan_bwd_parallel(const ScanDims& d, const double* dy, const double* u, const double* a_log,
                       const double* delta, const double* b_seq, const double* c_seq,
                       const double* d_skip, const double* h, const double* abar, const double* bbar,
                       double* du, double* da_log, double* ddelta, double* db_seq, double* dc_seq,
                       double* dd_skip, double* g_scratch);

// Shared ZOH scalar pieces: phi(z) = (exp(z)-1)/z with a series fallback
// below |z| = 1e-6, and its derivative. abar = exp(z).
double zoh_phi(double z);
double zoh_phi(double z, double abar);        // abar = exp(z) already known
double zoh_phi_prime(double z, double abar);  // d phi / dz

// Per-channel scan bodies shared by the serial and parallel variants.
// a_buf/h_buf/g_buf/da_buf are caller scratch of size N.
void scan_channel_fwd(const ScanDims& sd, int ch, const double* u, const double* a_log,
                      const double* delta, const double* b_seq, const double* c_seq,
                      const double* d_skip, double* y, double* save_h, double* save_abar,
                      double* save_bbar, double* a_buf, double* h_buf);
void scan_channel_bwd(const ScanDims& sd, int ch, const double* dy, const double* u,
                      const double* a_log, const double* delta, const double* b_seq,
                      const double* d_skip, const double* c_seq, const double* h,
                      const double* abar, const double* bbar, double* du, double* da_log,
                      double* ddelta, double* dd_skip, double* g_store, double* a_buf,
                      double* g_buf, double* da_buf);
void scan_bc_bwd_row(const ScanDims& sd, std::int64_t k, int n, const double* dy, const double* u,
                     const double* delta, const double* h, const double* abar,
                     const double* g_store, const double* a_full, double* db_seq, double* dc_seq);

}  // namespace himamba::kernels
