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

#include "himamba/scan.hpp"

#include <algorithm>
#include <cmath>

#include "himamba/kernels.hpp"
#include "himamba/ops.hpp"

namespace himamba {

const char* direction_name(DirectionOrder d) {
  switch (d) {
    case DirectionOrder::H: return "H";
    case DirectionOrder::V: return "V";
    case DirectionOrder::RH: return "RH";
    case DirectionOrder::RV: return "RV";
  }
  return "?";
}

DirectionOrder direction_from_name(const std::string& s) {
  if (s == "H") return DirectionOrder::H;
  if (s == "V") return DirectionOrder::V;
  if (s == "RH") return DirectionOrder::RH;
  if (s == "RV") return DirectionOrder::RV;
  throw ParamError("unknown direction '" + s + "' (expected H, V, RH or RV)");
}

Discretized discretize_zoh(double delta, double a, double b) {
  if (!(delta > 0.0)) throw ParamError("discretize_zoh: delta must be positive, got " + std::to_string(delta));
  const double z = delta * a;
  const double a_bar = std::exp(z);
  const double b_bar = delta * b * kernels::zoh_phi(z, a_bar);
  return {a_bar, b_bar};
}

namespace {

kernels::ScanDims check_scan(const Tensor& u, const SelectiveParams& p) {
  if (u.rank() != 2) throw ShapeError("selective_scan: input must be [L,D], got " + shape_str(u.shape));
  const int L = u.dim(0), D = u.dim(1);
  if (p.a_log.rank() != 2 || p.a_log.dim(0) != D)
    throw ShapeError("selective_scan: a_log must be [D,N], got " + shape_str(p.a_log.shape));
  const int N = p.a_log.dim(1);
  require_shape(p.delta, {L, D}, "selective_scan delta");
  require_shape(p.b_seq, {L, N}, "selective_scan b_seq");
  require_shape(p.c_seq, {L, N}, "selective_scan c_seq");
  require_shape(p.d_skip, {D}, "selective_scan d_skip");
  for (std::int64_t i = 0; i < p.delta.numel(); ++i)
    if (!(p.delta[i] > 0.0)) throw ParamError("selective_scan: delta must be strictly positive");
  kernels::ScanDims sd;
  sd.len = L;
  sd.channels = D;
  sd.state = N;
  return sd;
}

}  // namespace

Tensor selective_scan(const Tensor& u, const SelectiveParams& p) {
  const auto sd = check_scan(u, p);
  Tensor y({static_cast<int>(sd.len), sd.channels});
  if (parallel_worthwhile(sd.len * sd.channels * sd.state) && sd.channels > 1)
    kernels::scan_fwd_parallel(sd, u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(),
                               p.c_seq.ptr(), p.d_skip.ptr(), y.ptr(), nullptr, nullptr, nullptr);
  else
    kernels::scan_fwd_serial(sd, u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(),
                             p.c_seq.ptr(), p.d_skip.ptr(), y.ptr(), nullptr, nullptr, nullptr);
  return y;
}

Tensor selective_scan_chunked(const Tensor& u, const SelectiveParams& p, int chunk_len) {
  const auto sd = check_scan(u, p);
  if (chunk_len < 1) throw ParamError("selective_scan_chunked: chunk length must be >= 1");
  const int L = static_cast<int>(sd.len), D = sd.channels, N = sd.state;
  Tensor y({L, D});
  std::vector<double> a(static_cast<std::size_t>(N)), h(static_cast<std::size_t>(N));
  for (int ch = 0; ch < D; ++ch) {
    for (int n = 0; n < N; ++n) {
      a[static_cast<std::size_t>(n)] = -std::exp(p.a_log[static_cast<std::int64_t>(ch) * N + n]);
      h[static_cast<std::size_t>(n)] = 0.0;
    }
    for (int start = 0; start < L; start += chunk_len) {
      const int stop = std::min(L, start + chunk_len);
      for (int k = start; k < stop; ++k) {
        const double dt = p.delta[static_cast<std::int64_t>(k) * D + ch];
        const double uk = u[static_cast<std::int64_t>(k) * D + ch];
        double acc = 0.0;
        for (int n = 0; n < N; ++n) {
          const double z = dt * a[static_cast<std::size_t>(n)];
          const double abar = std::exp(z);
          const double bbar = dt * p.b_seq[static_cast<std::int64_t>(k) * N + n] * kernels::zoh_phi(z, abar);
          h[static_cast<std::size_t>(n)] = abar * h[static_cast<std::size_t>(n)] + bbar * uk;
          acc += p.c_seq[static_cast<std::int64_t>(k) * N + n] * h[static_cast<std::size_t>(n)];
        }
        y[static_cast<std::int64_t>(k) * D + ch] = acc + p.d_skip[ch] * uk;
      }
    }
  }
  return y;
}

Tensor selective_scan_saved(const Tensor& u, const SelectiveParams& p, ScanSaved& saved) {
  const auto sd = check_scan(u, p);
  Tensor y({static_cast<int>(sd.len), sd.channels});
  saved.h = Tensor({static_cast<int>(sd.len), sd.channels, sd.state});
  saved.abar = Tensor(saved.h.shape);
  saved.bbar = Tensor(saved.h.shape);
  if (parallel_worthwhile(sd.len * sd.channels * sd.state) && sd.channels > 1)
    kernels::scan_fwd_parallel(sd, u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(),
                               p.c_seq.ptr(), p.d_skip.ptr(), y.ptr(), saved.h.ptr(),
                               saved.abar.ptr(), saved.bbar.ptr());
  else
    kernels::scan_fwd_serial(sd, u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(),
                             p.c_seq.ptr(), p.d_skip.ptr(), y.ptr(), saved.h.ptr(),
                             saved.abar.ptr(), saved.bbar.ptr());
  return y;
}

void selective_scan_bwd(const Tensor& dy, const Tensor& u, const SelectiveParams& p,
                        const ScanSaved& saved, ScanGrads& grads) {
  const auto sd = check_scan(u, p);
  require_shape(grads.du, u.shape, "scan du");
  require_shape(grads.da_log, p.a_log.shape, "scan da_log");
  require_shape(grads.ddelta, p.delta.shape, "scan ddelta");
  require_shape(grads.db_seq, p.b_seq.shape, "scan db_seq");
  require_shape(grads.dc_seq, p.c_seq.shape, "scan dc_seq");
  require_shape(grads.dd_skip, p.d_skip.shape, "scan dd_skip");
  Tensor g_scratch(saved.h.shape);
  if (parallel_worthwhile(sd.len * sd.channels * sd.state) && sd.channels > 1)
    kernels::scan_bwd_parallel(sd, dy.ptr(), u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(),
                               p.c_seq.ptr(), p.d_skip.ptr(), saved.h.ptr(), saved.abar.ptr(),
                               saved.bbar.ptr(), grads.du.ptr(), grads.da_log.ptr(),
                               grads.ddelta.ptr(), grads.db_seq.ptr(), grads.dc_seq.ptr(),
                               grads.dd_skip.ptr(), g_scratch.ptr());
  else
    kernels::scan_bwd_serial(sd, dy.ptr(), u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(),
                             p.c_seq.ptr(), p.d_skip.ptr(), saved.h.ptr(), saved.abar.ptr(),
                             saved.bbar.ptr(), grads.du.ptr(), grads.da_log.ptr(),
                             grads.ddelta.ptr(), grads.db_seq.ptr(), grads.dc_seq.ptr(),
                             grads.dd_skip.ptr(), g_scratch.ptr());
}

Tensor lti_kernel(const Tensor& a_bar, const Tensor& b_bar, const Tensor& c, int len) {
  if (len < 1) throw ParamError("lti_kernel: length must be >= 1");
  if (a_bar.rank() != 1 || !a_bar.same_shape(b_bar) || !a_bar.same_shape(c))
    throw ShapeError("lti_kernel: a_bar/b_bar/c must share shape [N]");
  const int n = a_bar.dim(0);
  Tensor k({len});
  std::vector<double> pow_b(b_bar.data.begin(), b_bar.data.end());
  for (int j = 0; j < len; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += c[i] * pow_b[static_cast<std::size_t>(i)];
    k[j] = acc;
    for (int i = 0; i < n; ++i) pow_b[static_cast<std::size_t>(i)] *= a_bar[i];
  }
  return k;
}

Tensor lti_apply(const Tensor& u, const Tensor& kernel, double d_skip) {
  if (u.rank() != 1 || kernel.rank() != 1 || u.dim(0) != kernel.dim(0))
    throw ShapeError("lti_apply: u and kernel must both be [L]");
  const int L = u.dim(0);
  Tensor y({L});
  for (int k = 0; k < L; ++k) {
    double acc = 0.0;
    for (int j = 0; j <= k; ++j) acc += kernel[j] * u[k - j];
    y[k] = acc + d_skip * u[k];
  }
  return y;
}

SelectiveParams selective_params_from_input(const Tensor& x_seq, const Tensor& w_delta,
                                            const Tensor& b_delta, const Tensor& w_b,
                                            const Tensor& w_c, const Tensor& a_log,
                                            const Tensor& d_skip) {
  SelectiveParams p;
  p.delta = ops::softplus(ops::linear(x_seq, w_delta, &b_delta));
  p.b_seq = ops::linear(x_seq, w_b, nullptr);
  p.c_seq = ops::linear(x_seq, w_c, nullptr);
  p.a_log = a_log;
  p.d_skip = d_skip;
  return p;
}

std::int64_t direction_index(DirectionOrder dir, int h, int w, int y, int x) {
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  switch (dir) {
    case DirectionOrder::H: return static_cast<std::int64_t>(y) * w + x;
    case DirectionOrder::V: return static_cast<std::int64_t>(x) * h + y;
    case DirectionOrder::RH: return hw - 1 - (static_cast<std::int64_t>(y) * w + x);
    case DirectionOrder::RV: return hw - 1 - (static_cast<std::int64_t>(x) * h + y);
  }
  throw InternalError("bad direction tag");
}

Tensor flatten_direction(const Tensor& x, DirectionOrder dir) {
  if (x.rank() != 3) throw ShapeError("flatten_direction: expected [C,H,W], got " + shape_str(x.shape));
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor seq({h * w, c});
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx) {
      const std::int64_t k = direction_index(dir, h, w, yy, xx);
      for (int cc = 0; cc < c; ++cc)
        seq[k * c + cc] = x[(static_cast<std::int64_t>(cc) * h + yy) * w + xx];
    }
  return seq;
}

Tensor unflatten_direction(const Tensor& seq, DirectionOrder dir, int c, int h, int w) {
  require_shape(seq, {h * w, c}, "unflatten_direction input");
  Tensor x({c, h, w});
  for (int yy = 0; yy < h; ++yy)
    for (int xx = 0; xx < w; ++xx) {
      const std::int64_t k = direction_index(dir, h, w, yy, xx);
      for (int cc = 0; cc < c; ++cc)
        x[(static_cast<std::int64_t>(cc) * h + yy) * w + xx] = seq[k * c + cc];
    }
  return x;
}

}  // namespace himamba
