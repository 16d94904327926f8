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

#include "himamba/ops.hpp"

#include <cmath>

#include "himamba/kernels.hpp"

namespace himamba::ops {

namespace {

// rows x trailing-channel view of an [..., C] tensor
std::int64_t leading_rows(const Tensor& x) { return x.numel() / x.shape.back(); }

void check_image(const Tensor& x, const char* what) {
  if (x.rank() != 3) throw ShapeError(std::string(what) + ": expected [C,H,W], got " + shape_str(x.shape));
}

kernels::ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad, int groups) {
  check_image(x, "conv2d input");
  if (w.rank() != 4) throw ShapeError("conv2d weight: expected [Cout,Cin/g,kh,kw], got " + shape_str(w.shape));
  if (stride < 1) throw ParamError("conv2d: stride must be >= 1, got " + std::to_string(stride));
  if (pad < 0) throw ParamError("conv2d: pad must be >= 0, got " + std::to_string(pad));
  if (groups < 1) throw ParamError("conv2d: groups must be >= 1, got " + std::to_string(groups));
  kernels::ConvDims d;
  d.cin = x.dim(0);
  d.hin = x.dim(1);
  d.win = x.dim(2);
  d.cout = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.pad = pad;
  d.groups = groups;
  if (d.cin % groups != 0 || d.cout % groups != 0)
    throw ShapeError("conv2d: channels not divisible by groups");
  if (w.dim(1) != d.cin / groups)
    throw ShapeError("conv2d: weight in-channels " + std::to_string(w.dim(1)) + " != Cin/groups " +
                     std::to_string(d.cin / groups));
  if (d.hin + 2 * pad < d.kh || d.win + 2 * pad < d.kw)
    throw ParamError("conv2d: kernel larger than padded input");
  return d;
}

}  // namespace

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b) {
  if (w.rank() != 2) throw ShapeError("linear weight: expected [Cout,Cin], got " + shape_str(w.shape));
  const int cout = w.dim(0), cin = w.dim(1);
  if (x.rank() < 1 || x.shape.back() != cin)
    throw ShapeError("linear: input trailing dim " + shape_str(x.shape) + " != Cin " + std::to_string(cin));
  if (b && (b->rank() != 1 || b->dim(0) != cout))
    throw ShapeError("linear bias: expected [" + std::to_string(cout) + "], got " + shape_str(b->shape));
  std::vector<int> out_shape = x.shape;
  out_shape.back() = cout;
  Tensor y(out_shape);
  const std::int64_t m = leading_rows(x);
  if (parallel_worthwhile(m * cout * cin))
    kernels::linear_fwd_parallel(x.ptr(), w.ptr(), b ? b->ptr() : nullptr, y.ptr(), m, cin, cout);
  else
    kernels::linear_fwd_serial(x.ptr(), w.ptr(), b ? b->ptr() : nullptr, y.ptr(), m, cin, cout);
  return y;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad, int groups) {
  auto d = conv_dims(x, w, stride, pad, groups);
  if (b && (b->rank() != 1 || b->dim(0) != d.cout))
    throw ShapeError("conv2d bias: expected [" + std::to_string(d.cout) + "], got " + shape_str(b->shape));
  Tensor y({d.cout, d.hout(), d.wout()});
  const std::int64_t work = y.numel() * d.kh * d.kw * (d.cin / d.groups);
  if (parallel_worthwhile(work))
    kernels::conv2d_fwd_parallel(x.ptr(), w.ptr(), b ? b->ptr() : nullptr, y.ptr(), d);
  else
    kernels::conv2d_fwd_serial(x.ptr(), w.ptr(), b ? b->ptr() : nullptr, y.ptr(), d);
  return y;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const int c = x.shape.back();
  require_shape(gamma, {c}, "layernorm gamma");
  require_shape(beta, {c}, "layernorm beta");
  Tensor y(x.shape);
  const std::int64_t m = leading_rows(x);
  if (parallel_worthwhile(x.numel()))
    kernels::layernorm_fwd_parallel(x.ptr(), gamma.ptr(), beta.ptr(), y.ptr(), m, c, eps);
  else
    kernels::layernorm_fwd_serial(x.ptr(), gamma.ptr(), beta.ptr(), y.ptr(), m, c, eps);
  return y;
}

Tensor silu(const Tensor& x) {
  Tensor y(x.shape);
  if (parallel_worthwhile(x.numel()))
    kernels::silu_fwd_parallel(x.ptr(), y.ptr(), x.numel());
  else
    kernels::silu_fwd_serial(x.ptr(), y.ptr(), x.numel());
  return y;
}

Tensor softplus(const Tensor& x) {
  Tensor y(x.shape);
  if (parallel_worthwhile(x.numel()))
    kernels::softplus_fwd_parallel(x.ptr(), y.ptr(), x.numel());
  else
    kernels::softplus_fwd_serial(x.ptr(), y.ptr(), x.numel());
  return y;
}

Tensor pixel_shuffle(const Tensor& x, int r) {
  check_image(x, "pixel_shuffle");
  if (r < 1) throw ParamError("pixel_shuffle: factor must be >= 1");
  const int cr2 = x.dim(0);
  if (cr2 % (r * r) != 0)
    throw ParamError("pixel_shuffle: leading dim " + std::to_string(cr2) + " not divisible by r^2");
  const int c = cr2 / (r * r), h = x.dim(1), w = x.dim(2);
  Tensor y({c, r * h, r * w});
  for (int cc = 0; cc < c; ++cc)
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx) {
        const double* src = x.ptr() + (static_cast<std::int64_t>(cc) * r * r + dy * r + dx) * h * w;
        for (int yy = 0; yy < h; ++yy) {
          double* dst = y.ptr() + ((static_cast<std::int64_t>(cc) * r * h) + (r * yy + dy)) * (r * w) + dx;
          for (int xx = 0; xx < w; ++xx) dst[static_cast<std::int64_t>(r) * xx] = src[static_cast<std::int64_t>(yy) * w + xx];
        }
      }
  return y;
}

Tensor pixel_unshuffle(const Tensor& x, int r) {
  check_image(x, "pixel_unshuffle");
  if (r < 1) throw ParamError("pixel_unshuffle: factor must be >= 1");
  if (x.dim(1) % r != 0 || x.dim(2) % r != 0)
    throw ParamError("pixel_unshuffle: spatial dims not divisible by r");
  const int c = x.dim(0), h = x.dim(1) / r, w = x.dim(2) / r;
  Tensor y({c * r * r, h, w});
  for (int cc = 0; cc < c; ++cc)
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx) {
        double* dst = y.ptr() + (static_cast<std::int64_t>(cc) * r * r + dy * r + dx) * h * w;
        for (int yy = 0; yy < h; ++yy) {
          const double* src = x.ptr() + ((static_cast<std::int64_t>(cc) * r * h) + (r * yy + dy)) * (r * w) + dx;
          for (int xx = 0; xx < w; ++xx) dst[static_cast<std::int64_t>(yy) * w + xx] = src[static_cast<std::int64_t>(r) * xx];
        }
      }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("add: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor y(a.shape);
  for (std::int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] + b[i];
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("sub: shape mismatch");
  Tensor y(a.shape);
  for (std::int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] - b[i];
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("mul: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor y(a.shape);
  for (std::int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * b[i];
  return y;
}

Tensor scale(const Tensor& a, double s) {
  Tensor y(a.shape);
  for (std::int64_t i = 0; i < a.numel(); ++i) y[i] = a[i] * s;
  return y;
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
  check_image(x, "scale_channels");
  require_shape(s, {x.dim(0)}, "scale_channels factor");
  Tensor y(x.shape);
  const std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
  for (int c = 0; c < x.dim(0); ++c)
    for (std::int64_t i = 0; i < hw; ++i) y[c * hw + i] = x[c * hw + i] * s[c];
  return y;
}

Tensor clamp01(const Tensor& x) {
  Tensor y(x.shape);
  for (std::int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] < 0.0 ? 0.0 : (x[i] > 1.0 ? 1.0 : x[i]);
  return y;
}

Tensor repeat_region(const Tensor& x, int n) {
  check_image(x, "repeat_region");
  if (n < 1) throw ParamError("repeat_region: region size must be >= 1");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, n * h, n * w});
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < n * h; ++yy) {
      const double* src = x.ptr() + (static_cast<std::int64_t>(cc) * h + yy / n) * w;
      double* dst = y.ptr() + (static_cast<std::int64_t>(cc) * n * h + yy) * (n * w);
      for (int xx = 0; xx < n * w; ++xx) dst[xx] = src[xx / n];
    }
  return y;
}

Tensor block_sum(const Tensor& x, int n) {
  check_image(x, "block_sum");
  if (n < 1 || x.dim(1) % n != 0 || x.dim(2) % n != 0)
    throw ParamError("block_sum: spatial dims not divisible by region size");
  const int c = x.dim(0), h = x.dim(1) / n, w = x.dim(2) / n;
  Tensor y({c, h, w});
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) {
        double acc = 0.0;
        for (int dy = 0; dy < n; ++dy)
          for (int dx = 0; dx < n; ++dx)
            acc += x[(static_cast<std::int64_t>(cc) * h * n + yy * n + dy) * (w * n) + xx * n + dx];
        y[(static_cast<std::int64_t>(cc) * h + yy) * w + xx] = acc;
      }
  return y;
}

Tensor upsample_bilinear(const Tensor& x, int n) {
  check_image(x, "upsample_bilinear");
  if (n < 1) throw ParamError("upsample_bilinear: factor must be >= 1");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int ho = n * h, wo = n * w;
  Tensor y({c, ho, wo});
  for (int cc = 0; cc < c; ++cc)
    for (int oy = 0; oy < ho; ++oy) {
      // half-pixel centers, clamped at the borders
      const double sy = (oy + 0.5) / n - 0.5;
      const int y0 = static_cast<int>(std::floor(sy));
      const double fy = sy - y0;
      const int y0c = std::min(std::max(y0, 0), h - 1), y1c = std::min(std::max(y0 + 1, 0), h - 1);
      for (int ox = 0; ox < wo; ++ox) {
        const double sx = (ox + 0.5) / n - 0.5;
        const int x0 = static_cast<int>(std::floor(sx));
        const double fx = sx - x0;
        const int x0c = std::min(std::max(x0, 0), w - 1), x1c = std::min(std::max(x0 + 1, 0), w - 1);
        const double* p = x.ptr() + static_cast<std::int64_t>(cc) * h * w;
        const double v = (1 - fy) * ((1 - fx) * p[static_cast<std::int64_t>(y0c) * w + x0c] + fx * p[static_cast<std::int64_t>(y0c) * w + x1c]) +
                         fy * ((1 - fx) * p[static_cast<std::int64_t>(y1c) * w + x0c] + fx * p[static_cast<std::int64_t>(y1c) * w + x1c]);
        y[(static_cast<std::int64_t>(cc) * ho + oy) * wo + ox] = v;
      }
    }
  return y;
}

Tensor reflect_pad_br(const Tensor& x, int pad_bottom, int pad_right) {
  check_image(x, "reflect_pad_br");
  if (pad_bottom < 0 || pad_right < 0) throw ParamError("reflect_pad_br: negative padding");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (pad_bottom >= h || pad_right >= w)
    throw ParamError("reflect_pad_br: padding must be smaller than the image");
  if (pad_bottom == 0 && pad_right == 0) return x;
  const int ho = h + pad_bottom, wo = w + pad_right;
  Tensor y({c, ho, wo});
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < ho; ++yy) {
      const int sy = yy < h ? yy : 2 * h - 2 - yy;
      const double* src = x.ptr() + (static_cast<std::int64_t>(cc) * h + sy) * w;
      double* dst = y.ptr() + (static_cast<std::int64_t>(cc) * ho + yy) * wo;
      for (int xx = 0; xx < wo; ++xx) dst[xx] = src[xx < w ? xx : 2 * w - 2 - xx];
    }
  return y;
}

Tensor crop_tl(const Tensor& x, int h, int w) {
  check_image(x, "crop_tl");
  if (h > x.dim(1) || w > x.dim(2)) throw ParamError("crop_tl: crop larger than input");
  if (h == x.dim(1) && w == x.dim(2)) return x;
  const int c = x.dim(0);
  Tensor y({c, h, w});
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        y[(static_cast<std::int64_t>(cc) * h + yy) * w + xx] =
            x[(static_cast<std::int64_t>(cc) * x.dim(1) + yy) * x.dim(2) + xx];
  return y;
}

Tensor transpose_hw(const Tensor& x) {
  check_image(x, "transpose_hw");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, w, h});
  for (int cc = 0; cc < c; ++cc)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        y[(static_cast<std::int64_t>(cc) * w + xx) * h + yy] = x[(static_cast<std::int64_t>(cc) * h + yy) * w + xx];
  return y;
}

double sum(const Tensor& x) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < x.numel(); ++i) acc += x[i];
  return acc;
}

void linear_dgrad(const Tensor& dy, const Tensor& w, Tensor& dx) {
  const int cout = w.dim(0), cin = w.dim(1);
  const std::int64_t m = leading_rows(dy);
  if (parallel_worthwhile(m * cout * cin))
    kernels::linear_dgrad_parallel(dy.ptr(), w.ptr(), dx.ptr(), m, cin, cout);
  else
    kernels::linear_dgrad_serial(dy.ptr(), w.ptr(), dx.ptr(), m, cin, cout);
}

void linear_wgrad(const Tensor& dy, const Tensor& x, Tensor& dw, Tensor* db) {
  const int cout = dw.dim(0), cin = dw.dim(1);
  const std::int64_t m = leading_rows(dy);
  if (parallel_worthwhile(m * cout * cin))
    kernels::linear_wgrad_parallel(dy.ptr(), x.ptr(), dw.ptr(), db ? db->ptr() : nullptr, m, cin, cout);
  else
    kernels::linear_wgrad_serial(dy.ptr(), x.ptr(), dw.ptr(), db ? db->ptr() : nullptr, m, cin, cout);
}

void conv2d_dgrad(const Tensor& dy, const Tensor& w, Tensor& dx, int stride, int pad, int groups) {
  auto d = conv_dims(dx, w, stride, pad, groups);
  const std::int64_t work = dx.numel() * d.kh * d.kw * (d.cout / d.groups);
  if (parallel_worthwhile(work))
    kernels::conv2d_dgrad_parallel(dy.ptr(), w.ptr(), dx.ptr(), d);
  else
    kernels::conv2d_dgrad_serial(dy.ptr(), w.ptr(), dx.ptr(), d);
}

void conv2d_wgrad(const Tensor& dy, const Tensor& x, Tensor& dw, Tensor* db, int stride, int pad, int groups) {
  auto d = conv_dims(x, dw, stride, pad, groups);
  const std::int64_t work = dy.numel() * d.kh * d.kw * (d.cin / d.groups);
  if (parallel_worthwhile(work))
    kernels::conv2d_wgrad_parallel(dy.ptr(), x.ptr(), dw.ptr(), db ? db->ptr() : nullptr, d);
  else
    kernels::conv2d_wgrad_serial(dy.ptr(), x.ptr(), dw.ptr(), db ? db->ptr() : nullptr, d);
}

void layernorm_xgrad(const Tensor& dy, const Tensor& x, const Tensor& gamma, Tensor& dx, double eps) {
  const int c = x.shape.back();
  const std::int64_t m = leading_rows(x);
  if (parallel_worthwhile(x.numel()))
    kernels::layernorm_xgrad_parallel(dy.ptr(), x.ptr(), gamma.ptr(), dx.ptr(), m, c, eps);
  else
    kernels::layernorm_xgrad_serial(dy.ptr(), x.ptr(), gamma.ptr(), dx.ptr(), m, c, eps);
}

void layernorm_agrad(const Tensor& dy, const Tensor& x, Tensor& dgamma, Tensor& dbeta, double eps) {
  const int c = x.shape.back();
  const std::int64_t m = leading_rows(x);
  if (parallel_worthwhile(x.numel()))
    kernels::layernorm_agrad_parallel(dy.ptr(), x.ptr(), dgamma.ptr(), dbeta.ptr(), m, c, eps);
  else
    kernels::layernorm_agrad_serial(dy.ptr(), x.ptr(), dgamma.ptr(), dbeta.ptr(), m, c, eps);
}

void silu_bwd(const Tensor& dy, const Tensor& x, Tensor& dx) {
  if (parallel_worthwhile(x.numel()))
    kernels::silu_bwd_parallel(dy.ptr(), x.ptr(), dx.ptr(), x.numel());
  else
    kernels::silu_bwd_serial(dy.ptr(), x.ptr(), dx.ptr(), x.numel());
}

void softplus_bwd(const Tensor& dy, const Tensor& x, Tensor& dx) {
  if (parallel_worthwhile(x.numel()))
    kernels::softplus_bwd_parallel(dy.ptr(), x.ptr(), dx.ptr(), x.numel());
  else
    kernels::softplus_bwd_serial(dy.ptr(), x.ptr(), dx.ptr(), x.numel());
}

}  // namespace himamba::ops
