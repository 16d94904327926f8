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

#include "himamba/metrics.hpp"

#include <cmath>
#include <vector>

namespace himamba {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

struct PlaneView {
  const double* p;
  int h, w;
};

std::vector<PlaneView> shaved_planes(const Tensor& t, int shave, const char* what) {
  if (t.rank() != 2 && t.rank() != 3) throw ShapeError(std::string(what) + ": expected [H,W] or [C,H,W]");
  const int c = t.rank() == 3 ? t.dim(0) : 1;
  const int h = t.rank() == 3 ? t.dim(1) : t.dim(0);
  const int w = t.rank() == 3 ? t.dim(2) : t.dim(1);
  if (shave < 0 || h - 2 * shave < 1 || w - 2 * shave < 1)
    throw ParamError(std::string(what) + ": shave leaves no pixels");
  std::vector<PlaneView> planes;
  for (int cc = 0; cc < c; ++cc)
    planes.push_back({t.ptr() + static_cast<std::int64_t>(cc) * h * w, h, w});
  (void)shave;
  return planes;
}

const std::vector<double>& gaussian_window() {
  static const std::vector<double> win = [] {
    std::vector<double> w1(kWindow);
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - (kWindow - 1) / 2.0;
      w1[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      total += w1[static_cast<std::size_t>(i)];
    }
    std::vector<double> w2(static_cast<std::size_t>(kWindow) * kWindow);
    for (int i = 0; i < kWindow; ++i)
      for (int j = 0; j < kWindow; ++j)
        w2[static_cast<std::size_t>(i) * kWindow + j] =
            (w1[static_cast<std::size_t>(i)] / total) * (w1[static_cast<std::size_t>(j)] / total);
    return w2;
  }();
  return win;
}

}  // namespace

double psnr(const Tensor& a, const Tensor& b, int shave) {
  if (!a.same_shape(b)) throw ShapeError("psnr: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  const auto pa = shaved_planes(a, shave, "psnr");
  const auto pb = shaved_planes(b, shave, "psnr");
  double sq = 0.0;
  std::int64_t count = 0;
  for (std::size_t c = 0; c < pa.size(); ++c) {
    const int h = pa[c].h, w = pa[c].w;
    for (int y = shave; y < h - shave; ++y)
      for (int x = shave; x < w - shave; ++x) {
        const double d = pa[c].p[static_cast<std::int64_t>(y) * w + x] - pb[c].p[static_cast<std::int64_t>(y) * w + x];
        sq += d * d;
        ++count;
      }
  }
  const double mse = sq / static_cast<double>(count);
  if (mse == 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Tensor& a, const Tensor& b, int shave) {
  if (!a.same_shape(b)) throw ShapeError("ssim: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  const auto pa = shaved_planes(a, shave, "ssim");
  const auto pb = shaved_planes(b, shave, "ssim");
  const auto& win = gaussian_window();
  constexpr double c1 = kK1 * kK1;  // (K1*L)^2 with L = 1
  constexpr double c2 = kK2 * kK2;

  double total = 0.0;
  for (std::size_t c = 0; c < pa.size(); ++c) {
    const int h = pa[c].h, w = pa[c].w;
    const int y0 = shave, y1 = h - shave - kWindow + 1;
    const int x0 = shave, x1 = w - shave - kWindow + 1;
    if (y1 <= y0 || x1 <= x0) throw ParamError("ssim: shaved plane smaller than the 11x11 window");
    double acc = 0.0;
    std::int64_t count = 0;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
        for (int i = 0; i < kWindow; ++i)
          for (int j = 0; j < kWindow; ++j) {
            const double wgt = win[static_cast<std::size_t>(i) * kWindow + j];
            const double va = pa[c].p[static_cast<std::int64_t>(y + i) * w + (x + j)];
            const double vb = pb[c].p[static_cast<std::int64_t>(y + i) * w + (x + j)];
            mu_a += wgt * va;
            mu_b += wgt * vb;
            aa += wgt * va * va;
            bb += wgt * vb * vb;
            ab += wgt * va * vb;
          }
        const double var_a = aa - mu_a * mu_a;
        const double var_b = bb - mu_b * mu_b;
        const double cov = ab - mu_a * mu_b;
        const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
        const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
        acc += num / den;
        ++count;
      }
    total += acc / static_cast<double>(count);
  }
  return total / static_cast<double>(pa.size());
}

}  // namespace himamba
