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

#include "himamba/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

#include "himamba/ops.hpp"

namespace himamba {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw InputError("cannot open image: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw InternalError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw InternalError("png_create_info_struct failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw InputError("failed to decode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t row_bytes = png_get_rowbytes(png, info);
  pixels.resize(row_bytes * h);
  row_ptrs.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = pixels.data() + y * row_bytes;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img;
  img.chw = Tensor({3, static_cast<int>(h), static_cast<int>(w)});
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  for (png_uint_32 y = 0; y < h; ++y)
    for (png_uint_32 x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.chw[c * hw + static_cast<std::int64_t>(y) * w + x] =
            pixels[y * row_bytes + 3 * x + static_cast<std::size_t>(c)] / 255.0;
  return img;
}

void save_png(const Image& img, const std::string& path) {
  if (img.chw.rank() != 3 || img.chw.dim(0) != 3)
    throw ShapeError("save_png: expected [3,H,W], got " + shape_str(img.chw.shape));
  const int h = img.height(), w = img.width();
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;

  std::vector<png_byte> pixels(static_cast<std::size_t>(3) * hw);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = img.chw[c * hw + static_cast<std::int64_t>(y) * w + x];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        // round half away from zero
        pixels[(static_cast<std::size_t>(y) * w + x) * 3 + static_cast<std::size_t>(c)] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw InputError("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw InternalError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw InternalError("png_create_info_struct failed");
  }
  std::vector<png_bytep> row_ptrs(static_cast<std::size_t>(h));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("failed to encode PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  for (int y = 0; y < h; ++y) row_ptrs[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
  png_set_rows(png, info, row_ptrs.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor rgb_to_y(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3)
    throw ShapeError("rgb_to_y: expected [3,H,W], got " + shape_str(rgb.shape));
  const int h = rgb.dim(1), w = rgb.dim(2);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  Tensor y({1, h, w});
  for (std::int64_t i = 0; i < hw; ++i)
    y[i] = (16.0 + 65.481 * rgb[i] + 128.553 * rgb[hw + i] + 24.966 * rgb[2 * hw + i]) / 255.0;
  return y;
}

double bicubic_weight(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

namespace {

struct ResampleTap {
  int first;                   // first source index (clamped later)
  std::vector<double> weight;  // normalized
};

// One axis of taps: out_i samples around (i + 0.5) * in/out - 0.5. On
// downscale the kernel is stretched by in/out so it spans the footprint.
std::vector<ResampleTap> make_taps(int in, int out) {
  const double step = static_cast<double>(in) / out;
  const double support_scale = step > 1.0 ? step : 1.0;
  const double radius = 2.0 * support_scale;
  std::vector<ResampleTap> taps(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) * step - 0.5;
    const int first = static_cast<int>(std::ceil(center - radius));
    const int last = static_cast<int>(std::floor(center + radius));
    auto& tap = taps[static_cast<std::size_t>(i)];
    tap.first = first;
    tap.weight.resize(static_cast<std::size_t>(last - first + 1));
    double total = 0.0;
    for (int s = first; s <= last; ++s) {
      const double wgt = bicubic_weight((s - center) / support_scale);
      tap.weight[static_cast<std::size_t>(s - first)] = wgt;
      total += wgt;
    }
    for (auto& wgt : tap.weight) wgt /= total;
  }
  return taps;
}

int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace

Tensor bicubic_resize(const Tensor& chw, int out_w, int out_h) {
  if (chw.rank() != 3) throw ShapeError("bicubic_resize: expected [C,H,W], got " + shape_str(chw.shape));
  if (out_w < 1 || out_h < 1) throw ParamError("bicubic_resize: target dims must be positive");
  const int c = chw.dim(0), in_h = chw.dim(1), in_w = chw.dim(2);
  if (out_w == in_w && out_h == in_h) return chw;

  const auto xtaps = make_taps(in_w, out_w);
  const auto ytaps = make_taps(in_h, out_h);

  // horizontal pass then vertical pass
  Tensor mid({c, in_h, out_w});
  for (int cc = 0; cc < c; ++cc) {
    const double* src = chw.ptr() + static_cast<std::int64_t>(cc) * in_h * in_w;
    double* dst = mid.ptr() + static_cast<std::int64_t>(cc) * in_h * out_w;
    for (int y = 0; y < in_h; ++y)
      for (int x = 0; x < out_w; ++x) {
        const auto& tap = xtaps[static_cast<std::size_t>(x)];
        double acc = 0.0;
        for (std::size_t j = 0; j < tap.weight.size(); ++j)
          acc += tap.weight[j] * src[static_cast<std::int64_t>(y) * in_w + clamp_index(tap.first + static_cast<int>(j), in_w)];
        dst[static_cast<std::int64_t>(y) * out_w + x] = acc;
      }
  }
  Tensor out({c, out_h, out_w});
  for (int cc = 0; cc < c; ++cc) {
    const double* src = mid.ptr() + static_cast<std::int64_t>(cc) * in_h * out_w;
    double* dst = out.ptr() + static_cast<std::int64_t>(cc) * out_h * out_w;
    for (int y = 0; y < out_h; ++y) {
      const auto& tap = ytaps[static_cast<std::size_t>(y)];
      for (int x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < tap.weight.size(); ++j)
          acc += tap.weight[j] * src[static_cast<std::int64_t>(clamp_index(tap.first + static_cast<int>(j), in_h)) * out_w + x];
        dst[static_cast<std::int64_t>(y) * out_w + x] = acc;
      }
    }
  }
  return out;
}

namespace {

// counter-clockwise quarter turn: (y,x) -> (W-1-x, y)
Tensor rot90_ccw(const Tensor& t) {
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  Tensor out({c, w, h});
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[(static_cast<std::int64_t>(cc) * w + (w - 1 - x)) * h + y] =
            t[(static_cast<std::int64_t>(cc) * h + y) * w + x];
  return out;
}

Tensor flip_h(const Tensor& t) {
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  Tensor out(t.shape);
  for (int cc = 0; cc < c; ++cc)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[(static_cast<std::int64_t>(cc) * h + y) * w + (w - 1 - x)] =
            t[(static_cast<std::int64_t>(cc) * h + y) * w + x];
  return out;
}

}  // namespace

Tensor dihedral_apply(const Tensor& chw, int k) {
  if (chw.rank() != 3) throw ShapeError("dihedral_apply: expected [C,H,W]");
  if (k < 0 || k > 7) throw ParamError("dihedral_apply: index must be in [0,8)");
  Tensor t = (k & 4) ? flip_h(chw) : chw;
  for (int r = 0; r < (k & 3); ++r) t = rot90_ccw(t);
  return t;
}

Tensor dihedral_inverse(const Tensor& chw, int k) {
  if (chw.rank() != 3) throw ShapeError("dihedral_inverse: expected [C,H,W]");
  if (k < 0 || k > 7) throw ParamError("dihedral_inverse: index must be in [0,8)");
  Tensor t = chw;
  for (int r = 0; r < (4 - (k & 3)) % 4; ++r) t = rot90_ccw(t);
  return (k & 4) ? flip_h(t) : t;
}

}  // namespace himamba
