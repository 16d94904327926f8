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

#include "himamba/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace himamba {

namespace {

int resolve_initial_cap() {
#ifdef _OPENMP
  int hw = omp_get_max_threads();
#else
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
#endif
  if (const char* env = std::getenv("HIMAMBA_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) hw = std::min<long>(v, hw) > 0 ? static_cast<int>(std::min<long>(v, hw)) : 1;
  }
  return std::max(hw, 1);
}

std::atomic<int>& cap_storage() {
  static std::atomic<int> cap{resolve_initial_cap()};
  return cap;
}

}  // namespace

int thread_cap() { return cap_storage().load(std::memory_order_relaxed); }

void set_thread_cap(int n) { cap_storage().store(std::max(n, 1), std::memory_order_relaxed); }

std::int64_t numel_of(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::int64_t Tensor::checked_numel(const std::vector<int>& s) {
  std::int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw ShapeError("tensor dims must be positive, got " + shape_str(s));
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (checked_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw ShapeError("tensor data size " + std::to_string(data.size()) + " does not match shape " + shape_str(shape));
}

Tensor Tensor::full(std::vector<int> s, double v) {
  Tensor t(std::move(s));
  t.fill(v);
  return t;
}

Tensor Tensor::uniform(Rng& rng, std::vector<int> s, double lo, double hi) {
  Tensor t(std::move(s));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    // bit comparison, not value comparison: distinguishes -0.0 and NaNs
    if (std::memcmp(&a.data[i], &b.data[i], sizeof(double)) != 0) return false;
  }
  return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw ShapeError("max_abs_diff: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

double max_rel_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw ShapeError("max_rel_diff: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double denom = std::max(1.0, std::fabs(b.data[i]));
    m = std::max(m, std::fabs(a.data[i] - b.data[i]) / denom);
  }
  return m;
}

void require_shape(const Tensor& t, const std::vector<int>& shape, const char* what) {
  if (t.shape != shape)
    throw ShapeError(std::string(what) + ": expected shape " + shape_str(shape) + ", got " + shape_str(t.shape));
}

}  // namespace himamba
