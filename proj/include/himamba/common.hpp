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
#include <random>
#include <stdexcept>
#include <string>

namespace himamba {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mismatched tensor dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid op parameter (stride, padding, nonpositive delta, ...).
class ParamError : public Error {
 public:
  using Error::Error;
};

// Malformed weight file / config document.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Bad user input (empty dataset, undersized image, unreadable file).
class InputError : public Error {
 public:
  using Error::Error;
};

// API misuse (e.g. backward from a non-scalar loss).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

// Maximum number of worker threads kernels may use. Resolved once from
// HIMAMBA_THREADS (clamped to the hardware count) and overridable at runtime.
int thread_cap();
void set_thread_cap(int n);

// Parallel kernels are only worth dispatching above a minimum work size.
inline bool parallel_worthwhile(std::int64_t work_elems) {
  return thread_cap() > 1 && work_elems >= 4096;
}

// Deterministic RNG. mt19937_64 is bit-reproducible across platforms and the
// uniform mapping below avoids the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int below(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace himamba
