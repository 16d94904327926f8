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

// Serial reference vs OpenMP kernels, plus a whole-model forward.

#include <benchmark/benchmark.h>

#include "himamba/kernels.hpp"
#include "himamba/network.hpp"
#include "himamba/ops.hpp"

using namespace himamba;

namespace {

void bm_conv2d_serial(benchmark::State& state) {
  Rng rng(1);
  Tensor x = Tensor::uniform(rng, {32, 96, 96}, -1, 1);
  Tensor w = Tensor::uniform(rng, {32, 32, 3, 3}, -1, 1);
  kernels::ConvDims d;
  d.cin = 32; d.hin = 96; d.win = 96; d.cout = 32; d.kh = 3; d.kw = 3; d.stride = 1; d.pad = 1; d.groups = 1;
  Tensor y({32, 96, 96});
  for (auto _ : state) {
    kernels::conv2d_fwd_serial(x.ptr(), w.ptr(), nullptr, y.ptr(), d);
    benchmark::DoNotOptimize(y.ptr());
  }
}

void bm_conv2d_parallel(benchmark::State& state) {
  Rng rng(1);
  Tensor x = Tensor::uniform(rng, {32, 96, 96}, -1, 1);
  Tensor w = Tensor::uniform(rng, {32, 32, 3, 3}, -1, 1);
  kernels::ConvDims d;
  d.cin = 32; d.hin = 96; d.win = 96; d.cout = 32; d.kh = 3; d.kw = 3; d.stride = 1; d.pad = 1; d.groups = 1;
  Tensor y({32, 96, 96});
  for (auto _ : state) {
    kernels::conv2d_fwd_parallel(x.ptr(), w.ptr(), nullptr, y.ptr(), d);
    benchmark::DoNotOptimize(y.ptr());
  }
}

void bm_linear_serial(benchmark::State& state) {
  Rng rng(2);
  const int m = 4096, cin = 64, cout = 64;
  Tensor x = Tensor::uniform(rng, {m, cin}, -1, 1);
  Tensor w = Tensor::uniform(rng, {cout, cin}, -1, 1);
  Tensor y({m, cout});
  for (auto _ : state) {
    kernels::linear_fwd_serial(x.ptr(), w.ptr(), nullptr, y.ptr(), m, cin, cout);
    benchmark::DoNotOptimize(y.ptr());
  }
}

void bm_linear_parallel(benchmark::State& state) {
  Rng rng(2);
  const int m = 4096, cin = 64, cout = 64;
  Tensor x = Tensor::uniform(rng, {m, cin}, -1, 1);
  Tensor w = Tensor::uniform(rng, {cout, cin}, -1, 1);
  Tensor y({m, cout});
  for (auto _ : state) {
    kernels::linear_fwd_parallel(x.ptr(), w.ptr(), nullptr, y.ptr(), m, cin, cout);
    benchmark::DoNotOptimize(y.ptr());
  }
}

SelectiveParams scan_params(int len, int d, int n) {
  Rng rng(3);
  SelectiveParams p;
  p.a_log = Tensor::uniform(rng, {d, n}, -2, 0.5);
  p.delta = Tensor::uniform(rng, {len, d}, 0.05, 1.0);
  p.b_seq = Tensor::uniform(rng, {len, n}, -1, 1);
  p.c_seq = Tensor::uniform(rng, {len, n}, -1, 1);
  p.d_skip = Tensor::uniform(rng, {d}, -1, 1);
  return p;
}

void bm_scan_serial(benchmark::State& state) {
  const int len = 4096, d = 32, n = 8;
  SelectiveParams p = scan_params(len, d, n);
  Rng rng(4);
  Tensor u = Tensor::uniform(rng, {len, d}, -1, 1);
  kernels::ScanDims sd;
  sd.len = len; sd.channels = d; sd.state = n;
  Tensor y({len, d});
  for (auto _ : state) {
    kernels::scan_fwd_serial(sd, u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(), p.c_seq.ptr(),
                             p.d_skip.ptr(), y.ptr(), nullptr, nullptr, nullptr);
    benchmark::DoNotOptimize(y.ptr());
  }
}

void bm_scan_parallel(benchmark::State& state) {
  const int len = 4096, d = 32, n = 8;
  SelectiveParams p = scan_params(len, d, n);
  Rng rng(4);
  Tensor u = Tensor::uniform(rng, {len, d}, -1, 1);
  kernels::ScanDims sd;
  sd.len = len; sd.channels = d; sd.state = n;
  Tensor y({len, d});
  for (auto _ : state) {
    kernels::scan_fwd_parallel(sd, u.ptr(), p.a_log.ptr(), p.delta.ptr(), p.b_seq.ptr(), p.c_seq.ptr(),
                               p.d_skip.ptr(), y.ptr(), nullptr, nullptr, nullptr);
    benchmark::DoNotOptimize(y.ptr());
  }
}

void bm_model_forward(benchmark::State& state) {
  const HiMambaConfig cfg = HiMambaConfig::tiny(2);
  ModelWeights w = make_weights(cfg);
  init_random(w, 5);
  Rng rng(6);
  Tensor img = Tensor::uniform(rng, {3, 64, 64}, 0, 1);
  set_thread_cap(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    Tensor out = himamba_forward(img, w);
    benchmark::DoNotOptimize(out.ptr());
  }
}

}  // namespace

BENCHMARK(bm_conv2d_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_conv2d_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_linear_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_linear_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_scan_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_scan_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_model_forward)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
