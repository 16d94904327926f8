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

// Release gate: one line per criterion, nonzero exit on any failure.

#include <cstdio>

#include "himamba/verify.hpp"

int main() {
  using himamba::verify::run_check;

  struct Criterion {
    int number;
    const char* check;
    const char* label;
    double time_limit_s;  // 0 = unlimited
  };
  const Criterion criteria[] = {
      {1, "scan_oracle", "selective scan matches the LTI kernel route (1e-12)", 5.0},
      {2, "gradients", "finite-difference gradient checks (1e-5)", 120.0},
      {3, "cost_neutrality", "direction alternation is cost-neutral", 0.0},
      {4, "residual_identity", "zeroed deep path is the exact identity", 0.0},
      {5, "direction_bijections", "direction bijections and reversal identities", 0.0},
      {6, "toy_training", "toy training beats the bicubic baseline", 1200.0},
      {7, "metrics_sanity", "PSNR/SSIM/self-ensemble sanity", 0.0},
      {8, "serialization", "weight files round-trip byte-exactly", 0.0},
      {9, "thread_determinism", "forward is bit-identical across thread caps", 0.0},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    himamba::verify::CheckResult r;
    try {
      r = run_check(c.check);
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    bool in_time = c.time_limit_s == 0.0 || r.seconds <= c.time_limit_s;
    const bool pass = r.pass && in_time;
    std::printf("[%s] criterion %d: %s (%.1fs%s) -- %s\n", pass ? "PASS" : "FAIL", c.number, c.label,
                r.seconds, in_time ? "" : ", OVER TIME LIMIT", r.detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  else std::printf("all 9 acceptance criteria passed\n");
  return failures == 0 ? 0 : 1;
}
