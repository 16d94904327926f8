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

#include <doctest.h>

#include <cmath>

#include "himamba/ops.hpp"
#include "himamba/scan.hpp"

using namespace himamba;

namespace {

SelectiveParams time_invariant_params(Rng& rng, int len, int d, int n) {
  SelectiveParams p;
  p.a_log = Tensor::uniform(rng, {d, n}, std::log(0.05), std::log(2.0));
  p.d_skip = Tensor::uniform(rng, {d}, -1, 1);
  Tensor dt = Tensor::uniform(rng, {d}, 0.05, 1.0);
  Tensor bc = Tensor::uniform(rng, {n}, -1, 1);
  Tensor cc = Tensor::uniform(rng, {n}, -1, 1);
  p.delta = Tensor({len, d});
  p.b_seq = Tensor({len, n});
  p.c_seq = Tensor({len, n});
  for (int k = 0; k < len; ++k) {
    for (int j = 0; j < d; ++j) p.delta[static_cast<std::int64_t>(k) * d + j] = dt[j];
    for (int j = 0; j < n; ++j) {
      p.b_seq[static_cast<std::int64_t>(k) * n + j] = bc[j];
      p.c_seq[static_cast<std::int64_t>(k) * n + j] = cc[j];
    }
  }
  return p;
}

}  // namespace

TEST_CASE("discretize_zoh: closed form, limits, series") {
  // a=-1, delta=ln 2 -> a_bar = 0.5, b_bar = 0.5
  const auto [ab, bb] = discretize_zoh(std::log(2.0), -1.0, 1.0);
  CHECK(ab == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(bb == doctest::Approx(0.5).epsilon(1e-14));

  // delta -> 0: a_bar -> 1, b_bar -> 0
  const auto [ab0, bb0] = discretize_zoh(1e-12, -1.0, 3.0);
  CHECK(ab0 == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(std::fabs(bb0) < 1e-11);

  // series regime: b_bar == delta*b within 1e-9 relative
  const double delta = 1e-10, b = 2.0;
  const auto [ab1, bb1] = discretize_zoh(delta, -1.0, b);
  (void)ab1;
  CHECK(std::fabs(bb1 - delta * b) / (delta * b) < 1e-9);

  CHECK_THROWS_AS(discretize_zoh(0.0, -1.0, 1.0), ParamError);
  CHECK_THROWS_AS(discretize_zoh(-0.5, -1.0, 1.0), ParamError);
}

TEST_CASE("selective_scan: single step and zero input") {
  Rng rng(11);
  const int d = 2, n = 3;
  SelectiveParams p = time_invariant_params(rng, 1, d, n);
  Tensor u = Tensor::uniform(rng, {1, d}, -1, 1);
  Tensor y = selective_scan(u, p);
  // y_1 = <c_1, b_bar_1> u_1 + d_skip u_1
  for (int j = 0; j < d; ++j) {
    double dot = 0.0;
    for (int s = 0; s < n; ++s) {
      const double a = -std::exp(p.a_log[static_cast<std::int64_t>(j) * n + s]);
      const auto [abar, bbar] = discretize_zoh(p.delta[j], a, p.b_seq[s]);
      (void)abar;
      dot += p.c_seq[s] * bbar;
    }
    CHECK(y[j] == doctest::Approx((dot + p.d_skip[j]) * u[j]).epsilon(1e-13));
  }

  SelectiveParams pz = time_invariant_params(rng, 5, d, n);
  Tensor uz = Tensor::zeros({5, d});
  Tensor yz = selective_scan(uz, pz);
  for (std::int64_t i = 0; i < yz.numel(); ++i) CHECK(yz[i] == 0.0);
}

TEST_CASE("selective_scan: shape and delta validation") {
  SelectiveParams p;
  p.a_log = Tensor({2, 3});
  p.delta = Tensor::full({4, 2}, 0.5);
  p.b_seq = Tensor({4, 3});
  p.c_seq = Tensor({4, 3});
  p.d_skip = Tensor({2});
  CHECK_NOTHROW(selective_scan(Tensor({4, 2}), p));
  CHECK_THROWS_AS(selective_scan(Tensor({4, 3}), p), ShapeError);
  p.delta[3] = 0.0;
  CHECK_THROWS_AS(selective_scan(Tensor({4, 2}), p), ParamError);
}

TEST_CASE("lti_kernel: geometric sequence and zero c") {
  Tensor abar({1}, {0.5});
  Tensor bbar({1}, {1.0});
  Tensor c({1}, {1.0});
  Tensor k = lti_kernel(abar, bbar, c, 3);
  CHECK(k[0] == 1.0);
  CHECK(k[1] == 0.5);
  CHECK(k[2] == 0.25);

  Tensor k1 = lti_kernel(abar, bbar, c, 1);
  CHECK(k1.numel() == 1);
  CHECK(k1[0] == 1.0);

  Tensor c0 = Tensor::zeros({1});
  Tensor kz = lti_kernel(abar, bbar, c0, 4);
  for (int i = 0; i < 4; ++i) CHECK(kz[i] == 0.0);
}

TEST_CASE("lti_apply: impulse identities and brute-force oracle") {
  Rng rng(12);
  const int len = 16;
  Tensor u = Tensor::uniform(rng, {len}, -1, 1);
  Tensor kern = Tensor::zeros({len});
  kern[0] = 1.0;
  CHECK(bit_equal(lti_apply(u, kern, 0.0), u));

  Tensor imp = Tensor::zeros({len});
  imp[0] = 1.0;
  Tensor kr = Tensor::uniform(rng, {len}, -1, 1);
  CHECK(bit_equal(lti_apply(imp, kr, 0.0), kr));

  // independent double-loop convolution
  const double dskip = 0.3;
  Tensor got = lti_apply(u, kr, dskip);
  for (int k = 0; k < len; ++k) {
    double want = dskip * u[k];
    for (int j = 0; j <= k; ++j) want += kr[j] * u[k - j];
    CHECK(got[k] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("recurrence equals kernel route for time-invariant parameters") {
  Rng rng(13);
  const int len = 8, d = 2, n = 4;
  SelectiveParams p = time_invariant_params(rng, len, d, n);
  Tensor u = Tensor::uniform(rng, {len, d}, -1, 1);
  Tensor y = selective_scan(u, p);
  for (int j = 0; j < d; ++j) {
    Tensor abar({n}), bbar({n}), c({n});
    for (int s = 0; s < n; ++s) {
      const double a = -std::exp(p.a_log[static_cast<std::int64_t>(j) * n + s]);
      const auto dz = discretize_zoh(p.delta[j], a, p.b_seq[s]);
      abar[s] = dz.a_bar;
      bbar[s] = dz.b_bar;
      c[s] = p.c_seq[s];
    }
    Tensor uj({len});
    for (int k = 0; k < len; ++k) uj[k] = u[static_cast<std::int64_t>(k) * d + j];
    Tensor yl = lti_apply(uj, lti_kernel(abar, bbar, c, len), p.d_skip[j]);
    for (int k = 0; k < len; ++k)
      CHECK(std::fabs(y[static_cast<std::int64_t>(k) * d + j] - yl[k]) <= 1e-12 * std::max(1.0, std::fabs(yl[k])));
  }
}

TEST_CASE("selective_params_from_input: softplus floor and constants") {
  Rng rng(14);
  const int len = 5, d = 3, n = 2;
  Tensor w_delta = Tensor::uniform(rng, {d, d}, -1, 1);
  Tensor b_delta = Tensor::uniform(rng, {d}, -1, 1);
  Tensor w_b = Tensor::uniform(rng, {n, d}, -1, 1);
  Tensor w_c = Tensor::uniform(rng, {n, d}, -1, 1);
  Tensor a_log = Tensor::uniform(rng, {d, n}, -1, 0);
  Tensor d_skip = Tensor::uniform(rng, {d}, -1, 1);

  // zero input -> delta = softplus(b_delta) everywhere
  Tensor x0 = Tensor::zeros({len, d});
  auto p0 = selective_params_from_input(x0, w_delta, b_delta, w_b, w_c, a_log, d_skip);
  for (int k = 0; k < len; ++k)
    for (int j = 0; j < d; ++j)
      CHECK(p0.delta[static_cast<std::int64_t>(k) * d + j] ==
            doctest::Approx(std::log1p(std::exp(b_delta[j]))).epsilon(1e-12));

  // zero bias and zero projection -> delta = ln 2
  Tensor wz = Tensor::zeros({d, d});
  Tensor bz = Tensor::zeros({d});
  auto p1 = selective_params_from_input(Tensor::uniform(rng, {len, d}, -1, 1), wz, bz, w_b, w_c, a_log, d_skip);
  for (std::int64_t i = 0; i < p1.delta.numel(); ++i)
    CHECK(p1.delta[i] == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // delta > 0 for any finite input
  auto p2 = selective_params_from_input(Tensor::uniform(rng, {len, d}, -50, 50), w_delta, b_delta, w_b,
                                        w_c, a_log, d_skip);
  for (std::int64_t i = 0; i < p2.delta.numel(); ++i) CHECK(p2.delta[i] > 0.0);
}

TEST_CASE("flatten_direction: definitional orders") {
  // 2x2 grid, 1 channel, positions H -> [(0,0),(0,1),(1,0),(1,1)]
  Tensor x({1, 2, 2}, {0, 1, 2, 3});
  Tensor h = flatten_direction(x, DirectionOrder::H);
  CHECK(h[0] == 0.0);
  CHECK(h[1] == 1.0);
  CHECK(h[2] == 2.0);
  CHECK(h[3] == 3.0);
  Tensor v = flatten_direction(x, DirectionOrder::V);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 2.0);
  CHECK(v[2] == 1.0);
  CHECK(v[3] == 3.0);

  Rng rng(15);
  Tensor r = Tensor::uniform(rng, {3, 4, 5}, -1, 1);
  Tensor rh = flatten_direction(r, DirectionOrder::RH);
  Tensor hh = flatten_direction(r, DirectionOrder::H);
  const std::int64_t len = 20;
  for (std::int64_t k = 0; k < len; ++k)
    for (int c = 0; c < 3; ++c) CHECK(rh[k * 3 + c] == hh[(len - 1 - k) * 3 + c]);

  CHECK(bit_equal(flatten_direction(r, DirectionOrder::V),
                  flatten_direction(ops::transpose_hw(r), DirectionOrder::H)));
}

TEST_CASE("scan causality: a perturbation cannot reach earlier outputs") {
  Rng rng(16);
  const int len = 12, d = 2, n = 3;
  SelectiveParams p = time_invariant_params(rng, len, d, n);
  Tensor u = Tensor::uniform(rng, {len, d}, -1, 1);
  Tensor y0 = selective_scan(u, p);
  const int kp = 5;
  Tensor u2 = u;
  u2[static_cast<std::int64_t>(kp) * d + 0] += 1.0;
  Tensor y1 = selective_scan(u2, p);
  for (int k = 0; k < kp; ++k)
    for (int j = 0; j < d; ++j)
      CHECK(y0[static_cast<std::int64_t>(k) * d + j] == y1[static_cast<std::int64_t>(k) * d + j]);
  CHECK(y0[static_cast<std::int64_t>(kp) * d + 0] != y1[static_cast<std::int64_t>(kp) * d + 0]);
}

TEST_CASE("scan is linear in the input for frozen parameters") {
  Rng rng(17);
  const int len = 10, d = 3, n = 4;
  SelectiveParams p = time_invariant_params(rng, len, d, n);
  Tensor u1 = Tensor::uniform(rng, {len, d}, -1, 1);
  Tensor u2 = Tensor::uniform(rng, {len, d}, -1, 1);
  const double a = 0.6, b = -1.7;
  Tensor lhs = selective_scan(ops::add(ops::scale(u1, a), ops::scale(u2, b)), p);
  Tensor rhs = ops::add(ops::scale(selective_scan(u1, p), a), ops::scale(selective_scan(u2, p), b));
  CHECK(max_rel_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("chunked scan is bit-identical to the sequential path") {
  Rng rng(19);
  const int len = 23, d = 3, n = 4;
  SelectiveParams p = time_invariant_params(rng, len, d, n);
  // make the parameters genuinely time-varying
  p.delta = Tensor::uniform(rng, {len, d}, 0.05, 1.0);
  p.b_seq = Tensor::uniform(rng, {len, n}, -1, 1);
  p.c_seq = Tensor::uniform(rng, {len, n}, -1, 1);
  Tensor u = Tensor::uniform(rng, {len, d}, -1, 1);
  const Tensor want = selective_scan(u, p);
  for (int chunk : {1, 4, 7, 23, 100}) CHECK(bit_equal(selective_scan_chunked(u, p, chunk), want));
  CHECK_THROWS_AS(selective_scan_chunked(u, p, 0), ParamError);
}

TEST_CASE("saved-state scan matches the plain scan bit for bit") {
  Rng rng(18);
  const int len = 9, d = 2, n = 3;
  SelectiveParams p = time_invariant_params(rng, len, d, n);
  Tensor u = Tensor::uniform(rng, {len, d}, -1, 1);
  ScanSaved saved;
  CHECK(bit_equal(selective_scan_saved(u, p, saved), selective_scan(u, p)));
  CHECK(saved.h.shape == std::vector<int>{len, d, n});
}
