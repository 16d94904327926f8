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

#include "himamba/kernels.hpp"
#include "himamba/ops.hpp"

using namespace himamba;

TEST_CASE("linear: identity, bias-only and hand product") {
  // identity weights
  Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(bit_equal(ops::linear(x, eye, nullptr), x));

  // zero weights, bias only
  Tensor w0 = Tensor::zeros({2, 3});
  Tensor b({2}, {1, 2});
  Tensor y = ops::linear(x, w0, &b);
  CHECK(y.shape == std::vector<int>{2, 2});
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 1.0);
  CHECK(y[3] == 2.0);

  // x=(1,2), w=[[1,1],[2,-1]] -> (3,0)
  Tensor x2({2}, {1, 2});
  Tensor w2({2, 2}, {1, 1, 2, -1});
  Tensor y2 = ops::linear(x2, w2, nullptr);
  CHECK(y2[0] == 3.0);
  CHECK(y2[1] == 0.0);
}

TEST_CASE("linear: shape errors") {
  Tensor x({2, 3});
  Tensor w({2, 4});
  CHECK_THROWS_AS(ops::linear(x, w, nullptr), ShapeError);
  Tensor wok({2, 3});
  Tensor bbad({3});
  CHECK_THROWS_AS(ops::linear(x, wok, &bbad), ShapeError);
}

TEST_CASE("conv2d: 1x1 identity and delta kernel") {
  Rng rng(1);
  Tensor x = Tensor::uniform(rng, {2, 4, 5}, -1, 1);
  Tensor w1({2, 2, 1, 1}, {1, 0, 0, 1});
  CHECK(bit_equal(ops::conv2d(x, w1, nullptr, 1, 0, 1), x));

  // centered 3x3 delta with pad 1 is the identity on interior and border
  Tensor wd = Tensor::zeros({2, 2, 3, 3});
  wd[0 * 2 * 9 + 0 * 9 + 4] = 1.0;  // out 0 <- in 0
  wd[1 * 2 * 9 + 1 * 9 + 4] = 1.0;  // out 1 <- in 1
  CHECK(bit_equal(ops::conv2d(x, wd, nullptr, 1, 1, 1), x));
}

TEST_CASE("conv2d: 2x2 ones kernel stride 2 sums blocks") {
  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  Tensor w = Tensor::full({1, 1, 2, 2}, 1.0);
  Tensor y = ops::conv2d(x, w, nullptr, 2, 0, 1);
  CHECK(y.shape == std::vector<int>{1, 1, 1});
  CHECK(y[0] == 10.0);
}

TEST_CASE("conv2d: parameter errors") {
  Tensor x({2, 4, 4});
  Tensor w({2, 2, 3, 3});
  CHECK_THROWS_AS(ops::conv2d(x, w, nullptr, 0, 1, 1), ParamError);
  CHECK_THROWS_AS(ops::conv2d(x, w, nullptr, 1, -1, 1), ParamError);
  Tensor wg({2, 2, 3, 3});
  CHECK_THROWS_AS(ops::conv2d(x, wg, nullptr, 1, 1, 2), ShapeError);  // Cin/g mismatch
  Tensor big({1, 2, 9, 9});
  CHECK_THROWS_AS(ops::conv2d(x, big, nullptr, 1, 0, 1), ParamError);  // kernel larger than input
}

TEST_CASE("conv2d: depthwise equals per-channel conv exactly") {
  Rng rng(2);
  const int c = 3;
  Tensor x = Tensor::uniform(rng, {c, 6, 5}, -1, 1);
  Tensor w = Tensor::uniform(rng, {c, 1, 3, 3}, -1, 1);
  Tensor b = Tensor::uniform(rng, {c}, -1, 1);
  Tensor grouped = ops::conv2d(x, w, &b, 1, 1, c);
  for (int ch = 0; ch < c; ++ch) {
    Tensor xc({1, 6, 5});
    for (int i = 0; i < 30; ++i) xc[i] = x[ch * 30 + i];
    Tensor wc({1, 1, 3, 3});
    for (int i = 0; i < 9; ++i) wc[i] = w[ch * 9 + i];
    Tensor bc({1}, {b[ch]});
    Tensor yc = ops::conv2d(xc, wc, &bc, 1, 1, 1);
    for (int i = 0; i < 30; ++i) CHECK(yc[i] == grouped[ch * 30 + i]);
  }
}

TEST_CASE("linear and conv2d are linear in x") {
  Rng rng(3);
  Tensor x1 = Tensor::uniform(rng, {3, 5, 4}, -1, 1);
  Tensor x2 = Tensor::uniform(rng, {3, 5, 4}, -1, 1);
  const double a = 0.7, b = -1.3;
  Tensor mix = ops::add(ops::scale(x1, a), ops::scale(x2, b));

  Tensor wc = Tensor::uniform(rng, {4, 3, 3, 3}, -1, 1);
  Tensor lhs = ops::conv2d(mix, wc, nullptr, 1, 1, 1);
  Tensor rhs = ops::add(ops::scale(ops::conv2d(x1, wc, nullptr, 1, 1, 1), a),
                        ops::scale(ops::conv2d(x2, wc, nullptr, 1, 1, 1), b));
  CHECK(max_rel_diff(lhs, rhs) < 1e-12);

  Tensor wl = Tensor::uniform(rng, {6, 4}, -1, 1);
  Tensor s1 = Tensor::uniform(rng, {7, 4}, -1, 1);
  Tensor s2 = Tensor::uniform(rng, {7, 4}, -1, 1);
  Tensor mixs = ops::add(ops::scale(s1, a), ops::scale(s2, b));
  Tensor l1 = ops::linear(mixs, wl, nullptr);
  Tensor l2 = ops::add(ops::scale(ops::linear(s1, wl, nullptr), a), ops::scale(ops::linear(s2, wl, nullptr), b));
  CHECK(max_rel_diff(l1, l2) < 1e-12);
}

TEST_CASE("layernorm: constant rows, hand case, beta shift") {
  Tensor ones({3}, {1, 1, 1});
  Tensor zeros3({3});
  Tensor constant = Tensor::full({4, 3}, 2.5);
  Tensor y = ops::layernorm(constant, ones, zeros3, 1e-5);
  for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y[i] == 0.0);

  Tensor x({1, 2}, {0, 2});
  Tensor g({2}, {1, 1});
  Tensor b({2});
  Tensor h = ops::layernorm(x, g, b, 1e-12);
  CHECK(h[0] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(h[1] == doctest::Approx(1.0).epsilon(1e-6));

  // layernorm(x,g,beta) == layernorm(x,g,0) + beta
  Rng rng(4);
  Tensor xr = Tensor::uniform(rng, {5, 4}, -2, 2);
  Tensor gr = Tensor::uniform(rng, {4}, 0.5, 1.5);
  Tensor br = Tensor::uniform(rng, {4}, -1, 1);
  Tensor z4 = Tensor::zeros({4});
  Tensor with_b = ops::layernorm(xr, gr, br, 1e-5);
  Tensor no_b = ops::layernorm(xr, gr, z4, 1e-5);
  for (std::int64_t r = 0; r < 5; ++r)
    for (int c = 0; c < 4; ++c) CHECK(with_b[r * 4 + c] == doctest::Approx(no_b[r * 4 + c] + br[c]).epsilon(1e-14));
}

TEST_CASE("silu: frozen values") {
  Tensor x({3}, {0.0, 1.0, 20.0});
  Tensor y = ops::silu(x);
  CHECK(y[0] == 0.0);
  // x * sigmoid(x) at 1, evaluated in extended precision
  CHECK(y[1] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  // asymptote: silu(20) = 20 - 20*exp(-20)/(1+exp(-20)) = 20 - 4.1223e-8
  CHECK(std::fabs(y[2] - 20.0) < 1e-7);
  CHECK(y[2] == doctest::Approx(20.0 - 4.122307236380407e-08).epsilon(1e-12));
}

TEST_CASE("softplus: ln 2 at zero, positive everywhere") {
  Tensor x({3}, {0.0, -40.0, 40.0});
  Tensor y = ops::softplus(x);
  CHECK(y[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(y[1] > 0.0);
  CHECK(y[2] == doctest::Approx(40.0).epsilon(1e-15));
}

TEST_CASE("pixel_shuffle: definitional layout and bijection") {
  // r=1 identity
  Rng rng(5);
  Tensor x = Tensor::uniform(rng, {3, 2, 2}, -1, 1);
  CHECK(bit_equal(ops::pixel_shuffle(x, 1), x));

  Tensor v({4, 1, 1}, {1, 2, 3, 4});
  Tensor s = ops::pixel_shuffle(v, 2);
  CHECK(s.shape == std::vector<int>{1, 2, 2});
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 2.0);
  CHECK(s[2] == 3.0);
  CHECK(s[3] == 4.0);

  // constant stays constant
  Tensor c = Tensor::full({8, 3, 2}, 0.25);
  Tensor cs = ops::pixel_shuffle(c, 2);
  for (std::int64_t i = 0; i < cs.numel(); ++i) CHECK(cs[i] == 0.25);

  // unshuffle recovers exactly
  Tensor big = Tensor::uniform(rng, {12, 4, 5}, -1, 1);
  CHECK(bit_equal(ops::pixel_unshuffle(ops::pixel_shuffle(big, 2), 2), big));
  CHECK_THROWS_AS(ops::pixel_shuffle(Tensor({3, 2, 2}), 2), ParamError);
}

TEST_CASE("primitives are deterministic") {
  Rng rng(6);
  Tensor x = Tensor::uniform(rng, {4, 9, 7}, -1, 1);
  Tensor w = Tensor::uniform(rng, {5, 4, 3, 3}, -1, 1);
  Tensor b = Tensor::uniform(rng, {5}, -1, 1);
  CHECK(bit_equal(ops::conv2d(x, w, &b, 1, 1, 1), ops::conv2d(x, w, &b, 1, 1, 1)));
  CHECK(bit_equal(ops::silu(x), ops::silu(x)));
}

TEST_CASE("serial and parallel kernels agree bit for bit") {
  Rng rng(7);
  const int m = 37, cin = 9, cout = 11;
  Tensor x = Tensor::uniform(rng, {m, cin}, -1, 1);
  Tensor w = Tensor::uniform(rng, {cout, cin}, -1, 1);
  Tensor b = Tensor::uniform(rng, {cout}, -1, 1);
  Tensor ys({m, cout}), yp({m, cout});
  kernels::linear_fwd_serial(x.ptr(), w.ptr(), b.ptr(), ys.ptr(), m, cin, cout);
  kernels::linear_fwd_parallel(x.ptr(), w.ptr(), b.ptr(), yp.ptr(), m, cin, cout);
  CHECK(bit_equal(ys, yp));

  Tensor xc = Tensor::uniform(rng, {6, 13, 11}, -1, 1);
  Tensor wc = Tensor::uniform(rng, {8, 3, 3, 3}, -1, 1);
  kernels::ConvDims d;
  d.cin = 6; d.hin = 13; d.win = 11; d.cout = 8; d.kh = 3; d.kw = 3; d.stride = 2; d.pad = 1; d.groups = 2;
  Tensor cs({8, d.hout(), d.wout()}), cp({8, d.hout(), d.wout()});
  kernels::conv2d_fwd_serial(xc.ptr(), wc.ptr(), nullptr, cs.ptr(), d);
  kernels::conv2d_fwd_parallel(xc.ptr(), wc.ptr(), nullptr, cp.ptr(), d);
  CHECK(bit_equal(cs, cp));

  // backward kernels accumulate identically
  Tensor dy = Tensor::uniform(rng, {8, d.hout(), d.wout()}, -1, 1);
  Tensor dxs = Tensor::zeros(xc.shape), dxp = Tensor::zeros(xc.shape);
  kernels::conv2d_dgrad_serial(dy.ptr(), wc.ptr(), dxs.ptr(), d);
  kernels::conv2d_dgrad_parallel(dy.ptr(), wc.ptr(), dxp.ptr(), d);
  CHECK(bit_equal(dxs, dxp));
  Tensor dws = Tensor::zeros(wc.shape), dwp = Tensor::zeros(wc.shape);
  Tensor dbs = Tensor::zeros({8}), dbp = Tensor::zeros({8});
  kernels::conv2d_wgrad_serial(dy.ptr(), xc.ptr(), dws.ptr(), dbs.ptr(), d);
  kernels::conv2d_wgrad_parallel(dy.ptr(), xc.ptr(), dwp.ptr(), dbp.ptr(), d);
  CHECK(bit_equal(dws, dwp));
  CHECK(bit_equal(dbs, dbp));
}

TEST_CASE("repeat_region and block_sum are adjoint permutation sums") {
  Tensor x({1, 2, 2}, {1, 2, 3, 4});
  Tensor r = ops::repeat_region(x, 2);
  CHECK(r.shape == std::vector<int>{1, 4, 4});
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 2.0);
  CHECK(r[5] == 1.0);
  Tensor s = ops::block_sum(r, 2);
  CHECK(s[0] == 4.0);
  CHECK(s[3] == 16.0);
}

TEST_CASE("reflect padding mirrors without repeating the edge") {
  Tensor x({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor p = ops::reflect_pad_br(x, 1, 2);
  CHECK(p.shape == std::vector<int>{1, 3, 5});
  // row 0: 1 2 3 | 2 1
  CHECK(p[3] == 2.0);
  CHECK(p[4] == 1.0);
  // padded row mirrors row 0
  CHECK(p[10] == 1.0);
  CHECK(p[11] == 2.0);
  CHECK_THROWS_AS(ops::reflect_pad_br(x, 2, 0), ParamError);
}
