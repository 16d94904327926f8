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

#include "himamba/autodiff.hpp"
#include "himamba/ops.hpp"

using namespace himamba;

TEST_CASE("backward: sum gives all-ones") {
  Rng rng(21);
  Tape t;
  Var x = t.leaf(Tensor::uniform(rng, {3, 4}, -1, 1), true);
  t.backward(t.sum(x));
  REQUIRE(x->has_grad());
  for (std::int64_t i = 0; i < x->grad.numel(); ++i) CHECK(x->grad[i] == 1.0);
}

TEST_CASE("backward: silu gradient at zero is one half") {
  Tape t;
  Var x = t.leaf(Tensor::zeros({5}), true);
  t.backward(t.sum(t.silu(x)));
  for (std::int64_t i = 0; i < 5; ++i) CHECK(x->grad[i] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("backward: requires a scalar loss and a recording tape") {
  Tape t;
  Var x = t.leaf(Tensor::zeros({3}), true);
  CHECK_THROWS_AS(t.backward(x), ContractError);
  Tape off(false);
  Var y = off.leaf(Tensor::zeros({1}), true);
  CHECK_THROWS_AS(off.backward(y), ContractError);
}

TEST_CASE("gradients accumulate across multiple uses") {
  // loss = sum(x*x): grad = 2x via two consumers of x
  Rng rng(22);
  Tensor xv = Tensor::uniform(rng, {7}, -2, 2);
  Tape t;
  Var x = t.leaf(xv, true);
  t.backward(t.sum(t.mul(x, x)));
  for (std::int64_t i = 0; i < 7; ++i) CHECK(x->grad[i] == doctest::Approx(2 * xv[i]).epsilon(1e-14));
}

TEST_CASE("l1 loss: values and tie subgradient") {
  Tape t;
  Tensor target({4}, {1, 2, 3, 4});
  Var same = t.leaf(target, true);
  Var l0 = t.l1_loss(same, target);
  CHECK(l0->value[0] == 0.0);

  Tensor shifted({4}, {1.5, 2.5, 3.5, 4.5});
  Var p = t.leaf(shifted, true);
  Var l1 = t.l1_loss(p, target);
  CHECK(l1->value[0] == doctest::Approx(0.5).epsilon(1e-15));

  Tape t2;
  Tensor mixed({4}, {2, 2, 2, 2});
  Tensor tgt({4}, {1, 2, 3, 4});
  Var q = t2.leaf(mixed, true);
  t2.backward(t2.l1_loss(q, tgt));
  CHECK(q->grad[0] == doctest::Approx(0.25).epsilon(1e-15));   // pred > target
  CHECK(q->grad[1] == 0.0);                                    // exact tie
  CHECK(q->grad[2] == doctest::Approx(-0.25).epsilon(1e-15));  // pred < target

  CHECK_THROWS_AS(t2.l1_loss(q, Tensor({5})), ShapeError);
}

TEST_CASE("tape replay is bit-exact") {
  Rng rng(23);
  Tape t;
  Var x = t.leaf(Tensor::uniform(rng, {2, 6, 4}, -1, 1), true);
  Var w = t.leaf(Tensor::uniform(rng, {4, 2, 3, 3}, -1, 1), true);
  Var b = t.leaf(Tensor::uniform(rng, {4}, -1, 1), true);
  Var y = t.silu(t.conv2d(x, w, b, 1, 1, 1));
  Var g = t.leaf(Tensor::uniform(rng, {4}, 0.5, 1.5), false);
  Var be = t.leaf(Tensor::zeros({4}), false);
  y = t.layernorm(t.flatten_direction(y, DirectionOrder::V), g, be, 1e-5);
  t.backward(t.sum(y));
  CHECK(t.replay_bit_exact());
  CHECK(t.size() > 5);
}

TEST_CASE("non-recording tape computes identical values") {
  Rng rng(24);
  Tensor xv = Tensor::uniform(rng, {3, 5, 5}, -1, 1);
  Tensor wv = Tensor::uniform(rng, {6, 3, 3, 3}, -1, 1);
  auto run = [&](bool recording) {
    Tape t(recording);
    Var x = t.leaf(xv, recording);
    Var w = t.leaf(wv, recording);
    return t.silu(t.conv2d(x, w, nullptr, 1, 1, 1))->value;
  };
  CHECK(bit_equal(run(true), run(false)));
}

TEST_CASE("channel_slice splits and routes gradients to the right half") {
  Rng rng(25);
  Tensor xv = Tensor::uniform(rng, {4, 2, 2}, -1, 1);
  Tape t;
  Var x = t.leaf(xv, true);
  Var top = t.channel_slice(x, 0, 2);
  t.backward(t.sum(top));
  for (std::int64_t i = 0; i < 8; ++i) CHECK(x->grad[i] == 1.0);
  for (std::int64_t i = 8; i < 16; ++i) CHECK(x->grad[i] == 0.0);
}
