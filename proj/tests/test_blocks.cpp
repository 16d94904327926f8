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

#include "himamba/network.hpp"
#include "himamba/ops.hpp"
#include "reference_model.hpp"

using namespace himamba;

namespace {

// weights for a single HMB at the given sizes, random or zeroed
HmbT<Tensor> make_hmb(const HiMambaConfig& cfg, std::uint64_t seed, DirectionOrder dir) {
  HiMambaConfig one = cfg;
  one.num_groups = 1;
  one.blocks_per_group = 1;
  one.dir_cycle = {dir};
  ModelWeights m = make_weights(one);
  init_random(m, seed);
  return m.groups[0].hmbs[0];
}

HmbT<Var> wrap_hmb(Tape& t, const HmbT<Tensor>& w, bool rg) {
  HmbT<Var> v;
  v.dir = w.dir;
  std::vector<const Tensor*> src;
  visit_hmb(const_cast<HmbT<Tensor>&>(w), "", [&](const std::string&, Tensor& f) { src.push_back(&f); });
  std::vector<Var*> dst;
  visit_hmb(v, "", [&](const std::string&, Var& f) { dst.push_back(&f); });
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = t.leaf(*src[i], rg);
  return v;
}

}  // namespace

TEST_CASE("ssm_branch: zero out-projection gives zero, shape preserved") {
  HiMambaConfig cfg = HiMambaConfig::tiny(2);
  cfg.channels = 4;
  cfg.region_channels = 2;
  HmbT<Tensor> w = make_hmb(cfg, 31, DirectionOrder::H);
  w.lssm.w_out.fill(0.0);
  w.lssm.b_out.fill(0.0);
  Rng rng(32);
  Tensor x = Tensor::uniform(rng, {4, 5, 6}, -1, 1);
  Tape t(false);
  HmbT<Var> wv = wrap_hmb(t, w, false);
  Tensor y = ssm_branch(t, t.leaf(x, false), wv.lssm, DirectionOrder::H)->value;
  CHECK(y.shape == x.shape);
  for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y[i] == 0.0);
}

TEST_CASE("ssm_branch: output shape equals input shape for odd sizes") {
  HiMambaConfig cfg = HiMambaConfig::tiny(2);
  cfg.channels = 3;
  cfg.region_channels = 2;
  HmbT<Tensor> w = make_hmb(cfg, 33, DirectionOrder::RV);
  Rng rng(34);
  for (auto [h, wd] : {std::pair{1, 7}, {5, 1}, {3, 4}}) {
    Tensor x = Tensor::uniform(rng, {3, h, wd}, -1, 1);
    Tape t(false);
    HmbT<Var> wv = wrap_hmb(t, w, false);
    CHECK(ssm_branch(t, t.leaf(x, false), wv.lssm, DirectionOrder::RV)->value.shape == x.shape);
  }
}

TEST_CASE("ssm_branch matches the straight-line transcription") {
  HiMambaConfig cfg = HiMambaConfig::tiny(2);
  cfg.channels = 2;
  cfg.region_channels = 2;
  cfg.state_size = 3;
  for (auto dir : {DirectionOrder::H, DirectionOrder::V, DirectionOrder::RH, DirectionOrder::RV}) {
    HmbT<Tensor> w = make_hmb(cfg, 35, dir);
    Rng rng(36);
    Tensor x = Tensor::uniform(rng, {2, 3, 3}, -1, 1);
    Tape t(false);
    HmbT<Var> wv = wrap_hmb(t, w, false);
    Tensor got = ssm_branch(t, t.leaf(x, false), wv.lssm, dir)->value;
    Tensor want = reference::ssm_branch(x, w.lssm, dir);
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("region_project: stride arithmetic, identity and block means") {
  // n=4 on 8x8 -> 2x2
  Rng rng(37);
  Tensor x = Tensor::uniform(rng, {3, 8, 8}, -1, 1);
  Tensor w = Tensor::uniform(rng, {2, 3, 4, 4}, -1, 1);
  Tensor b = Tensor::zeros({2});
  Tape t(false);
  Tensor y = region_project(t, t.leaf(x, false), t.leaf(w, false), t.leaf(b, false), 4)->value;
  CHECK(y.shape == std::vector<int>{2, 2, 2});

  // n=1 with identity 1x1 kernel behaves as full resolution
  Tensor eye({3, 3, 1, 1}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor b3 = Tensor::zeros({3});
  Tensor id = region_project(t, t.leaf(x, false), t.leaf(eye, false), t.leaf(b3, false), 1)->value;
  CHECK(bit_equal(id, x));

  // kernel 1/n^2 on one channel -> block means
  Tensor xs({1, 4, 4});
  for (int i = 0; i < 16; ++i) xs[i] = i;
  Tensor avg = Tensor::full({1, 1, 2, 2}, 0.25);
  Tensor b1 = Tensor::zeros({1});
  Tensor m = region_project(t, t.leaf(xs, false), t.leaf(avg, false), t.leaf(b1, false), 2)->value;
  CHECK(m[0] == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
  CHECK(m[3] == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
}

TEST_CASE("fuse: endpoints, fixed 0.5 mean, convexity") {
  Rng rng(38);
  const int n = 2;
  Tensor xl = Tensor::uniform(rng, {3, 4, 4}, -1, 1);
  Tensor xr = Tensor::uniform(rng, {3, 2, 2}, -1, 1);
  Tape t(false);
  auto run = [&](const Tensor& sf) {
    return fuse(t, t.leaf(xl, false), t.leaf(xr, false), t.leaf(sf, false), n)->value;
  };
  CHECK(bit_equal(run(Tensor::full({3}, 1.0)), xl));
  CHECK(bit_equal(run(Tensor::full({3}, 0.0)), ops::repeat_region(xr, n)));

  // s_f = 0.5 is the elementwise mean
  Tensor mid = run(Tensor::full({3}, 0.5));
  Tensor rep = ops::repeat_region(xr, n);
  for (std::int64_t i = 0; i < mid.numel(); ++i)
    CHECK(mid[i] == doctest::Approx(0.5 * xl[i] + 0.5 * rep[i]).epsilon(1e-15));

  // convex combination stays inside the envelope, even for out-of-range s_f
  Tensor sf = Tensor::uniform(rng, {3}, -0.5, 1.5);
  Tensor f = run(sf);
  for (std::int64_t i = 0; i < f.numel(); ++i) {
    const double lo = std::min(xl[i], rep[i]), hi = std::max(xl[i], rep[i]);
    CHECK(f[i] >= lo - 1e-12);
    CHECK(f[i] <= hi + 1e-12);
  }
}

TEST_CASE("fuse_upsample: endpoints with bilinear interpolation") {
  Rng rng(39);
  Tensor xl = Tensor::uniform(rng, {2, 4, 4}, -1, 1);
  Tensor xr = Tensor::uniform(rng, {2, 2, 2}, -1, 1);
  Tape t(false);
  Tensor f0 = fuse_upsample(t, t.leaf(xl, false), t.leaf(xr, false), t.leaf(Tensor::zeros({2}), false), 2)->value;
  CHECK(bit_equal(f0, ops::upsample_bilinear(xr, 2)));
  Tensor f1 = fuse_upsample(t, t.leaf(xl, false), t.leaf(xr, false), t.leaf(Tensor::full({2}, 1.0), false), 2)->value;
  CHECK(bit_equal(f1, xl));
  // constant region features survive interpolation unchanged
  Tensor cst = Tensor::full({2, 3, 3}, 0.7);
  Tensor up = ops::upsample_bilinear(cst, 2);
  for (std::int64_t i = 0; i < up.numel(); ++i) CHECK(up[i] == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("gffn: closed gate zeroes the output; duplicated halves square") {
  HiMambaConfig cfg = HiMambaConfig::tiny(2);
  cfg.channels = 2;
  cfg.ffn_hidden = 2;
  HmbT<Tensor> w = make_hmb(cfg, 41, DirectionOrder::H);
  Rng rng(42);
  Tensor x = Tensor::uniform(rng, {2, 3, 3}, -1, 1);

  // zero the second half of w1: one gate factor is the (zero) bias
  HmbT<Tensor> closed = w;
  const int ch = cfg.ffn_hidden;
  for (int co = ch; co < 2 * ch; ++co)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(cfg.channels) * 9; ++i)
      closed.gffn.w1[static_cast<std::int64_t>(co) * cfg.channels * 9 + i] = 0.0;
  Tape t(false);
  HmbT<Var> cv = wrap_hmb(t, closed, false);
  Tensor y = gffn(t, t.leaf(x, false), cv.gffn)->value;
  for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y[i] == 0.0);

  // w1 duplicating the (pre-normalized) input into both halves with w2 the
  // identity squares the input elementwise
  HmbT<Tensor> sq = w;
  sq.gffn.ln_g.fill(1.0);
  sq.gffn.ln_b.fill(0.0);
  sq.gffn.w1.fill(0.0);
  sq.gffn.w2.fill(0.0);
  for (int half = 0; half < 2; ++half)
    for (int c = 0; c < 2; ++c)
      sq.gffn.w1[((static_cast<std::int64_t>(half * ch + c) * 2 + c) * 3 + 1) * 3 + 1] = 1.0;
  for (int c = 0; c < 2; ++c) sq.gffn.w2[((static_cast<std::int64_t>(c) * ch + c) * 3 + 1) * 3 + 1] = 1.0;
  HmbT<Var> sv = wrap_hmb(t, sq, false);
  Tensor ysq = gffn(t, t.leaf(x, false), sv.gffn)->value;
  // the LN inside G-FFN runs first; square its output
  Var xn = layernorm_chw(t, t.leaf(x, false), t.leaf(sq.gffn.ln_g, false), t.leaf(sq.gffn.ln_b, false));
  for (std::int64_t i = 0; i < ysq.numel(); ++i)
    CHECK(ysq[i] == doctest::Approx(xn->value[i] * xn->value[i]).epsilon(1e-13));

  CHECK(y.shape == x.shape);
}

TEST_CASE("hmb_forward: residual identity and zero path") {
  HiMambaConfig cfg = HiMambaConfig::tiny(2);
  cfg.channels = 4;
  cfg.region_channels = 2;
  HmbT<Tensor> w = make_hmb(cfg, 43, DirectionOrder::V);
  visit_hmb(w, "", [](const std::string&, Tensor& f) { f.fill(0.0); });
  w.s1.fill(1.0);
  w.s2.fill(1.0);
  Rng rng(44);
  Tensor i_l = Tensor::uniform(rng, {4, 4, 4}, -1, 1);
  Tensor i_r = Tensor::uniform(rng, {2, 2, 2}, -1, 1);
  {
    Tape t(false);
    HmbT<Var> wv = wrap_hmb(t, w, false);
    auto [nl, nr] = hmb_forward(t, t.leaf(i_l, false), t.leaf(i_r, false), wv, 2);
    CHECK(bit_equal(nl->value, i_l));
    CHECK(nl->value.shape == i_l.shape);
    CHECK(nr->value.shape == i_r.shape);
  }
  // s1 = 0 with zero branches kills the local path entirely
  w.s1.fill(0.0);
  w.s2.fill(1.0);
  {
    Tape t(false);
    HmbT<Var> wv = wrap_hmb(t, w, false);
    auto [nl, nr] = hmb_forward(t, t.leaf(i_l, false), t.leaf(i_r, false), wv, 2);
    (void)nr;
    for (std::int64_t i = 0; i < nl->value.numel(); ++i) CHECK(nl->value[i] == 0.0);
  }
}

TEST_CASE("hmb_forward matches the straight-line transcription") {
  HiMambaConfig cfg = HiMambaConfig::tiny(2);
  cfg.channels = 4;
  cfg.region_channels = 2;
  cfg.state_size = 3;
  cfg.ffn_hidden = 4;
  HmbT<Tensor> w = make_hmb(cfg, 45, DirectionOrder::RH);
  Rng rng(46);
  Tensor i_l = Tensor::uniform(rng, {4, 4, 4}, -1, 1);
  Tensor i_r = Tensor::uniform(rng, {2, 2, 2}, -1, 1);
  Tape t(false);
  HmbT<Var> wv = wrap_hmb(t, w, false);
  auto [nl, nr] = hmb_forward(t, t.leaf(i_l, false), t.leaf(i_r, false), wv, 2);
  auto [rl, rr] = reference::hmb_forward(i_l, i_r, w, 2);
  CHECK(max_abs_diff(nl->value, rl) < 1e-11);
  CHECK(max_abs_diff(nr->value, rr) < 1e-11);
}

TEST_CASE("hmb shape preservation over random configurations") {
  Rng rng(47);
  for (int trial = 0; trial < 6; ++trial) {
    HiMambaConfig cfg = HiMambaConfig::tiny(2);
    cfg.channels = 2 + rng.below(4);
    cfg.region_channels = 1 + rng.below(cfg.channels);
    cfg.state_size = 1 + rng.below(4);
    cfg.ffn_hidden = 1 + rng.below(4);
    const int n = 1 + rng.below(3);
    const int hr = 1 + rng.below(3), wr = 1 + rng.below(3);
    HmbT<Tensor> w = make_hmb(cfg, 100 + static_cast<std::uint64_t>(trial), DirectionOrder::H);
    Tensor i_l = Tensor::uniform(rng, {cfg.channels, n * hr, n * wr}, -1, 1);
    Tensor i_r = Tensor::uniform(rng, {cfg.region_channels, hr, wr}, -1, 1);
    Tape t(false);
    HmbT<Var> wv = wrap_hmb(t, w, false);
    auto [nl, nr] = hmb_forward(t, t.leaf(i_l, false), t.leaf(i_r, false), wv, n);
    CHECK(nl->value.shape == i_l.shape);
    CHECK(nr->value.shape == i_r.shape);
    CHECK(nl->value.all_finite());
  }
}

TEST_CASE("R-SSM at half channels is cheaper than L-SSM") {
  HiMambaConfig cfg = HiMambaConfig::tiny(2);
  cfg.channels = 8;
  cfg.region_channels = 4;
  HmbT<Tensor> w = make_hmb(cfg, 48, DirectionOrder::H);
  std::int64_t lssm = 0, rssm = 0;
  visit_branch(w.lssm, "", [&](const std::string&, Tensor& t) { lssm += t.numel(); });
  visit_branch(w.rssm, "", [&](const std::string&, Tensor& t) { rssm += t.numel(); });
  CHECK(rssm < lssm);
}
