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

#include "himamba/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "himamba/eval.hpp"
#include "himamba/image.hpp"
#include "himamba/metrics.hpp"
#include "himamba/network.hpp"
#include "himamba/ops.hpp"
#include "himamba/train.hpp"

namespace himamba::verify {

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ------------------------------------------------------------------
// finite differences
// ------------------------------------------------------------------

using BuildFn = std::function<Var(Tape&, const std::vector<Var>&)>;

double fd_rel_err(double analytic, double numeric) {
  const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

// Central finite differences on a scalar-valued builder. Checks up to
// `samples` coordinates per input (all when small).
double fd_max_err(const BuildFn& build, const std::vector<Tensor>& inputs, int samples, Rng& rng,
                  double eps = 1e-5) {
  Tape tape(true);
  std::vector<Var> leaves;
  leaves.reserve(inputs.size());
  for (const auto& x : inputs) leaves.push_back(tape.leaf(x, true));
  Var loss = build(tape, leaves);
  if (loss->value.numel() != 1) throw ContractError("fd_max_err: loss must be scalar");
  tape.backward(loss);

  auto eval = [&](const std::vector<Tensor>& xs) {
    Tape t2(false);
    std::vector<Var> ls;
    ls.reserve(xs.size());
    for (const auto& x : xs) ls.push_back(t2.leaf(x, false));
    return build(t2, ls)->value[0];
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::int64_t n = inputs[i].numel();
    const int count = static_cast<int>(std::min<std::int64_t>(samples, n));
    for (int s = 0; s < count; ++s) {
      const std::int64_t at = (n <= samples) ? s : rng.below(static_cast<int>(n));
      std::vector<Tensor> xs = inputs;
      xs[i][at] = inputs[i][at] + eps;
      const double fp = eval(xs);
      xs[i][at] = inputs[i][at] - eps;
      const double fm = eval(xs);
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = leaves[i]->has_grad() ? leaves[i]->grad[at] : 0.0;
      worst = std::max(worst, fd_rel_err(analytic, numeric));
    }
  }
  return worst;
}

Tensor randt(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  return Tensor::uniform(rng, std::move(shape), lo, hi);
}

// ------------------------------------------------------------------
// criterion 1: scan vs LTI kernel route
// ------------------------------------------------------------------

CheckResult check_scan_oracle() {
  CheckResult r{"scan_oracle", true, "", 0};
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + rng.below(4), n = 1 + rng.below(8), len = 1 + rng.below(64);
    SelectiveParams p;
    p.a_log = randt(rng, {d, n}, std::log(0.05), std::log(2.0));
    p.d_skip = randt(rng, {d});
    Tensor delta_ch = randt(rng, {d}, 0.05, 1.0);
    Tensor b_const = randt(rng, {n});
    Tensor c_const = randt(rng, {n});
    p.delta = Tensor({len, d});
    p.b_seq = Tensor({len, n});
    p.c_seq = Tensor({len, n});
    for (int k = 0; k < len; ++k) {
      for (int j = 0; j < d; ++j) p.delta[static_cast<std::int64_t>(k) * d + j] = delta_ch[j];
      for (int j = 0; j < n; ++j) {
        p.b_seq[static_cast<std::int64_t>(k) * n + j] = b_const[j];
        p.c_seq[static_cast<std::int64_t>(k) * n + j] = c_const[j];
      }
    }
    const Tensor u = randt(rng, {len, d});
    const Tensor y_scan = selective_scan(u, p);

    for (int j = 0; j < d; ++j) {
      Tensor a_bar({n}), b_bar({n});
      for (int s = 0; s < n; ++s) {
        const double a = -std::exp(p.a_log[static_cast<std::int64_t>(j) * n + s]);
        const auto [ab, bb] = discretize_zoh(delta_ch[j], a, b_const[s]);
        a_bar[s] = ab;
        b_bar[s] = bb;
      }
      const Tensor kern = lti_kernel(a_bar, b_bar, c_const, len);
      Tensor u_ch({len});
      for (int k = 0; k < len; ++k) u_ch[k] = u[static_cast<std::int64_t>(k) * d + j];
      const Tensor y_lti = lti_apply(u_ch, kern, p.d_skip[j]);
      for (int k = 0; k < len; ++k) {
        const double yd = y_scan[static_cast<std::int64_t>(k) * d + j];
        worst = std::max(worst, std::fabs(yd - y_lti[k]) / std::max(1.0, std::fabs(y_lti[k])));
      }
    }
  }
  r.pass = worst < 1e-12;
  r.detail = fmt("100 time-invariant parameterizations, max rel diff %.3e (limit 1e-12)", worst);
  return r;
}

CheckResult check_scan_stability() {
  CheckResult r{"scan_stability", true, "", 0};
  const int len = 65536, d = 2, n = 4;
  SelectiveParams p;
  p.a_log = Tensor::full({d, n}, 0.0);  // a = -1
  p.delta = Tensor::full({len, d}, 0.5);
  p.b_seq = Tensor::full({len, n}, 1.0);
  p.c_seq = Tensor::full({len, n}, 1.0);
  p.d_skip = Tensor::full({d}, 1.0);
  const Tensor u = Tensor::full({len, d}, 1.0);
  const Tensor y = selective_scan(u, p);
  double peak = 0.0;
  for (std::int64_t i = 0; i < y.numel(); ++i) peak = std::max(peak, std::fabs(y[i]));
  r.pass = y.all_finite() && peak < 1e6;
  r.detail = fmt("L=65536 constant drive, finite=%d, peak |y| = %.4g", y.all_finite() ? 1 : 0, peak);
  return r;
}

// ------------------------------------------------------------------
// criterion 2: gradients
// ------------------------------------------------------------------

double fd_primitives(std::string& worst_name) {
  Rng rng(2024);
  double worst = 0.0;
  auto track = [&](const char* name, double err) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  };

  // linear (x, w, b)
  track("linear", fd_max_err(
                      [](Tape& t, const std::vector<Var>& v) {
                        Var y = t.linear(v[0], v[1], v[2]);
                        return t.weighted_sum(y, Tensor::full(y->value.shape, 0.7));
                      },
                      {randt(rng, {5, 4}), randt(rng, {3, 4}), randt(rng, {3})}, 30, rng));

  // conv2d, grouped and strided
  {
    Rng wr(7);
    track("conv2d", fd_max_err(
                        [](Tape& t, const std::vector<Var>& v) {
                          Var y = t.conv2d(v[0], v[1], v[2], 2, 1, 2);
                          return t.weighted_sum(y, Tensor::full(y->value.shape, 0.9));
                        },
                        {randt(wr, {4, 6, 5}), randt(wr, {6, 2, 3, 3}), randt(wr, {6})}, 40, rng));
    track("conv2d_depthwise", fd_max_err(
                                  [](Tape& t, const std::vector<Var>& v) {
                                    Var y = t.conv2d(v[0], v[1], v[2], 1, 1, 3);
                                    return t.weighted_sum(y, Tensor::full(y->value.shape, 1.1));
                                  },
                                  {randt(wr, {3, 5, 5}), randt(wr, {3, 1, 3, 3}), randt(wr, {3})}, 30, rng));
  }

  track("layernorm", fd_max_err(
                         [](Tape& t, const std::vector<Var>& v) {
                           Var y = t.layernorm(v[0], v[1], v[2], 1e-5);
                           return t.weighted_sum(y, Tensor::full(y->value.shape, 0.8));
                         },
                         {randt(rng, {7, 5}), randt(rng, {5}, 0.5, 1.5), randt(rng, {5})}, 35, rng));

  track("silu", fd_max_err(
                    [](Tape& t, const std::vector<Var>& v) { return t.sum(t.silu(v[0])); },
                    {randt(rng, {40}, -3.0, 3.0)}, 40, rng));

  track("softplus", fd_max_err(
                        [](Tape& t, const std::vector<Var>& v) { return t.sum(t.softplus(v[0])); },
                        {randt(rng, {40}, -3.0, 3.0)}, 40, rng));

  track("pixel_shuffle", fd_max_err(
                             [](Tape& t, const std::vector<Var>& v) {
                               Var y = t.pixel_shuffle(v[0], 2);
                               return t.weighted_sum(y, Tensor::full(y->value.shape, 0.6));
                             },
                             {randt(rng, {8, 3, 4})}, 40, rng));

  track("elementwise", fd_max_err(
                           [](Tape& t, const std::vector<Var>& v) {
                             Var y = t.mul(t.add(v[0], v[1]), t.sub(v[0], v[2]));
                             return t.sum(y);
                           },
                           {randt(rng, {4, 3, 3}), randt(rng, {4, 3, 3}), randt(rng, {4, 3, 3})}, 30, rng));

  track("scale_channels", fd_max_err(
                              [](Tape& t, const std::vector<Var>& v) {
                                Var y = t.scale_channels(v[0], v[1]);
                                return t.weighted_sum(y, Tensor::full(y->value.shape, 1.3));
                              },
                              {randt(rng, {4, 3, 5}), randt(rng, {4})}, 30, rng));

  track("clamp01", fd_max_err(
                       [](Tape& t, const std::vector<Var>& v) {
                         Var y = t.clamp01(v[0]);
                         return t.weighted_sum(y, Tensor::full(y->value.shape, 0.9));
                       },
                       {randt(rng, {24}, 0.1, 0.9)}, 24, rng));

  track("repeat_region", fd_max_err(
                             [](Tape& t, const std::vector<Var>& v) {
                               Var y = t.repeat_region(v[0], 2);
                               return t.weighted_sum(y, Tensor::full(y->value.shape, 0.4));
                             },
                             {randt(rng, {3, 3, 2})}, 18, rng));

  track("upsample_bilinear", fd_max_err(
                                 [](Tape& t, const std::vector<Var>& v) {
                                   Var y = t.upsample_bilinear(v[0], 2);
                                   return t.weighted_sum(y, Tensor::full(y->value.shape, 0.5));
                                 },
                                 {randt(rng, {2, 3, 4})}, 24, rng));

  track("pad_crop_slice", fd_max_err(
                              [](Tape& t, const std::vector<Var>& v) {
                                Var y = t.reflect_pad_br(v[0], 2, 1);
                                y = t.crop_tl(y, 4, 4);
                                y = t.channel_slice(y, 1, 3);
                                return t.weighted_sum(y, Tensor::full(y->value.shape, 1.0));
                              },
                              {randt(rng, {4, 4, 4})}, 30, rng));

  for (auto dir : {DirectionOrder::H, DirectionOrder::V, DirectionOrder::RH, DirectionOrder::RV})
    track("flatten_direction", fd_max_err(
                                   [dir](Tape& t, const std::vector<Var>& v) {
                                     Var y = t.flatten_direction(v[0], dir);
                                     y = t.unflatten_direction(y, dir, 3, 3, 4);
                                     return t.weighted_sum(y, Tensor::full(y->value.shape, 0.7));
                                   },
                                   {randt(rng, {3, 3, 4})}, 12, rng));

  // selective scan, gradients through delta/B/C/A/D and the input
  {
    Rng wr(31);
    const int len = 6, d = 3, n = 2;
    track("selective_scan", fd_max_err(
                                [len, d, n](Tape& t, const std::vector<Var>& v) {
                                  Var delta = t.softplus(t.linear(v[0], v[1], v[2]));
                                  Var bs = t.linear(v[0], v[3], nullptr);
                                  Var cs = t.linear(v[0], v[4], nullptr);
                                  Var y = t.selective_scan(v[0], v[5], delta, bs, cs, v[6]);
                                  return t.weighted_sum(y, Tensor::full({len, d}, 0.8));
                                },
                                {randt(wr, {len, d}), randt(wr, {d, d}), randt(wr, {d}, -1.5, -0.5),
                                 randt(wr, {n, d}), randt(wr, {n, d}),
                                 randt(wr, {d, n}, std::log(0.3), std::log(1.5)), randt(wr, {d})},
                                40, rng));
  }

  // l1 away from ties
  {
    Rng wr(5);
    Tensor target = randt(wr, {3, 4, 4});
    Tensor pred = ops::add(target, Tensor::full(target.shape, 0.37));
    Rng perturb(6);
    for (auto& vv : pred.data) vv += perturb.uniform(-0.1, 0.1);
    track("l1_loss", fd_max_err(
                         [target](Tape& t, const std::vector<Var>& v) { return t.l1_loss(v[0], target); },
                         {pred}, 30, rng, 1e-6));
  }

  return worst;
}

double fd_full_model(int samples_per_tensor) {
  const HiMambaConfig cfg = HiMambaConfig::tiny(2);
  ModelWeights w = make_weights(cfg);
  init_random(w, 40);
  Rng rng(41);
  const Tensor img = randt(rng, {3, 8, 8}, 0.0, 1.0);
  const Tensor mask = randt(rng, {3, 16, 16}, -1.0, 1.0);

  auto eval = [&](const ModelWeights& ws, const Tensor& im) {
    const Tensor out = himamba_forward(im, ws);
    double acc = 0.0;
    for (std::int64_t i = 0; i < out.numel(); ++i) acc += out[i] * mask[i];
    return acc;
  };

  Tape tape(true);
  ModelVars mv = wrap_model(tape, w, true);
  Var img_var = tape.leaf(img, true);
  Var out = himamba_forward_var(tape, img_var, mv);
  Var loss = tape.weighted_sum(out, mask);
  tape.backward(loss);

  std::vector<Var> param_vars;
  visit_params(mv, [&](const std::string&, Var& v) { param_vars.push_back(v); });
  std::vector<Tensor*> param_tensors;
  visit_params(w, [&](const std::string&, Tensor& t) { param_tensors.push_back(&t); });

  const double eps = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < param_tensors.size(); ++i) {
    Tensor& t = *param_tensors[i];
    const int count = static_cast<int>(std::min<std::int64_t>(samples_per_tensor, t.numel()));
    for (int s = 0; s < count; ++s) {
      const std::int64_t at = (t.numel() <= samples_per_tensor) ? s : rng.below(static_cast<int>(t.numel()));
      const double keep = t[at];
      t[at] = keep + eps;
      const double fp = eval(w, img);
      t[at] = keep - eps;
      const double fm = eval(w, img);
      t[at] = keep;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = param_vars[i]->has_grad() ? param_vars[i]->grad[at] : 0.0;
      worst = std::max(worst, fd_rel_err(analytic, numeric));
    }
  }
  // input gradient
  Tensor im2 = img;
  for (int s = 0; s < 6; ++s) {
    const std::int64_t at = rng.below(static_cast<int>(img.numel()));
    const double keep = im2[at];
    im2[at] = keep + eps;
    const double fp = eval(w, im2);
    im2[at] = keep - eps;
    const double fm = eval(w, im2);
    im2[at] = keep;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double analytic = img_var->has_grad() ? img_var->grad[at] : 0.0;
    worst = std::max(worst, fd_rel_err(analytic, numeric));
  }
  return worst;
}

CheckResult check_gradients() {
  CheckResult r{"gradients", true, "", 0};
  std::string worst_prim;
  const double prim = fd_primitives(worst_prim);
  const double model = fd_full_model(2);
  const double worst = std::max(prim, model);
  r.pass = worst < 1e-5;
  r.detail = fmt("primitive max rel err %.3e (worst: %s), tiny-model max rel err %.3e (limit 1e-5)",
                 prim, worst_prim.c_str(), model);
  return r;
}

// ------------------------------------------------------------------
// criterion 3: direction alternation is cost-neutral
// ------------------------------------------------------------------

CheckResult check_cost_neutrality() {
  CheckResult r{"cost_neutrality", true, "", 0};
  HiMambaConfig mono = HiMambaConfig::tiny(2);
  mono.dir_cycle = {DirectionOrder::H, DirectionOrder::H, DirectionOrder::H, DirectionOrder::H};
  HiMambaConfig alt = HiMambaConfig::tiny(2);
  const auto p1 = count_params(mono), p2 = count_params(alt);
  const auto f1 = count_flops(mono, 48, 36), f2 = count_flops(alt, 48, 36);
  r.pass = (p1 == p2) && (f1 == f2);
  r.detail = fmt("params %lld vs %lld, flops %lld vs %lld for [H,H,H,H] vs [H,V,RH,RV]",
                 static_cast<long long>(p1), static_cast<long long>(p2), static_cast<long long>(f1),
                 static_cast<long long>(f2));
  return r;
}

// ------------------------------------------------------------------
// criterion 4: zeroed deep path is the exact identity
// ------------------------------------------------------------------

CheckResult check_residual_identity() {
  CheckResult r{"residual_identity", true, "", 0};
  const HiMambaConfig cfg = HiMambaConfig::tiny(2);
  ModelWeights w = make_weights(cfg);
  init_random(w, 77);
  zero_deep_path(w);
  Rng rng(78);

  // each group is the identity
  bool group_ok = true;
  {
    Tape t(false);
    ModelVars mv = wrap_model(t, w, false);
    const Tensor f_in = randt(rng, {cfg.channels, 16, 12});
    for (const auto& g : mv.groups) {
      const Tensor out = dahmg_forward(t, t.leaf(f_in, false), g, cfg)->value;
      group_ok = group_ok && bit_equal(out, f_in);
    }
  }

  // whole deep path collapses to conv + pixel shuffle of shallow features
  const Tensor img = randt(rng, {3, 16, 12}, 0.0, 1.0);
  const Tensor got = himamba_forward(img, w);
  const Tensor f_l = ops::conv2d(img, w.head_w, &w.head_b, 1, 1, 1);
  const Tensor rec = ops::conv2d(ops::add(f_l, f_l), w.recon_w, &w.recon_b, 1, 1, 1);
  const Tensor want = ops::pixel_shuffle(rec, cfg.scale);
  const bool model_ok = bit_equal(got, want);

  r.pass = group_ok && model_ok;
  r.detail = fmt("group identity %s, collapsed deep path %s (bit-exact)", group_ok ? "ok" : "FAIL",
                 model_ok ? "ok" : "FAIL");
  return r;
}

// ------------------------------------------------------------------
// criterion 5: direction bijections
// ------------------------------------------------------------------

CheckResult check_direction_bijections() {
  CheckResult r{"direction_bijections", true, "", 0};
  Rng rng(55);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const int c = 1 + rng.below(4), h = 1 + rng.below(12), w = 1 + rng.below(12);
    const Tensor x = randt(rng, {c, h, w});
    for (auto dir : {DirectionOrder::H, DirectionOrder::V, DirectionOrder::RH, DirectionOrder::RV})
      ok = ok && bit_equal(unflatten_direction(flatten_direction(x, dir), dir, c, h, w), x);

    const std::int64_t len = static_cast<std::int64_t>(h) * w;
    auto reversed = [&](const Tensor& seq) {
      Tensor out(seq.shape);
      for (std::int64_t k = 0; k < len; ++k)
        for (int cc = 0; cc < c; ++cc) out[(len - 1 - k) * c + cc] = seq[k * c + cc];
      return out;
    };
    ok = ok && bit_equal(flatten_direction(x, DirectionOrder::RH), reversed(flatten_direction(x, DirectionOrder::H)));
    ok = ok && bit_equal(flatten_direction(x, DirectionOrder::RV), reversed(flatten_direction(x, DirectionOrder::V)));
    ok = ok && bit_equal(flatten_direction(x, DirectionOrder::V),
                         flatten_direction(ops::transpose_hw(x), DirectionOrder::H));
  }
  r.pass = ok;
  r.detail = "1000 random shapes, 4 directions, inverse + reversal + transpose identities (exact)";
  return r;
}

// ------------------------------------------------------------------
// criterion 6: toy training beats bicubic
// ------------------------------------------------------------------

CheckResult check_toy_training() {
  CheckResult r{"toy_training", true, "", 0};
  const HiMambaConfig cfg = HiMambaConfig::tiny(2);
  ModelWeights w = make_weights(cfg);
  init_random(w, 2026);

  const auto trainset = synthetic_dataset(64, 64, 2, 900);
  const auto heldout = synthetic_dataset(16, 64, 2, 7700);

  TrainOptions opt;
  opt.iters = 1000;
  opt.batch = 4;
  opt.lr_patch = 32;
  opt.lr0 = 2e-3;
  opt.seed = 3;
  const TrainResult res = train(w, trainset, opt);

  double initial = 0.0, final_l1 = 0.0;
  for (int i = 0; i < 10; ++i) initial += res.losses[static_cast<std::size_t>(i)];
  for (int i = 0; i < 10; ++i) final_l1 += res.losses[res.losses.size() - 1 - static_cast<std::size_t>(i)];
  initial /= 10.0;
  final_l1 /= 10.0;

  std::vector<std::pair<std::string, Tensor>> hr_imgs;
  for (std::size_t i = 0; i < heldout.size(); ++i)
    hr_imgs.emplace_back("tex" + std::to_string(i), heldout[i].hr);
  const EvalSummary ev = evaluate_images(hr_imgs, 2, [&](const Tensor& lr) { return himamba_forward(lr, w); });
  const double margin = ev.mean_psnr_model - ev.mean_psnr_bicubic;

  const bool loss_ok = final_l1 < 0.5 * initial;
  const bool psnr_ok = margin >= 0.3;
  r.pass = loss_ok && psnr_ok;
  r.detail = fmt("L1 %.4f -> %.4f (need < %.4f); PSNR %.2f dB vs bicubic %.2f dB (margin %.2f, need >= 0.3)",
                 initial, final_l1, 0.5 * initial, ev.mean_psnr_model, ev.mean_psnr_bicubic, margin);
  return r;
}

// ------------------------------------------------------------------
// criterion 7: metric sanity
// ------------------------------------------------------------------

CheckResult check_metrics_sanity() {
  CheckResult r{"metrics_sanity", true, "", 0};
  Rng rng(9);

  const Tensor a = Tensor::full({1, 32, 32}, 0.5);
  Tensor b = a;
  for (auto& v : b.data) v += 1.0 / 255.0;
  const double p = psnr(a, b, 0);
  const bool psnr_ok = std::fabs(p - 48.1308) < 1e-3;

  const Tensor plane = randt(rng, {1, 40, 40}, 0.0, 1.0);
  const bool ssim_ok = (ssim(plane, plane, 0) == 1.0);
  const bool psnr_sym = (psnr(a, b, 0) == psnr(b, a, 0));
  const bool psnr_zero = (psnr(Tensor::zeros({1, 16, 16}), Tensor::full({1, 16, 16}, 1.0), 0) == 0.0);
  const bool psnr_cap = (psnr(plane, plane, 0) == 100.0);

  // dihedral-equivariant dummy model: nearest-neighbour x2
  const Tensor img = randt(rng, {3, 9, 13}, 0.0, 1.0);
  ModelFn nn = [](const Tensor& x) { return ops::repeat_region(x, 2); };
  const bool ens_ok = bit_equal(self_ensemble(img, nn), nn(img));

  r.pass = psnr_ok && ssim_ok && psnr_sym && psnr_zero && psnr_cap && ens_ok;
  r.detail = fmt("psnr(1/255)=%.6f dB (want 48.1308 +- 1e-3); ssim(a,a)==1 %s; symmetry %s; cap %s; "
                 "self-ensemble collapse %s",
                 p, ssim_ok ? "ok" : "FAIL", psnr_sym ? "ok" : "FAIL", psnr_cap ? "ok" : "FAIL",
                 ens_ok ? "ok" : "FAIL");
  return r;
}

// ------------------------------------------------------------------
// criterion 8: serialization
// ------------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CheckResult check_serialization() {
  CheckResult r{"serialization", true, "", 0};
  namespace fs = std::filesystem;
  Rng rng(88);
  const fs::path dir = fs::temp_directory_path() / "himamba_verify";
  fs::create_directories(dir);
  bool ok = true;
  std::string why;
  for (int trial = 0; trial < 20 && ok; ++trial) {
    HiMambaConfig cfg;
    cfg.scale = 2 + rng.below(3);
    cfg.channels = 4 + rng.below(20);
    cfg.region_channels = 2 + rng.below(cfg.channels - 1);
    cfg.region_size = 1 + rng.below(4);
    cfg.blocks_per_group = 1 + rng.below(5);
    cfg.num_groups = rng.below(4);
    cfg.state_size = 1 + rng.below(8);
    cfg.ffn_hidden = 2 + rng.below(12);
    cfg.expansion = (rng.below(2) == 0) ? 2.0 : 1.5;
    cfg.dir_cycle.clear();
    const int nd = 1 + rng.below(4);
    for (int i = 0; i < nd; ++i) cfg.dir_cycle.push_back(static_cast<DirectionOrder>(rng.below(4)));

    ModelWeights w = make_weights(cfg);
    init_random(w, 1000 + static_cast<std::uint64_t>(trial));
    const std::string p1 = (dir / ("w" + std::to_string(trial) + "a.himb")).string();
    const std::string p2 = (dir / ("w" + std::to_string(trial) + "b.himb")).string();
    save_weights(w, p1);
    ModelWeights w2 = load_weights(p1);
    save_weights(w2, p2);
    if (read_file(p1) != read_file(p2)) {
      ok = false;
      why = "round trip bytes differ (config " + std::to_string(trial) + ")";
    }
    std::int64_t elems = 0;
    visit_params(w, [&](const std::string&, const Tensor& t) { elems += t.numel(); });
    if (count_params(cfg) != elems) {
      ok = false;
      why = fmt("count_params %lld != enumerated %lld (config %d)",
                static_cast<long long>(count_params(cfg)), static_cast<long long>(elems), trial);
    }
  }
  r.pass = ok;
  r.detail = ok ? "20 random configs: save->load->save byte-identical, analytic == enumerated params" : why;
  return r;
}

// ------------------------------------------------------------------
// criterion 9: determinism across thread caps
// ------------------------------------------------------------------

CheckResult check_thread_determinism() {
  CheckResult r{"thread_determinism", true, "", 0};
  const HiMambaConfig cfg = HiMambaConfig::tiny(2);
  ModelWeights w = make_weights(cfg);
  init_random(w, 321);
  Rng rng(322);
  const Tensor img = randt(rng, {3, 22, 18}, 0.0, 1.0);  // exercises the padding path

  const int keep = thread_cap();
  set_thread_cap(1);
  const Tensor y1 = himamba_forward(img, w);
  set_thread_cap(4);
  const Tensor y4 = himamba_forward(img, w);
  set_thread_cap(16);
  const Tensor y16 = himamba_forward(img, w);
  set_thread_cap(keep);

  r.pass = bit_equal(y1, y4) && bit_equal(y1, y16);
  r.detail = fmt("forward bit-identical for thread caps 1/4/16: %s", r.pass ? "yes" : "NO");
  return r;
}

using CheckFn = CheckResult (*)();

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> checks = {
      {"scan_oracle", check_scan_oracle},
      {"gradients", check_gradients},
      {"cost_neutrality", check_cost_neutrality},
      {"residual_identity", check_residual_identity},
      {"direction_bijections", check_direction_bijections},
      {"toy_training", check_toy_training},
      {"metrics_sanity", check_metrics_sanity},
      {"serialization", check_serialization},
      {"thread_determinism", check_thread_determinism},
      {"scan_stability", check_scan_stability},
  };
  return checks;
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

CheckResult run_check(const std::string& name) {
  for (const auto& [n, fn] : registry()) {
    if (n != name) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r = fn();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }
  throw InputError("unknown check: " + name);
}

int run_checks(const std::string& filter, std::ostream& out) {
  int failures = 0, matched = 0;
  for (const auto& name : check_names()) {
    if (!filter.empty() && name.find(filter) == std::string::npos) continue;
    ++matched;
    CheckResult r = run_check(name);
    char line[640];
    std::snprintf(line, sizeof line, "[%s] %-22s (%.2fs) %s\n", r.pass ? "PASS" : "FAIL",
                  r.name.c_str(), r.seconds, r.detail.c_str());
    out << line << std::flush;
    if (!r.pass) ++failures;
  }
  if (matched == 0) {
    out << "no checks match filter '" << filter << "'\n";
    return 1;
  }
  return failures;
}

}  // namespace himamba::verify
