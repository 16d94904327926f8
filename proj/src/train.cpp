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

#include "himamba/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "himamba/image.hpp"
#include "himamba/ops.hpp"

namespace himamba {

double l1_loss(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target))
    throw ShapeError("l1_loss: shape mismatch " + shape_str(pred.shape) + " vs " + shape_str(target.shape));
  double acc = 0.0;
  for (std::int64_t i = 0; i < pred.numel(); ++i) acc += std::fabs(pred[i] - target[i]);
  return acc / static_cast<double>(pred.numel());
}

AdamState AdamState::for_params(const std::vector<Tensor*>& params) {
  AdamState st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const Tensor* p : params) {
    st.m.emplace_back(p->shape);
    st.v.emplace_back(p->shape);
  }
  return st;
}

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& st, double lr) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw ShapeError("adam_step: parameter/gradient/state count mismatch");
  st.step += 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    if (!p.same_shape(g)) throw ShapeError("adam_step: gradient shape mismatch");
    Tensor& m = st.m[i];
    Tensor& v = st.v[i];
    for (std::int64_t j = 0; j < p.numel(); ++j) {
      m[j] = st.beta1 * m[j] + (1.0 - st.beta1) * g[j];
      v[j] = st.beta2 * v[j] + (1.0 - st.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

namespace {

double lr_at(const TrainOptions& opt, int iter) {
  double lr = opt.lr0;
  for (double f : opt.milestones)
    if (iter >= static_cast<int>(std::floor(f * opt.iters))) lr *= 0.5;
  return lr;
}

std::pair<Tensor, Tensor> sample_patch(const TrainSample& s, int patch, int scale, Rng& rng) {
  const int h = s.lr.dim(1), w = s.lr.dim(2);
  const int p = std::min({patch, h, w});
  const int y0 = h > p ? rng.below(h - p + 1) : 0;
  const int x0 = w > p ? rng.below(w - p + 1) : 0;
  Tensor lr({3, p, p}), hr({3, scale * p, scale * p});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < p; ++y)
      for (int x = 0; x < p; ++x)
        lr[(static_cast<std::int64_t>(c) * p + y) * p + x] =
            s.lr[(static_cast<std::int64_t>(c) * h + y0 + y) * w + x0 + x];
    const int hp = scale * p, hh = s.hr.dim(1), hw = s.hr.dim(2);
    for (int y = 0; y < hp; ++y)
      for (int x = 0; x < hp; ++x)
        hr[(static_cast<std::int64_t>(c) * hp + y) * hp + x] =
            s.hr[(static_cast<std::int64_t>(c) * hh + scale * y0 + y) * hw + scale * x0 + x];
  }
  const int k = rng.below(8);
  return {dihedral_apply(lr, k), dihedral_apply(hr, k)};
}

}  // namespace

TrainResult train(ModelWeights& w, const std::vector<TrainSample>& data, const TrainOptions& opt) {
  if (data.empty()) throw InputError("train: empty dataset");
  if (opt.iters < 1 || opt.batch < 1 || opt.lr_patch < 1) throw ParamError("train: bad options");
  const int scale = w.config.scale;
  for (const auto& s : data) {
    if (s.lr.rank() != 3 || s.hr.rank() != 3 || s.lr.dim(0) != 3 || s.hr.dim(0) != 3 ||
        s.hr.dim(1) != scale * s.lr.dim(1) || s.hr.dim(2) != scale * s.lr.dim(2))
      throw ShapeError("train: sample shapes inconsistent with scale " + std::to_string(scale));
    if (s.lr.dim(1) < 8 || s.lr.dim(2) < 8) throw InputError("train: LR samples must be at least 8x8");
  }

  std::vector<Tensor*> params;
  visit_params(w, [&](const std::string&, Tensor& t) { params.push_back(&t); });
  AdamState st = AdamState::for_params(params);
  Rng rng(opt.seed);

  TrainResult res;
  res.losses.reserve(static_cast<std::size_t>(opt.iters));
  res.lrs.reserve(static_cast<std::size_t>(opt.iters));

  std::ofstream csv;
  if (!opt.loss_csv.empty()) {
    csv.open(opt.loss_csv);
    if (!csv) throw InputError("cannot open for writing: " + opt.loss_csv);
    csv << "iteration,lr,loss\n";
  }

  std::vector<Tensor> grads;
  grads.reserve(params.size());
  for (const Tensor* p : params) grads.emplace_back(p->shape);

  for (int iter = 0; iter < opt.iters; ++iter) {
    const double lr = lr_at(opt, iter);
    for (auto& g : grads) g.fill(0.0);
    double loss_sum = 0.0;
    for (int b = 0; b < opt.batch; ++b) {
      const auto& s = data[static_cast<std::size_t>(rng.below(static_cast<int>(data.size())))];
      auto [lr_patch, hr_patch] = sample_patch(s, opt.lr_patch, scale, rng);
      Tape tape(true);
      ModelVars mv = wrap_model(tape, w, true);
      Var out = himamba_forward_var(tape, tape.leaf(std::move(lr_patch), false), mv);
      Var loss = tape.l1_loss(out, std::move(hr_patch));
      loss_sum += loss->value[0];
      tape.backward(loss, 1.0 / opt.batch);
      std::size_t pi = 0;
      visit_params(mv, [&](const std::string&, Var& v) {
        if (v->has_grad())
          for (std::int64_t j = 0; j < grads[pi].numel(); ++j) grads[pi][j] += v->grad[j];
        ++pi;
      });
    }
    adam_step(params, grads, st, lr);
    const double mean_loss = loss_sum / opt.batch;
    res.losses.push_back(mean_loss);
    res.lrs.push_back(lr);
    if (csv.is_open()) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%d,%.8g,%.8g\n", iter, lr, mean_loss);
      csv << buf;
    }
  }
  return res;
}

Tensor synthetic_texture(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  Tensor img({3, h, w});
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;

  // oriented sinusoids, band-limited below the LR Nyquist at x2
  const int waves = 6;
  std::vector<double> fx(waves), fy(waves), ph(waves), amp(waves);
  for (int i = 0; i < waves; ++i) {
    const double freq = rng.uniform(1.0, 12.0);
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    fx[static_cast<std::size_t>(i)] = freq * std::cos(theta);
    fy[static_cast<std::size_t>(i)] = freq * std::sin(theta);
    ph[static_cast<std::size_t>(i)] = rng.uniform(0.0, 2.0 * M_PI);
    amp[static_cast<std::size_t>(i)] = rng.uniform(0.05, 0.22) / (1.0 + 0.06 * freq);
  }
  // a couple of soft radial blobs for low-frequency structure
  const int blobs = 3;
  std::vector<double> bx(blobs), by(blobs), br(blobs), ba(blobs);
  for (int i = 0; i < blobs; ++i) {
    bx[static_cast<std::size_t>(i)] = rng.uniform(0.0, w);
    by[static_cast<std::size_t>(i)] = rng.uniform(0.0, h);
    br[static_cast<std::size_t>(i)] = rng.uniform(0.15, 0.45) * std::min(h, w);
    ba[static_cast<std::size_t>(i)] = rng.uniform(-0.25, 0.25);
  }
  const double gain_r = rng.uniform(0.85, 1.0);
  const double gain_g = rng.uniform(0.85, 1.0);
  const double gain_b = rng.uniform(0.85, 1.0);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.5;
      for (int i = 0; i < waves; ++i)
        v += amp[static_cast<std::size_t>(i)] *
             std::sin(2.0 * M_PI * (fx[static_cast<std::size_t>(i)] * x + fy[static_cast<std::size_t>(i)] * y) / w +
                      ph[static_cast<std::size_t>(i)]);
      for (int i = 0; i < blobs; ++i) {
        const double dx = x - bx[static_cast<std::size_t>(i)], dy = y - by[static_cast<std::size_t>(i)];
        const double r2 = br[static_cast<std::size_t>(i)] * br[static_cast<std::size_t>(i)];
        v += ba[static_cast<std::size_t>(i)] * std::exp(-(dx * dx + dy * dy) / (2.0 * r2));
      }
      v = v < 0.02 ? 0.02 : (v > 0.98 ? 0.98 : v);
      const std::int64_t at = static_cast<std::int64_t>(y) * w + x;
      img[at] = v * gain_r;
      img[hw + at] = v * gain_g;
      img[2 * hw + at] = v * gain_b;
    }
  return img;
}

std::vector<TrainSample> synthetic_dataset(int count, int hr_size, int scale, std::uint64_t seed) {
  if (count < 1 || hr_size < 8 * scale) throw ParamError("synthetic_dataset: bad parameters");
  std::vector<TrainSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    TrainSample s;
    s.hr = synthetic_texture(hr_size, hr_size, seed + static_cast<std::uint64_t>(i) * 7919u + 1u);
    s.lr = bicubic_resize(s.hr, hr_size / scale, hr_size / scale);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace himamba
