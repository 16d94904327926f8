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

#include "himamba/autodiff.hpp"

#include <cmath>

#include "himamba/ops.hpp"

namespace himamba {

namespace {

void acc(Tensor& dst, const Tensor& src) {
  for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

bool any_requires(const std::vector<Var>& inputs) {
  for (const auto& v : inputs)
    if (v && v->requires_grad) return true;
  return false;
}

}  // namespace

Var Tape::record(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backprop,
                 std::function<Tensor()> recompute, const char* op) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op = op;
  if (recording_) {
    n->requires_grad = any_requires(inputs);
    n->inputs = std::move(inputs);
    n->backprop = std::move(backprop);
    n->recompute = std::move(recompute);
    n->index = nodes_.size();
    nodes_.push_back(n);
  }
  return n;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  if (recording_) {
    n->index = nodes_.size();
    nodes_.push_back(n);
  }
  return n;
}

Var Tape::linear(const Var& x, const Var& w, const Var& b) {
  Tensor y = ops::linear(x->value, w->value, b ? &b->value : nullptr);
  auto bp = [x, w, b](Node& n) {
    if (x->requires_grad) ops::linear_dgrad(n.grad, w->value, x->g());
    if (w->requires_grad || (b && b->requires_grad)) {
      Tensor& dw = w->g();
      ops::linear_wgrad(n.grad, x->value, dw, (b && b->requires_grad) ? &b->g() : nullptr);
    }
  };
  auto rc = [x, w, b]() { return ops::linear(x->value, w->value, b ? &b->value : nullptr); };
  return record(std::move(y), {x, w, b}, bp, rc, "linear");
}

Var Tape::conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad, int groups) {
  Tensor y = ops::conv2d(x->value, w->value, b ? &b->value : nullptr, stride, pad, groups);
  auto bp = [x, w, b, stride, pad, groups](Node& n) {
    if (x->requires_grad) ops::conv2d_dgrad(n.grad, w->value, x->g(), stride, pad, groups);
    if (w->requires_grad || (b && b->requires_grad))
      ops::conv2d_wgrad(n.grad, x->value, w->g(), (b && b->requires_grad) ? &b->g() : nullptr,
                        stride, pad, groups);
  };
  auto rc = [x, w, b, stride, pad, groups]() {
    return ops::conv2d(x->value, w->value, b ? &b->value : nullptr, stride, pad, groups);
  };
  return record(std::move(y), {x, w, b}, bp, rc, "conv2d");
}

Var Tape::layernorm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tensor y = ops::layernorm(x->value, gamma->value, beta->value, eps);
  auto bp = [x, gamma, beta, eps](Node& n) {
    if (x->requires_grad) ops::layernorm_xgrad(n.grad, x->value, gamma->value, x->g(), eps);
    if (gamma->requires_grad || beta->requires_grad)
      ops::layernorm_agrad(n.grad, x->value, gamma->g(), beta->g(), eps);
  };
  auto rc = [x, gamma, beta, eps]() { return ops::layernorm(x->value, gamma->value, beta->value, eps); };
  return record(std::move(y), {x, gamma, beta}, bp, rc, "layernorm");
}

Var Tape::silu(const Var& x) {
  Tensor y = ops::silu(x->value);
  auto bp = [x](Node& n) {
    if (x->requires_grad) ops::silu_bwd(n.grad, x->value, x->g());
  };
  auto rc = [x]() { return ops::silu(x->value); };
  return record(std::move(y), {x}, bp, rc, "silu");
}

Var Tape::softplus(const Var& x) {
  Tensor y = ops::softplus(x->value);
  auto bp = [x](Node& n) {
    if (x->requires_grad) ops::softplus_bwd(n.grad, x->value, x->g());
  };
  auto rc = [x]() { return ops::softplus(x->value); };
  return record(std::move(y), {x}, bp, rc, "softplus");
}

Var Tape::pixel_shuffle(const Var& x, int r) {
  Tensor y = ops::pixel_shuffle(x->value, r);
  auto bp = [x, r](Node& n) {
    if (x->requires_grad) acc(x->g(), ops::pixel_unshuffle(n.grad, r));
  };
  auto rc = [x, r]() { return ops::pixel_shuffle(x->value, r); };
  return record(std::move(y), {x}, bp, rc, "pixel_shuffle");
}

Var Tape::selective_scan(const Var& u, const Var& a_log, const Var& delta, const Var& b_seq,
                         const Var& c_seq, const Var& d_skip) {
  SelectiveParams p{a_log->value, delta->value, b_seq->value, c_seq->value, d_skip->value};
  auto saved = std::make_shared<ScanSaved>();
  Tensor y = recording_ ? selective_scan_saved(u->value, p, *saved) : himamba::selective_scan(u->value, p);
  auto bp = [u, a_log, delta, b_seq, c_seq, d_skip, saved](Node& n) {
    SelectiveParams p2{a_log->value, delta->value, b_seq->value, c_seq->value, d_skip->value};
    ScanGrads g{Tensor(u->value.shape),     Tensor(a_log->value.shape), Tensor(delta->value.shape),
                Tensor(b_seq->value.shape), Tensor(c_seq->value.shape), Tensor(d_skip->value.shape)};
    selective_scan_bwd(n.grad, u->value, p2, *saved, g);
    if (u->requires_grad) acc(u->g(), g.du);
    if (a_log->requires_grad) acc(a_log->g(), g.da_log);
    if (delta->requires_grad) acc(delta->g(), g.ddelta);
    if (b_seq->requires_grad) acc(b_seq->g(), g.db_seq);
    if (c_seq->requires_grad) acc(c_seq->g(), g.dc_seq);
    if (d_skip->requires_grad) acc(d_skip->g(), g.dd_skip);
  };
  auto rc = [u, a_log, delta, b_seq, c_seq, d_skip]() {
    SelectiveParams p2{a_log->value, delta->value, b_seq->value, c_seq->value, d_skip->value};
    return himamba::selective_scan(u->value, p2);
  };
  return record(std::move(y), {u, a_log, delta, b_seq, c_seq, d_skip}, bp, rc, "selective_scan");
}

Var Tape::add(const Var& a, const Var& b) {
  Tensor y = ops::add(a->value, b->value);
  auto bp = [a, b](Node& n) {
    if (a->requires_grad) acc(a->g(), n.grad);
    if (b->requires_grad) acc(b->g(), n.grad);
  };
  auto rc = [a, b]() { return ops::add(a->value, b->value); };
  return record(std::move(y), {a, b}, bp, rc, "add");
}

Var Tape::sub(const Var& a, const Var& b) {
  Tensor y = ops::sub(a->value, b->value);
  auto bp = [a, b](Node& n) {
    if (a->requires_grad) acc(a->g(), n.grad);
    if (b->requires_grad) {
      Tensor& g = b->g();
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
    }
  };
  auto rc = [a, b]() { return ops::sub(a->value, b->value); };
  return record(std::move(y), {a, b}, bp, rc, "sub");
}

Var Tape::mul(const Var& a, const Var& b) {
  Tensor y = ops::mul(a->value, b->value);
  auto bp = [a, b](Node& n) {
    if (a->requires_grad) acc(a->g(), ops::mul(n.grad, b->value));
    if (b->requires_grad) acc(b->g(), ops::mul(n.grad, a->value));
  };
  auto rc = [a, b]() { return ops::mul(a->value, b->value); };
  return record(std::move(y), {a, b}, bp, rc, "mul");
}

Var Tape::scale_channels(const Var& x, const Var& s) {
  Tensor y = ops::scale_channels(x->value, s->value);
  auto bp = [x, s](Node& n) {
    const int c = x->value.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(x->value.dim(1)) * x->value.dim(2);
    if (x->requires_grad) {
      Tensor& gx = x->g();
      for (int cc = 0; cc < c; ++cc)
        for (std::int64_t i = 0; i < hw; ++i) gx[cc * hw + i] += n.grad[cc * hw + i] * s->value[cc];
    }
    if (s->requires_grad) {
      Tensor& gs = s->g();
      for (int cc = 0; cc < c; ++cc) {
        double a = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) a += n.grad[cc * hw + i] * x->value[cc * hw + i];
        gs[cc] += a;
      }
    }
  };
  auto rc = [x, s]() { return ops::scale_channels(x->value, s->value); };
  return record(std::move(y), {x, s}, bp, rc, "scale_channels");
}

Var Tape::clamp01(const Var& x) {
  Tensor y = ops::clamp01(x->value);
  auto bp = [x](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->g();
    for (std::int64_t i = 0; i < g.numel(); ++i)
      if (x->value[i] > 0.0 && x->value[i] < 1.0) g[i] += n.grad[i];
  };
  auto rc = [x]() { return ops::clamp01(x->value); };
  return record(std::move(y), {x}, bp, rc, "clamp01");
}

Var Tape::repeat_region(const Var& x, int n_region) {
  Tensor y = ops::repeat_region(x->value, n_region);
  auto bp = [x, n_region](Node& n) {
    if (x->requires_grad) acc(x->g(), ops::block_sum(n.grad, n_region));
  };
  auto rc = [x, n_region]() { return ops::repeat_region(x->value, n_region); };
  return record(std::move(y), {x}, bp, rc, "repeat_region");
}

Var Tape::upsample_bilinear(const Var& x, int n_factor) {
  Tensor y = ops::upsample_bilinear(x->value, n_factor);
  const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  auto bp = [x, n_factor, c, h, w](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->g();
    const int ho = n_factor * h, wo = n_factor * w;
    // sequential scatter with the forward interpolation weights
    for (int cc = 0; cc < c; ++cc)
      for (int oy = 0; oy < ho; ++oy) {
        const double sy = (oy + 0.5) / n_factor - 0.5;
        const int y0 = static_cast<int>(std::floor(sy));
        const double fy = sy - y0;
        const int y0c = std::min(std::max(y0, 0), h - 1), y1c = std::min(std::max(y0 + 1, 0), h - 1);
        for (int ox = 0; ox < wo; ++ox) {
          const double sx = (ox + 0.5) / n_factor - 0.5;
          const int x0 = static_cast<int>(std::floor(sx));
          const double fx = sx - x0;
          const int x0c = std::min(std::max(x0, 0), w - 1), x1c = std::min(std::max(x0 + 1, 0), w - 1);
          const double gy = n.grad[(static_cast<std::int64_t>(cc) * ho + oy) * wo + ox];
          double* gp = g.ptr() + static_cast<std::int64_t>(cc) * h * w;
          gp[static_cast<std::int64_t>(y0c) * w + x0c] += gy * (1 - fy) * (1 - fx);
          gp[static_cast<std::int64_t>(y0c) * w + x1c] += gy * (1 - fy) * fx;
          gp[static_cast<std::int64_t>(y1c) * w + x0c] += gy * fy * (1 - fx);
          gp[static_cast<std::int64_t>(y1c) * w + x1c] += gy * fy * fx;
        }
      }
  };
  auto rc = [x, n_factor]() { return ops::upsample_bilinear(x->value, n_factor); };
  return record(std::move(y), {x}, bp, rc, "upsample_bilinear");
}

Var Tape::reflect_pad_br(const Var& x, int pad_bottom, int pad_right) {
  Tensor y = ops::reflect_pad_br(x->value, pad_bottom, pad_right);
  const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  auto bp = [x, c, h, w, pad_bottom, pad_right](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->g();
    const int ho = h + pad_bottom, wo = w + pad_right;
    for (int cc = 0; cc < c; ++cc)
      for (int yy = 0; yy < ho; ++yy) {
        const int sy = yy < h ? yy : 2 * h - 2 - yy;
        for (int xx = 0; xx < wo; ++xx) {
          const int sx = xx < w ? xx : 2 * w - 2 - xx;
          g[(static_cast<std::int64_t>(cc) * h + sy) * w + sx] +=
              n.grad[(static_cast<std::int64_t>(cc) * ho + yy) * wo + xx];
        }
      }
  };
  auto rc = [x, pad_bottom, pad_right]() { return ops::reflect_pad_br(x->value, pad_bottom, pad_right); };
  return record(std::move(y), {x}, bp, rc, "reflect_pad_br");
}

Var Tape::crop_tl(const Var& x, int h, int w) {
  Tensor y = ops::crop_tl(x->value, h, w);
  auto bp = [x, h, w](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->g();
    const int c = x->value.dim(0), hin = x->value.dim(1), win = x->value.dim(2);
    for (int cc = 0; cc < c; ++cc)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
          g[(static_cast<std::int64_t>(cc) * hin + yy) * win + xx] +=
              n.grad[(static_cast<std::int64_t>(cc) * h + yy) * w + xx];
  };
  auto rc = [x, h, w]() { return ops::crop_tl(x->value, h, w); };
  return record(std::move(y), {x}, bp, rc, "crop_tl");
}

Var Tape::channel_slice(const Var& x, int from, int to) {
  const Tensor& xv = x->value;
  if (xv.rank() != 3 || from < 0 || to > xv.dim(0) || from >= to)
    throw ShapeError("channel_slice: bad range [" + std::to_string(from) + "," + std::to_string(to) +
                     ") for " + shape_str(xv.shape));
  const int h = xv.dim(1), w = xv.dim(2);
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  Tensor y({to - from, h, w});
  for (std::int64_t i = 0; i < y.numel(); ++i) y[i] = xv[from * hw + i];
  auto bp = [x, from, hw](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->g();
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) g[from * hw + i] += n.grad[i];
  };
  auto rc = [x, from, to, h, w, hw]() {
    Tensor y2({to - from, h, w});
    for (std::int64_t i = 0; i < y2.numel(); ++i) y2[i] = x->value[from * hw + i];
    return y2;
  };
  return record(std::move(y), {x}, bp, rc, "channel_slice");
}

Var Tape::flatten_direction(const Var& x, DirectionOrder dir) {
  Tensor y = himamba::flatten_direction(x->value, dir);
  const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
  auto bp = [x, dir, c, h, w](Node& n) {
    if (x->requires_grad) acc(x->g(), himamba::unflatten_direction(n.grad, dir, c, h, w));
  };
  auto rc = [x, dir]() { return himamba::flatten_direction(x->value, dir); };
  return record(std::move(y), {x}, bp, rc, "flatten_direction");
}

Var Tape::unflatten_direction(const Var& seq, DirectionOrder dir, int c, int h, int w) {
  Tensor y = himamba::unflatten_direction(seq->value, dir, c, h, w);
  auto bp = [seq, dir](Node& n) {
    if (seq->requires_grad) acc(seq->g(), himamba::flatten_direction(n.grad, dir));
  };
  auto rc = [seq, dir, c, h, w]() { return himamba::unflatten_direction(seq->value, dir, c, h, w); };
  return record(std::move(y), {seq}, bp, rc, "unflatten_direction");
}

Var Tape::sum(const Var& x) {
  Tensor y = Tensor::scalar(ops::sum(x->value));
  auto bp = [x](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->g();
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[0];
  };
  auto rc = [x]() { return Tensor::scalar(ops::sum(x->value)); };
  return record(std::move(y), {x}, bp, rc, "sum");
}

Var Tape::weighted_sum(const Var& x, Tensor weights) {
  if (!x->value.same_shape(weights)) throw ShapeError("weighted_sum: shape mismatch");
  auto wp = std::make_shared<Tensor>(std::move(weights));
  double acc_v = 0.0;
  for (std::int64_t i = 0; i < x->value.numel(); ++i) acc_v += x->value[i] * (*wp)[i];
  auto bp = [x, wp](Node& n) {
    if (!x->requires_grad) return;
    Tensor& g = x->g();
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[0] * (*wp)[i];
  };
  auto rc = [x, wp]() {
    double a = 0.0;
    for (std::int64_t i = 0; i < x->value.numel(); ++i) a += x->value[i] * (*wp)[i];
    return Tensor::scalar(a);
  };
  return record(Tensor::scalar(acc_v), {x}, bp, rc, "weighted_sum");
}

Var Tape::l1_loss(const Var& pred, Tensor target) {
  if (!pred->value.same_shape(target))
    throw ShapeError("l1_loss: shape mismatch " + shape_str(pred->value.shape) + " vs " + shape_str(target.shape));
  auto tp = std::make_shared<Tensor>(std::move(target));
  const std::int64_t count = pred->value.numel();
  double acc_v = 0.0;
  for (std::int64_t i = 0; i < count; ++i) acc_v += std::fabs(pred->value[i] - (*tp)[i]);
  acc_v /= static_cast<double>(count);
  auto bp = [pred, tp, count](Node& n) {
    if (!pred->requires_grad) return;
    Tensor& g = pred->g();
    // subgradient 0 at exact ties
    for (std::int64_t i = 0; i < count; ++i) {
      const double d = pred->value[i] - (*tp)[i];
      const double s = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
      g[i] += n.grad[0] * s / static_cast<double>(count);
    }
  };
  auto rc = [pred, tp, count]() {
    double a = 0.0;
    for (std::int64_t i = 0; i < count; ++i) a += std::fabs(pred->value[i] - (*tp)[i]);
    return Tensor::scalar(a / static_cast<double>(count));
  };
  return record(Tensor::scalar(acc_v), {pred}, bp, rc, "l1_loss");
}

void Tape::backward(const Var& loss, double seed) {
  if (!recording_) throw ContractError("backward() requires a recording tape");
  if (!loss || loss->value.numel() != 1) throw ContractError("backward() requires a scalar loss");
  loss->g()[0] += seed;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (!n.requires_grad || !n.backprop || !n.has_grad()) continue;
    n.backprop(n);
  }
}

bool Tape::replay_bit_exact() const {
  for (const auto& n : nodes_) {
    if (!n->recompute) continue;
    Tensor again = n->recompute();
    if (!bit_equal(again, n->value)) return false;
  }
  return true;
}

}  // namespace himamba
