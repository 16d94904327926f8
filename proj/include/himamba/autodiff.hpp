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

#include <functional>
#include <memory>
#include <vector>

#include "himamba/scan.hpp"
#include "himamba/tensor.hpp"

// Reverse-mode differentiation over the tensor primitives. A Tape records
// every op application in creation order; since inputs always precede
// outputs, reverse record order is a reverse topological order and gradient
// accumulation is deterministic (single-threaded at the tape level, tied by
// record index; per-op kernels may still parallelize internally).
//
// With recording off the same op methods act as a plain forward evaluator:
// nodes are not retained and intermediates free as their references drop,
// which is the inference path.

namespace himamba {

class Tape;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;   // accumulates into the inputs' grads
  std::function<Tensor()> recompute;     // replays this op from its inputs
  const char* op = "leaf";
  std::size_t index = 0;

  Tensor& g() {
    if (grad.numel() == 0) grad = Tensor(value.shape);
    return grad;
  }
  bool has_grad() const { return grad.numel() != 0; }
};

using Var = std::shared_ptr<Node>;

class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // primitives
  Var linear(const Var& x, const Var& w, const Var& b);  // b may be empty
  Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad, int groups);
  Var layernorm(const Var& x, const Var& gamma, const Var& beta, double eps);
  Var silu(const Var& x);
  Var softplus(const Var& x);
  Var pixel_shuffle(const Var& x, int r);
  Var selective_scan(const Var& u, const Var& a_log, const Var& delta, const Var& b_seq,
                     const Var& c_seq, const Var& d_skip);

  // elementwise and structural
  Var add(const Var& a, const Var& b);
  Var sub(const Var& a, const Var& b);
  Var mul(const Var& a, const Var& b);
  Var scale_channels(const Var& x, const Var& s);  // x [C,H,W], s [C]
  Var clamp01(const Var& x);
  Var repeat_region(const Var& x, int n);
  Var upsample_bilinear(const Var& x, int n);
  Var reflect_pad_br(const Var& x, int pad_bottom, int pad_right);
  Var crop_tl(const Var& x, int h, int w);
  Var channel_slice(const Var& x, int from, int to);  // [C,H,W] channel range
  Var flatten_direction(const Var& x, DirectionOrder dir);
  Var unflatten_direction(const Var& seq, DirectionOrder dir, int c, int h, int w);

  // reductions
  Var sum(const Var& x);
  Var weighted_sum(const Var& x, Tensor weights);
  Var l1_loss(const Var& pred, Tensor target);

  // Backpropagate from a scalar loss through everything recorded. seed is
  // the incoming loss gradient (1/batch when averaging over samples).
  void backward(const Var& loss, double seed = 1.0);

  // Re-run every recorded op from its stored inputs and compare outputs
  // bit-exactly.
  bool replay_bit_exact() const;

 private:
  Var record(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backprop,
             std::function<Tensor()> recompute, const char* op);

  std::vector<Var> nodes_;
  bool recording_;
};

}  // namespace himamba
