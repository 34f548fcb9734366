/*
 * Copyright 2026 The tabsynth authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tabsynth/util.hpp"

namespace tabsynth::ad {

using Shape = std::vector<std::size_t>;

enum class OpKind {
  leaf,
  matmul,
  add,
  mul,
  relu,
  silu,
  softmax_rows,
  layer_norm,
  concat,
  slice,
  mean,
  sum_squares,
  exp,
  log,
  scale,
  reshape,
};

const char* op_name(OpKind k);

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized on first backward touch
  bool requires_grad = false;
  std::uint64_t id = 0;
  OpKind op = OpKind::leaf;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads. Raw parent
  // pointers are safe: the parents vector keeps them alive.
  std::function<void()> backward_fn;

  std::size_t size() const { return values.size(); }
};

// Value-semantics handle on a shared graph node. Tensors are immutable
// after creation except for the gradient buffer and explicit in-place
// parameter updates performed by the optimizer and the gradient checker.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor param(Shape shape, std::vector<double> values);
  static Tensor scalar(double v) { return constant({1}, {v}); }
  static Tensor zeros(Shape shape, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->values.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->values; }
  // Parameter mutation only; using this on an interior node invalidates
  // downstream values silently, so don't.
  std::span<double> mutable_values() { return node_->values; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();

  double item() const;

  Tensor reshape(Shape shape) const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
  friend Tensor wrap_node(std::shared_ptr<Node>);
};

// Elementwise ops broadcast trailing-aligned shapes where a dimension is
// either equal or 1 (missing leading dimensions count as 1).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Last two dimensions are the matrix; any leading dimensions are a batch.
// B may be rank-2 (shared across the batch) or carry the same batch dims.
// trans_a / trans_b transpose the stored last-two-dims operand.
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);

Tensor relu(const Tensor& t);
Tensor silu(const Tensor& t);
// Softmax over the last axis; every row sums to 1.
Tensor softmax_rows(const Tensor& t);
// Normalizes each last-axis row to zero mean / unit variance. Affine
// scale and shift live outside as ordinary mul/add parameters.
Tensor layer_norm(const Tensor& t, double eps = 1e-5);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& t, std::size_t axis, std::size_t start,
             std::size_t length);
// Scalar reductions over all entries.
Tensor mean(const Tensor& t);
Tensor sum_squares(const Tensor& t);
Tensor exp(const Tensor& t);
Tensor log(const Tensor& t);
Tensor scale(const Tensor& t, double factor);
// Scalar sum of all entries, composed from reshape and matmul.
Tensor sum_all(const Tensor& t);

struct OpAttrs {
  std::size_t axis = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  bool trans_a = false;
  bool trans_b = false;
  double factor = 1.0;
  Shape shape;  // reshape target
};

// Uniform dispatcher over the op set above.
Tensor forward_op(OpKind kind, std::span<const Tensor> inputs,
                  const OpAttrs& attrs = {});

// Reverse-mode sweep from a scalar loss. Gradients accumulate additively
// into every requires_grad tensor reachable from the loss; call zero_grad
// (or Adam::zero_grad) between steps.
void backward(const Tensor& loss);

// When enabled, every op output is scanned for NaN/Inf and reported
// immediately. Defaults to on in debug builds, off in release.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

struct OpRecord {
  std::uint64_t id;
  OpKind op;
  Shape shape;
  std::vector<std::uint64_t> inputs;
};

// Topologically ordered trace of the graph below `root` (inputs always
// precede consumers). Debug / inspection aid.
std::vector<OpRecord> trace(const Tensor& root);

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double lr = 1e-3,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // One update from current gradients. A parameter whose gradient buffer
  // was never populated is an error; an explicit zero gradient is not.
  void step();
  void zero_grad();
  std::size_t step_count() const { return steps_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool passed = false;
  std::size_t coords_checked = 0;
  std::string worst;  // "param#/coord" of the worst coordinate
};

// Central finite differences against the analytic gradient. The builder
// must deterministically rebuild the same loss from the current parameter
// values. Relative error uses max(|analytic|, |fd|, 1e-3) in the
// denominator so near-zero gradients don't blow up the ratio.
GradCheckReport grad_check(std::span<Tensor> params,
                           const std::function<Tensor()>& build_loss,
                           double fd_step = 1e-4, double tolerance = 1e-3);

}  // namespace tabsynth::ad
