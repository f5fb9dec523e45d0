/*
 * Copyright 2026 The diffmia Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DIFFMIA_AUTODIFF_H_
#define DIFFMIA_AUTODIFF_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "diffmia/tensor.h"

namespace diffmia {

class Tape;

// Handle to a node recorded on a Tape. It and references to its value stay
// valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Gradient accumulators for one backward sweep, allocated lazily per node.
class Adjoints {
 public:
  explicit Adjoints(const Tape& tape);

  bool wants(std::size_t node) const;
  bool has(std::size_t node) const { return !buffers_[node].empty(); }
  // Zero-initialized on first access.
  std::span<double> at(std::size_t node);
  std::span<const double> get(std::size_t node) const {
    return buffers_[node];
  }

 private:
  const Tape& tape_;
  std::vector<std::vector<double>> buffers_;
};

// Linear record of primitive applications. Parents always precede children,
// so a reverse index sweep is a valid topological order. A tape belongs to
// the thread that builds it.
class Tape {
 public:
  using BackwardFn =
      std::function<void(std::span<const double> out_grad, Adjoints& adj)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input.
  Var Leaf(Tensor value);
  // Input that never receives a gradient.
  Var Constant(Tensor value);

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t node) const { return nodes_[node].value; }
  bool requires_grad(std::size_t node) const {
    return nodes_[node].requires_grad;
  }
  const char* op(std::size_t node) const { return nodes_[node].op; }
  const std::vector<std::size_t>& parents(std::size_t node) const {
    return nodes_[node].parents;
  }
  const std::vector<Var>& leaves() const { return leaves_; }

  // d(root)/d(leaf) for every leaf, in leaf creation order. Leaves off the
  // path to root get zeros. Throws ContractError for a non-scalar root.
  std::vector<Tensor> Grad(Var root) const;

  // cotangent^T * d(output)/d(input) for one leaf.
  Tensor Vjp(Var output, const Tensor& cotangent, Var input) const;

  // Reverse sweep seeded with `cotangent` at `output`; one tensor per leaf.
  std::vector<Tensor> Backward(Var output, const Tensor& cotangent) const;

  // Primitive implementations append through this.
  Var Record(const char* op, Tensor value, std::vector<std::size_t> parents,
             BackwardFn backward);

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
    const char* op = "";
  };

  Adjoints Sweep(Var output, const Tensor& cotangent) const;

  // A deque keeps value references valid as the tape grows.
  std::deque<Node> nodes_;
  std::vector<Var> leaves_;
};

// Primitive set. Binary ops accept equal shapes, a one-element operand, a
// rank-1 operand matching the trailing axis of a rank-2 one, or a [B, 1]
// column against [B, n]. Anything else raises ShapeError.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Div(Var a, Var b);
Var Matmul(Var a, Var b);  // [n,k]x[k,p] -> [n,p] or [n,k]x[k] -> [n]
Var Sum(Var a);            // -> scalar
Var Mean(Var a);           // -> scalar
Var Square(Var a);
Var Sqrt(Var a);
Var Exp(Var a);
Var Log(Var a);
Var Tanh(Var a);
Var Sin(Var a);
Var Cos(Var a);
Var Broadcast(Var a, const Shape& shape);
Var Slice(Var a, std::size_t begin, std::size_t end);  // along last axis
Var Concat(std::span<const Var> parts);                // along last axis

Var Scale(Var a, double factor);
Var AddScalar(Var a, double value);

inline Var operator+(Var a, Var b) { return Add(a, b); }
inline Var operator-(Var a, Var b) { return Sub(a, b); }
inline Var operator*(Var a, Var b) { return Mul(a, b); }
inline Var operator/(Var a, Var b) { return Div(a, b); }
inline Var operator*(Var a, double s) { return Scale(a, s); }
inline Var operator*(double s, Var a) { return Scale(a, s); }
inline Var operator-(Var a) { return Scale(a, -1.0); }

// A finished recording: the tape, its leaves and the output node.
struct Recording {
  std::unique_ptr<Tape> tape;
  std::vector<Var> leaves;
  Var output;

  const Tensor& value() const { return output.value(); }
};

Recording Forward(const std::function<Var(std::span<const Var>)>& builder,
                  std::vector<Tensor> leaves);

}  // namespace diffmia

#endif  // DIFFMIA_AUTODIFF_H_
