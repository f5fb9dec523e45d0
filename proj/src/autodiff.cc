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

#include "diffmia/autodiff.h"

#include <cmath>
#include <string>
#include <utility>

#include "diffmia/errors.h"
#include "diffmia/kernels.h"

namespace diffmia {

const Tensor& Var::value() const { return tape_->value(index_); }

Adjoints::Adjoints(const Tape& tape) : tape_(tape), buffers_(tape.size()) {}

bool Adjoints::wants(std::size_t node) const {
  return tape_.requires_grad(node);
}

std::span<double> Adjoints::at(std::size_t node) {
  auto& buf = buffers_[node];
  if (buf.empty()) buf.assign(tape_.value(node).size(), 0.0);
  return buf;
}

Var Tape::Leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, true, "leaf"});
  Var v(this, nodes_.size() - 1);
  leaves_.push_back(v);
  return v;
}

Var Tape::Constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false, "constant"});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(const char* op, Tensor value,
                 std::vector<std::size_t> parents, BackwardFn backward) {
  bool requires_grad = false;
  for (std::size_t p : parents) requires_grad |= nodes_[p].requires_grad;
  if (!requires_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), std::move(parents),
                        std::move(backward), requires_grad, op});
  return Var(this, nodes_.size() - 1);
}

Adjoints Tape::Sweep(Var output, const Tensor& cotangent) const {
  if (output.tape() != this) {
    throw ContractError("backward: output node belongs to another tape");
  }
  const Tensor& out = value(output.index());
  if (cotangent.shape() != out.shape()) {
    throw ShapeError("vjp: cotangent shape " + ShapeString(cotangent.shape()) +
                     " differs from output shape " + ShapeString(out.shape()));
  }
  Adjoints adj(*this);
  if (!nodes_[output.index()].requires_grad) return adj;
  auto seed = adj.at(output.index());
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = cotangent[i];
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.backward || !adj.has(i)) continue;
    node.backward(adj.get(i), adj);
  }
  return adj;
}

std::vector<Tensor> Tape::Backward(Var output, const Tensor& cotangent) const {
  Adjoints adj = Sweep(output, cotangent);
  std::vector<Tensor> grads;
  grads.reserve(leaves_.size());
  for (const Var& leaf : leaves_) {
    const Tensor& v = value(leaf.index());
    if (adj.has(leaf.index())) {
      auto g = adj.get(leaf.index());
      grads.emplace_back(v.shape(), std::vector<double>(g.begin(), g.end()));
    } else {
      grads.push_back(Tensor::Zeros(v.shape()));
    }
  }
  return grads;
}

std::vector<Tensor> Tape::Grad(Var root) const {
  const Tensor& r = value(root.index());
  if (r.size() != 1) {
    throw ContractError("grad: root must be a scalar, got shape " +
                        ShapeString(r.shape()));
  }
  return Backward(root, Tensor(r.shape(), {1.0}));
}

Tensor Tape::Vjp(Var output, const Tensor& cotangent, Var input) const {
  if (input.tape() != this || !nodes_[input.index()].requires_grad ||
      !nodes_[input.index()].parents.empty()) {
    throw ContractError("vjp: input must be a leaf of this tape");
  }
  Adjoints adj = Sweep(output, cotangent);
  const Tensor& v = value(input.index());
  if (!adj.has(input.index())) return Tensor::Zeros(v.shape());
  auto g = adj.get(input.index());
  return Tensor(v.shape(), std::vector<double>(g.begin(), g.end()));
}

namespace {

enum class Bcast { kFull, kScalar, kRow, kCol };

struct Operand {
  Bcast mode = Bcast::kFull;
  std::size_t width = 1;  // trailing extent of the output

  std::size_t Index(std::size_t i) const {
    switch (mode) {
      case Bcast::kFull:
        return i;
      case Bcast::kScalar:
        return 0;
      case Bcast::kRow:
        return i % width;
      case Bcast::kCol:
        return i / width;
    }
    return i;
  }
};

// Mode for expanding `from` to `to`, or false if not an allowed broadcast.
bool Expands(const Shape& from, const Shape& to, Operand* op) {
  const std::size_t width = to.empty() ? 1 : to.back();
  if (from == to) {
    *op = {Bcast::kFull, width};
    return true;
  }
  if (NumElements(from) == 1) {
    *op = {Bcast::kScalar, width};
    return true;
  }
  if (to.size() == 2 && from.size() == 1 && from[0] == to[1]) {
    *op = {Bcast::kRow, width};
    return true;
  }
  if (to.size() == 2 && from.size() == 2 && from[0] == to[0] &&
      from[1] == 1) {
    *op = {Bcast::kCol, width};
    return true;
  }
  return false;
}

struct BinaryPlan {
  Shape shape;
  Operand a;
  Operand b;
};

BinaryPlan PlanBinary(const char* op, const Shape& sa, const Shape& sb) {
  BinaryPlan plan;
  if (Expands(sb, sa, &plan.b)) {
    plan.shape = sa;
    plan.a = {Bcast::kFull, sa.empty() ? 1 : sa.back()};
    return plan;
  }
  if (Expands(sa, sb, &plan.a)) {
    plan.shape = sb;
    plan.b = {Bcast::kFull, sb.empty() ? 1 : sb.back()};
    return plan;
  }
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   ShapeString(sa) + " and " + ShapeString(sb));
}

// Scatter-add a contribution computed per output element back onto an
// operand that may have been broadcast.
template <typename F>
void Reduce(Adjoints& adj, std::size_t node, const Operand& op,
            std::size_t n, F contribution) {
  if (!adj.wants(node)) return;
  auto g = adj.at(node);
  for (std::size_t i = 0; i < n; ++i) g[op.Index(i)] += contribution(i);
}

template <typename F, typename DA, typename DB>
Var Binary(const char* name, Var a, Var b, F f, DA da, DB db) {
  if (a.tape() != b.tape()) {
    throw ContractError(std::string(name) + ": operands on different tapes");
  }
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  BinaryPlan plan = PlanBinary(name, x.shape(), y.shape());
  const std::size_t n = NumElements(plan.shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(x[plan.a.Index(i)], y[plan.b.Index(i)]);
  }
  const std::size_t ia = a.index();
  const std::size_t ib = b.index();
  return a.tape()->Record(
      name, Tensor(plan.shape, std::move(out)), {ia, ib},
      [x, y, plan, n, ia, ib, da, db](std::span<const double> g,
                                      Adjoints& adj) {
        Reduce(adj, ia, plan.a, n, [&](std::size_t i) {
          return da(g[i], x[plan.a.Index(i)], y[plan.b.Index(i)]);
        });
        Reduce(adj, ib, plan.b, n, [&](std::size_t i) {
          return db(g[i], x[plan.a.Index(i)], y[plan.b.Index(i)]);
        });
      });
}

// Elementwise unary op; `df(g, x, y)` receives the forward input and output.
template <typename F, typename DF>
Var Unary(const char* name, Var a, F f, DF df) {
  const Tensor& x = a.value();
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(x[i]);
  Tensor y(x.shape(), std::move(out));
  const std::size_t ia = a.index();
  return a.tape()->Record(
      name, y, {ia}, [x, y, n, ia, df](std::span<const double> g,
                                       Adjoints& adj) {
        if (!adj.wants(ia)) return;
        auto ga = adj.at(ia);
        for (std::size_t i = 0; i < n; ++i) ga[i] += df(g[i], x[i], y[i]);
      });
}

}  // namespace

Var Add(Var a, Var b) {
  return Binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Var Sub(Var a, Var b) {
  return Binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Var Mul(Var a, Var b) {
  return Binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var Div(Var a, Var b) {
  return Binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double g, double, double y) { return g / y; },
      [](double g, double x, double y) { return -g * x / (y * y); });
}

Var Scale(Var a, double factor) {
  return Unary(
      "mul", a, [factor](double x) { return factor * x; },
      [factor](double g, double, double) { return factor * g; });
}

Var AddScalar(Var a, double value) {
  return Unary(
      "add", a, [value](double x) { return x + value; },
      [](double g, double, double) { return g; });
}

Var Square(Var a) {
  return Unary(
      "square", a, [](double x) { return x * x; },
      [](double g, double x, double) { return 2.0 * x * g; });
}

Var Sqrt(Var a) {
  return Unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double g, double, double y) { return g / (2.0 * y); });
}

Var Exp(Var a) {
  return Unary(
      "exp", a, [](double x) { return std::exp(x); },
      [](double g, double, double y) { return g * y; });
}

Var Log(Var a) {
  return Unary(
      "log", a, [](double x) { return std::log(x); },
      [](double g, double x, double) { return g / x; });
}

Var Tanh(Var a) {
  return Unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double g, double, double y) { return g * (1.0 - y * y); });
}

Var Sin(Var a) {
  return Unary(
      "sin", a, [](double x) { return std::sin(x); },
      [](double g, double x, double) { return g * std::cos(x); });
}

Var Cos(Var a) {
  return Unary(
      "cos", a, [](double x) { return std::cos(x); },
      [](double g, double x, double) { return -g * std::sin(x); });
}

Var Matmul(Var a, Var b) {
  if (a.tape() != b.tape()) {
    throw ContractError("matmul: operands on different tapes");
  }
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const bool vec = y.rank() == 1;
  if (x.rank() != 2 || (y.rank() != 2 && !vec) || x.dim(1) != y.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + ShapeString(x.shape()) +
                     " and " + ShapeString(y.shape()));
  }
  const std::size_t n = x.dim(0);
  const std::size_t k = x.dim(1);
  const std::size_t p = vec ? 1 : y.dim(1);
  std::vector<double> out(n * p);
  kernels::Matmul(x.data().data(), y.data().data(), out.data(), n, k, p);
  Shape shape = vec ? Shape{n} : Shape{n, p};
  const std::size_t ia = a.index();
  const std::size_t ib = b.index();
  return a.tape()->Record(
      "matmul", Tensor(shape, std::move(out)), {ia, ib},
      [x, y, n, k, p, ia, ib](std::span<const double> g, Adjoints& adj) {
        std::vector<double> tmp;
        if (adj.wants(ia)) {
          // dA[n,k] = G[n,p] * B[k,p]^T
          tmp.resize(n * k);
          kernels::MatmulNT(g.data(), y.data().data(), tmp.data(), n, p, k);
          auto ga = adj.at(ia);
          for (std::size_t i = 0; i < tmp.size(); ++i) ga[i] += tmp[i];
        }
        if (adj.wants(ib)) {
          // dB[k,p] = A[n,k]^T * G[n,p]
          tmp.resize(k * p);
          kernels::MatmulTN(x.data().data(), g.data(), tmp.data(), k, n, p);
          auto gb = adj.at(ib);
          for (std::size_t i = 0; i < tmp.size(); ++i) gb[i] += tmp[i];
        }
      });
}

Var Sum(Var a) {
  const Tensor& x = a.value();
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const std::size_t ia = a.index();
  const std::size_t n = x.size();
  return a.tape()->Record(
      "sum", Tensor::Scalar(acc), {ia},
      [ia, n](std::span<const double> g, Adjoints& adj) {
        if (!adj.wants(ia)) return;
        auto ga = adj.at(ia);
        for (std::size_t i = 0; i < n; ++i) ga[i] += g[0];
      });
}

Var Mean(Var a) {
  const Tensor& x = a.value();
  const std::size_t n = x.size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  const std::size_t ia = a.index();
  return a.tape()->Record(
      "mean", Tensor::Scalar(acc / static_cast<double>(n)), {ia},
      [ia, n](std::span<const double> g, Adjoints& adj) {
        if (!adj.wants(ia)) return;
        auto ga = adj.at(ia);
        const double share = g[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) ga[i] += share;
      });
}

Var Broadcast(Var a, const Shape& shape) {
  const Tensor& x = a.value();
  Operand op;
  if (!Expands(x.shape(), shape, &op)) {
    throw ShapeError("broadcast: cannot expand " + ShapeString(x.shape()) +
                     " to " + ShapeString(shape));
  }
  const std::size_t n = NumElements(shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x[op.Index(i)];
  const std::size_t ia = a.index();
  return a.tape()->Record(
      "broadcast", Tensor(shape, std::move(out)), {ia},
      [ia, op, n](std::span<const double> g, Adjoints& adj) {
        Reduce(adj, ia, op, n, [&](std::size_t i) { return g[i]; });
      });
}

Var Slice(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (x.rank() == 0 || begin > end || end > x.cols()) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for shape " +
                     ShapeString(x.shape()));
  }
  const std::size_t rows = x.rows();
  const std::size_t cols = x.cols();
  const std::size_t width = end - begin;
  std::vector<double> out(rows * width);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      out[r * width + c] = x[r * cols + begin + c];
    }
  }
  Shape shape = x.shape();
  shape.back() = width;
  const std::size_t ia = a.index();
  return a.tape()->Record(
      "slice", Tensor(shape, std::move(out)), {ia},
      [ia, rows, cols, width, begin](std::span<const double> g,
                                     Adjoints& adj) {
        if (!adj.wants(ia)) return;
        auto ga = adj.at(ia);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < width; ++c) {
            ga[r * cols + begin + c] += g[r * width + c];
          }
        }
      });
}

Var Concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Tape* tape = parts[0].tape();
  const Tensor& first = parts[0].value();
  const std::size_t rows = first.rows();
  std::vector<std::size_t> widths;
  std::vector<std::size_t> parents;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (p.tape() != tape || v.rank() != first.rank() || v.rank() == 0 ||
        v.rows() != rows ||
        (v.rank() == 2 && v.dim(0) != first.dim(0))) {
      throw ShapeError("concat: shape " + ShapeString(v.shape()) +
                       " incompatible with " + ShapeString(first.shape()));
    }
    widths.push_back(v.cols());
    parents.push_back(p.index());
    total += v.cols();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < widths[k]; ++c) {
        out[r * total + offset + c] = v[r * widths[k] + c];
      }
    }
    offset += widths[k];
  }
  Shape shape = first.shape();
  shape.back() = total;
  return tape->Record(
      "concat", Tensor(shape, std::move(out)), parents,
      [parents, widths, rows, total](std::span<const double> g,
                                     Adjoints& adj) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < parents.size(); ++k) {
          if (adj.wants(parents[k])) {
            auto gp = adj.at(parents[k]);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t c = 0; c < widths[k]; ++c) {
                gp[r * widths[k] + c] += g[r * total + offset + c];
              }
            }
          }
          offset += widths[k];
        }
      });
}

Recording Forward(const std::function<Var(std::span<const Var>)>& builder,
                  std::vector<Tensor> leaves) {
  Recording rec;
  rec.tape = std::make_unique<Tape>();
  for (Tensor& t : leaves) rec.leaves.push_back(rec.tape->Leaf(std::move(t)));
  rec.output = builder(rec.leaves);
  return rec;
}

}  // namespace diffmia
