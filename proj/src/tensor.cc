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

#include "diffmia/tensor.h"

#include <cmath>
#include <sstream>
#include <utility>

#include "diffmia/errors.h"

namespace diffmia {

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << ", ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor()
    : shape_{0}, data_(std::make_shared<const std::vector<double>>()) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)) {
  if (NumElements(shape_) != data.size()) {
    throw ShapeError("Tensor: shape " + ShapeString(shape_) + " holds " +
                     std::to_string(NumElements(shape_)) +
                     " elements but data has " + std::to_string(data.size()));
  }
  data_ = std::make_shared<const std::vector<double>>(std::move(data));
}

Tensor Tensor::Scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::Vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::Matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::Zeros(Shape shape) { return Full(std::move(shape), 0.0); }

Tensor Tensor::Full(Shape shape, double value) {
  const std::size_t n = NumElements(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item: tensor of shape " + ShapeString(shape_) +
                     " is not a single value");
  }
  return (*data_)[0];
}

std::size_t Tensor::rows() const {
  if (shape_.size() <= 1) return 1;
  return size() / shape_.back();
}

Tensor Tensor::Reshape(Shape shape) const {
  if (NumElements(shape) != size()) {
    throw ShapeError("reshape: cannot view " + ShapeString(shape_) + " as " +
                     ShapeString(shape));
  }
  Tensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

Tensor Tensor::Row(std::size_t r) const {
  if (rank() != 2 || r >= shape_[0]) {
    throw ShapeError("row: index " + std::to_string(r) + " invalid for " +
                     ShapeString(shape_));
  }
  const std::size_t m = shape_[1];
  return Tensor::Vector(std::vector<double>(data_->begin() + r * m,
                                            data_->begin() + (r + 1) * m));
}

bool Tensor::AllFinite() const {
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor StackRows(std::span<const Tensor> rows) {
  if (rows.empty()) return Tensor({0, 0}, {});
  const std::size_t m = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * m);
  for (const Tensor& r : rows) {
    if (r.size() != m) {
      throw ShapeError("StackRows: row of shape " + ShapeString(r.shape()) +
                       " does not match width " + std::to_string(m));
    }
    out.insert(out.end(), r.data().begin(), r.data().end());
  }
  return Tensor::Matrix(rows.size(), m, std::move(out));
}

Tensor StackRows(std::span<const std::vector<double>> rows) {
  if (rows.empty()) return Tensor({0, 0}, {});
  const std::size_t m = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * m);
  for (const auto& r : rows) {
    if (r.size() != m) {
      throw ShapeError("StackRows: ragged rows");
    }
    out.insert(out.end(), r.begin(), r.end());
  }
  return Tensor::Matrix(rows.size(), m, std::move(out));
}

}  // namespace diffmia
