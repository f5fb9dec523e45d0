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

#ifndef DIFFMIA_TENSOR_H_
#define DIFFMIA_TENSOR_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace diffmia {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);
std::size_t NumElements(const Shape& shape);

// Dense row-major array of doubles. Storage is shared and never mutated after
// construction, so copies are cheap and tensors may be read from any thread.
class Tensor {
 public:
  // A rank-1 tensor with zero elements.
  Tensor();
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value);
  static Tensor Vector(std::vector<double> values);
  static Tensor Matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor Zeros(Shape shape);
  static Tensor Full(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_->size(); }
  std::span<const double> data() const { return *data_; }

  double operator[](std::size_t i) const { return (*data_)[i]; }
  double at(std::size_t row, std::size_t col) const {
    return (*data_)[row * shape_.back() + col];
  }
  // The single value of a one-element tensor.
  double item() const;

  // Number of rows when viewed as a matrix whose columns are the last axis.
  std::size_t rows() const;
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }

  Tensor Reshape(Shape shape) const;
  // Row `r` of a rank-2 tensor as a rank-1 tensor.
  Tensor Row(std::size_t r) const;
  std::vector<double> ToVector() const { return *data_; }
  bool AllFinite() const;

 private:
  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
};

// Stacks equally sized rank-1 tensors (or spans) into a [n, m] matrix.
Tensor StackRows(std::span<const Tensor> rows);
Tensor StackRows(std::span<const std::vector<double>> rows);

}  // namespace diffmia

#endif  // DIFFMIA_TENSOR_H_
