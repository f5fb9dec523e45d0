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

#ifndef DIFFMIA_RNG_H_
#define DIFFMIA_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

#include "diffmia/tensor.h"

namespace diffmia {

// Seeded pseudo-random stream. Streams derived from the same (seed, key)
// tuple are identical, which lets parallel work items draw independently of
// scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Stream keyed by seed plus an ordered tuple of integers.
  static Rng Derive(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

  double Normal();
  double Uniform();  // [0, 1)
  double Uniform(double lo, double hi);
  double Rademacher();
  std::uint64_t Below(std::uint64_t n);  // uniform integer in [0, n)

  Tensor NormalTensor(const Shape& shape);
  Tensor RademacherTensor(const Shape& shape);

  // k distinct indices from [0, n) in draw order.
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                    std::size_t k);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Bit pattern of a double, for keying streams by continuous time.
std::uint64_t DoubleKey(double value);

}  // namespace diffmia

#endif  // DIFFMIA_RNG_H_
