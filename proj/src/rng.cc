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

#include "diffmia/rng.h"

#include <bit>
#include <numeric>

namespace diffmia {
namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

Rng Rng::Derive(std::uint64_t seed,
                std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = SplitMix64(seed);
  for (std::uint64_t k : key) h = SplitMix64(h ^ SplitMix64(k + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

double Rng::Normal() { return normal_(engine_); }

double Rng::Uniform() {
  return std::generate_canonical<double, 53>(engine_);
}

double Rng::Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

double Rng::Rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

std::uint64_t Rng::Below(std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

Tensor Rng::NormalTensor(const Shape& shape) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = Normal();
  return Tensor(shape, std::move(v));
}

Tensor Rng::RademacherTensor(const Shape& shape) {
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = Rademacher();
  return Tensor(shape, std::move(v));
}

std::vector<std::size_t> Rng::SampleWithoutReplacement(std::size_t n,
                                                       std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(Below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::uint64_t DoubleKey(double value) {
  return std::bit_cast<std::uint64_t>(value);
}

}  // namespace diffmia
