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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "diffmia/rng.h"

namespace diffmia {
namespace {

TEST(RngTest, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.Normal(), b.Normal());
}

TEST(RngTest, DerivedStreamsDependOnEveryKey) {
  const double base = Rng::Derive(1, {2, 3}).Normal();
  EXPECT_EQ(Rng::Derive(1, {2, 3}).Normal(), base);
  EXPECT_NE(Rng::Derive(1, {3, 2}).Normal(), base);
  EXPECT_NE(Rng::Derive(2, {2, 3}).Normal(), base);
  EXPECT_NE(Rng::Derive(1, {2, 3, 0}).Normal(), base);
}

TEST(RngTest, DoubleKeySeparatesTimes) {
  EXPECT_NE(DoubleKey(0.5), DoubleKey(0.5000000000000001));
  EXPECT_EQ(DoubleKey(0.25), DoubleKey(0.25));
}

TEST(RngTest, NormalMoments) {
  Rng rng(7);
  const int n = 200000;
  double s = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.Normal();
    s += x;
    sq += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(RngTest, RademacherIsSign) {
  Rng rng(3);
  int plus = 0;
  for (int i = 0; i < 10000; ++i) {
    const double r = rng.Rademacher();
    ASSERT_TRUE(r == 1.0 || r == -1.0);
    plus += r > 0;
  }
  EXPECT_NEAR(plus, 5000, 4 * 50);
}

TEST(RngTest, UniformRange) {
  Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.Uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const double v = rng.Uniform(-2.0, 3.0);
    EXPECT_GE(v, -2.0);
    EXPECT_LT(v, 3.0);
    EXPECT_LT(rng.Below(7), 7u);
  }
}

TEST(RngTest, SampleWithoutReplacementIsDistinct) {
  Rng rng(11);
  const auto idx = rng.SampleWithoutReplacement(100, 64);
  EXPECT_EQ(idx.size(), 64u);
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 64u);
  EXPECT_LT(*std::max_element(idx.begin(), idx.end()), 100u);
  const auto all = rng.SampleWithoutReplacement(10, 10);
  EXPECT_EQ(std::set<std::size_t>(all.begin(), all.end()).size(), 10u);
}

TEST(RngTest, TensorShapes) {
  Rng rng(5);
  EXPECT_EQ(rng.NormalTensor({3, 2}).shape(), (Shape{3, 2}));
  const Tensor r = rng.RademacherTensor({8});
  for (double v : r.data()) EXPECT_EQ(std::abs(v), 1.0);
}

}  // namespace
}  // namespace diffmia
