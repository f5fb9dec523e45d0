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

#include "diffmia/kernels.h"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <vector>

namespace diffmia {
namespace {

std::atomic<Exec> g_default_exec{Exec::kParallel};
std::atomic<int> g_max_threads{0};

// Below this many multiply-adds the fork/join cost dominates.
constexpr std::size_t kParallelWork = 1 << 16;

}  // namespace

Exec DefaultExec() { return g_default_exec.load(); }
void SetDefaultExec(Exec exec) { g_default_exec.store(exec); }

void SetMaxThreads(int threads) {
  g_max_threads.store(threads);
  if (threads > 0) omp_set_num_threads(threads);
}

int MaxThreads() {
  const int cap = g_max_threads.load();
  return cap > 0 ? cap : omp_get_max_threads();
}

void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body,
                 Exec exec) {
  if (exec == Exec::kSerial || n < 2 || MaxThreads() < 2 ||
      omp_in_parallel()) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  // Exceptions cannot cross an OpenMP region; keep the first and rethrow.
  std::exception_ptr first_error;
  std::mutex error_mu;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(MaxThreads())
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

namespace kernels {
namespace {

// dst[c][r] = src[r][c] for src of shape [rows, cols].
void Transpose(const double* src, double* dst, std::size_t rows,
               std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

// c[i][j] = sum_l a(i, l) * b[l][j] for rows [i0, i1), where a(i, l) is
// a[i * si + l * sl]. Tiles of 4 x 8 outputs stay in registers; every element
// still sums from zero over ascending l.
void GemmRows(const double* a, std::size_t si, std::size_t sl,
              const double* b, double* c, std::size_t i0, std::size_t i1,
              std::size_t k, std::size_t p) {
  constexpr std::size_t kR = 4, kC = 8;
  std::size_t i = i0;
  for (; i + kR <= i1; i += kR) {
    std::size_t j = 0;
    for (; j + kC <= p; j += kC) {
      double acc[kR][kC] = {};
      for (std::size_t l = 0; l < k; ++l) {
        const double* bl = b + l * p + j;
        for (std::size_t r = 0; r < kR; ++r) {
          const double ar = a[(i + r) * si + l * sl];
          for (std::size_t q = 0; q < kC; ++q) acc[r][q] += ar * bl[q];
        }
      }
      for (std::size_t r = 0; r < kR; ++r) {
        std::copy(acc[r], acc[r] + kC, c + (i + r) * p + j);
      }
    }
    for (; j < p; ++j) {
      for (std::size_t r = 0; r < kR; ++r) {
        double acc = 0.0;
        for (std::size_t l = 0; l < k; ++l) {
          acc += a[(i + r) * si + l * sl] * b[l * p + j];
        }
        c[(i + r) * p + j] = acc;
      }
    }
  }
  for (; i < i1; ++i) {
    double* ci = c + i * p;
    std::fill(ci, ci + p, 0.0);
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = a[i * si + l * sl];
      const double* bl = b + l * p;
      for (std::size_t j = 0; j < p; ++j) ci[j] += ail * bl[j];
    }
  }
}

// Row blocks handed to each thread; a multiple of the tile height.
constexpr std::size_t kRowBlock = 16;

}  // namespace

namespace serial {

void Matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t p) {
  GemmRows(a, k, 1, b, c, 0, n, k, p);
}

// b is transposed once so the inner loop runs over contiguous j. Each
// element still sums over l in ascending order.
void MatmulNT(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p) {
  std::vector<double> bt(k * p);
  Transpose(b, bt.data(), p, k);
  Matmul(a, bt.data(), c, n, k, p);
}

void MatmulTN(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p) {
  GemmRows(a, 1, n, b, c, 0, n, k, p);
}

}  // namespace serial

namespace omp {

void Matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t p) {
  const auto blocks = static_cast<std::ptrdiff_t>((n + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) num_threads(MaxThreads())
  for (std::ptrdiff_t bi = 0; bi < blocks; ++bi) {
    const std::size_t lo = static_cast<std::size_t>(bi) * kRowBlock;
    GemmRows(a, k, 1, b, c, lo, std::min(n, lo + kRowBlock), k, p);
  }
}

void MatmulNT(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p) {
  std::vector<double> bt(k * p);
  Transpose(b, bt.data(), p, k);
  Matmul(a, bt.data(), c, n, k, p);
}

void MatmulTN(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p) {
  const auto blocks = static_cast<std::ptrdiff_t>((n + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) num_threads(MaxThreads())
  for (std::ptrdiff_t bi = 0; bi < blocks; ++bi) {
    const std::size_t lo = static_cast<std::size_t>(bi) * kRowBlock;
    GemmRows(a, 1, n, b, c, lo, std::min(n, lo + kRowBlock), k, p);
  }
}

}  // namespace omp

namespace {
bool UseParallel(Exec exec, std::size_t n, std::size_t k, std::size_t p) {
  return exec == Exec::kParallel && n > 1 && n * k * p >= kParallelWork &&
         MaxThreads() > 1 && !omp_in_parallel();
}
}  // namespace

void Matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t p, Exec exec) {
  if (UseParallel(exec, n, k, p)) {
    omp::Matmul(a, b, c, n, k, p);
  } else {
    serial::Matmul(a, b, c, n, k, p);
  }
}

void MatmulNT(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p, Exec exec) {
  if (UseParallel(exec, n, k, p)) {
    omp::MatmulNT(a, b, c, n, k, p);
  } else {
    serial::MatmulNT(a, b, c, n, k, p);
  }
}

void MatmulTN(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p, Exec exec) {
  if (UseParallel(exec, n, k, p)) {
    omp::MatmulTN(a, b, c, n, k, p);
  } else {
    serial::MatmulTN(a, b, c, n, k, p);
  }
}

}  // namespace kernels
}  // namespace diffmia
