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

#ifndef DIFFMIA_KERNELS_H_
#define DIFFMIA_KERNELS_H_

#include <cstddef>
#include <functional>

namespace diffmia {

// How data-parallel loops run. Serial is the reference path; Parallel uses
// OpenMP. Every kernel computes each output element with the same operation
// order on both paths, so results are bit-identical.
enum class Exec { kSerial, kParallel };

// Process-wide default used by library loops that take no explicit policy.
Exec DefaultExec();
void SetDefaultExec(Exec exec);

// Caps OpenMP workers (0 leaves the runtime default).
void SetMaxThreads(int threads);
int MaxThreads();

// Calls body(i) for i in [0, n). Iterations must write disjoint outputs.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body,
                 Exec exec = DefaultExec());

namespace kernels {

// Row-major dense products. c is overwritten.
//   Matmul:   c[n,p] = a[n,k] * b[k,p]
//   MatmulNT: c[n,p] = a[n,k] * b[p,k]^T
//   MatmulTN: c[n,p] = a[k,n]^T * b[k,p]
namespace serial {
void Matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t p);
void MatmulNT(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p);
void MatmulTN(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p);
}  // namespace serial

namespace omp {
void Matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t p);
void MatmulNT(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p);
void MatmulTN(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p);
}  // namespace omp

// Dispatch on policy; small products always take the serial path.
void Matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t p, Exec exec = DefaultExec());
void MatmulNT(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p, Exec exec = DefaultExec());
void MatmulTN(const double* a, const double* b, double* c, std::size_t n,
              std::size_t k, std::size_t p, Exec exec = DefaultExec());

}  // namespace kernels
}  // namespace diffmia

#endif  // DIFFMIA_KERNELS_H_
