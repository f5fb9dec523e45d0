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

// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "diffmia/attacks.h"
#include "diffmia/data.h"
#include "diffmia/kernels.h"
#include "diffmia/rng.h"
#include "diffmia/schedules.h"
#include "diffmia/scorenet.h"

namespace diffmia {
namespace {

std::vector<double> RandomBuffer(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.Normal();
  return v;
}

template <void (*Kernel)(const double*, const double*, double*, std::size_t,
                         std::size_t, std::size_t)>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 128, p = 128;
  const auto a = RandomBuffer(n * k, 1);
  const auto b = RandomBuffer(k * p, 2);
  std::vector<double> c(n * p);
  for (auto _ : state) {
    Kernel(a.data(), b.data(), c.data(), n, k, p);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * n * k * p);
}

BENCHMARK_TEMPLATE(BM_Matmul, kernels::serial::Matmul)
    ->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK_TEMPLATE(BM_Matmul, kernels::omp::Matmul)
    ->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK_TEMPLATE(BM_Matmul, kernels::serial::MatmulTN)
    ->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK_TEMPLATE(BM_Matmul, kernels::omp::MatmulTN)
    ->Arg(64)->Arg(512)->Arg(4096);

void BM_LossAttack(benchmark::State& state) {
  const Exec exec = state.range(0) == 0 ? Exec::kSerial : Exec::kParallel;
  const Dataset d = GenerateDataset("gauss_grid", 64, 64, 1);
  const Schedule schedule = Schedule::Default(ModelKind::kDdpm);
  Architecture arch;
  arch.zero_init_output = false;
  const ScoreNetwork net = ScoreNetwork::Create(arch, 3);
  const std::vector<double> steps = DiscreteSteps(1000, 50);
  for (auto _ : state) {
    StepProfile p =
        LossAttackScores(net, d.eval_set(), steps, schedule, 5, 0, exec);
    benchmark::DoNotOptimize(p.sets.data());
  }
}

BENCHMARK(BM_LossAttack)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace diffmia

BENCHMARK_MAIN();
