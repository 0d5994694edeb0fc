// Copyright 2026 The bgnlm-sindy Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bgnlm/csv.hpp"

#include <benchmark/benchmark.h>

#include "bgnlm/dynamics.hpp"

namespace {

using namespace bgnlm;

void BM_SimulateLorenz(benchmark::State& state) {
  const SystemSpec spec = make_system(SystemId::Lorenz3D);
  const double horizon = static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_system(spec, 1e-3, horizon));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(horizon / 1e-3));
}
BENCHMARK(BM_SimulateLorenz)->Arg(5)->Arg(50);

void BM_FiniteDifferences(benchmark::State& state) {
  const Trajectory tr = simulate_system(make_system(SystemId::Hybrid3D), 1e-3, 50.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(finite_difference_derivatives(tr.times, tr.states));
  }
  state.SetItemsProcessed(state.iterations() * tr.states.rows());
}
BENCHMARK(BM_FiniteDifferences);

}  // namespace
