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

#include <array>

#include "bgnlm/feature.hpp"

namespace {

using namespace bgnlm;

void BM_EvaluateFeature(benchmark::State& state) {
  static const char* const kFeatures[] = {"x0", "x0*x1", "sin_rad(x0*x2)",
                                          "pow-0.5(cos_rad(x1))*(x0*x2)"};
  const Feature f = parse_feature(kFeatures[state.range(0)]);
  const std::array<double, 3> row{1.3, -0.7, 2.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(try_evaluate(f, row));
  }
  state.SetLabel(kFeatures[state.range(0)]);
}
BENCHMARK(BM_EvaluateFeature)->DenseRange(0, 3);

void BM_CanonicalKey(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_feature("cos_rad(x2*x1)*pow2(sin_deg(x0))").key());
  }
}
BENCHMARK(BM_CanonicalKey);

}  // namespace
