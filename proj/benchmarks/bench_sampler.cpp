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

#include <random>

#include "bgnlm/bayes_linear.hpp"
#include "bgnlm/mjmcmc.hpp"

namespace {

using namespace bgnlm;

PopulationScorer make_scorer(std::size_t features, Eigen::Index rows) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  RowMatrix states(rows, 3);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    states.row(i) << normal(rng), normal(rng), normal(rng);
    y(i) = states(i, 0) - 0.5 * states(i, 1) * states(i, 2) + normal(rng);
  }
  static const char* const kPool[] = {"x0",          "x1",          "x2",         "x0*x1",
                                      "x0*x2",       "x1*x2",       "pow2(x0)",   "pow2(x1)",
                                      "pow2(x2)",    "sin_rad(x0)", "cos_rad(x1)", "sin_rad(x2)",
                                      "pow3(x0)",    "pow3(x1)",    "pow3(x2)"};
  std::vector<Feature> pop;
  for (std::size_t k = 0; k < features; ++k) pop.push_back(parse_feature(kPool[k]));
  return PopulationScorer(std::move(pop), states, y);
}

void BM_ScoreModel(benchmark::State& state) {
  const PopulationScorer scorer = make_scorer(15, 1000);
  const ModelMask mask = (ModelMask{1} << state.range(0)) - 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scorer.log_posterior(mask));
  }
}
BENCHMARK(BM_ScoreModel)->Arg(1)->Arg(5)->Arg(15);

void BM_BuildScorer(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_scorer(15, state.range(0)));
  }
}
BENCHMARK(BM_BuildScorer)->Arg(1000)->Arg(10000);

void BM_RunMjmcmc(benchmark::State& state) {
  const PopulationScorer scorer = make_scorer(15, 1000);
  MjmcmcTuning tuning;
  tuning.iterations = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_mjmcmc(scorer, tuning, 7, 0b111));
  }
}
BENCHMARK(BM_RunMjmcmc)->Arg(500);

}  // namespace
