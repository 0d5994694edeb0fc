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

#include <doctest.h>

#include <array>
#include <cmath>

#include "bgnlm/mjmcmc.hpp"
#include "test_support.hpp"

using namespace bgnlm;
using bgnlm::testing::TableEvaluator;

namespace {

MjmcmcTuning quick(int iterations) {
  MjmcmcTuning t;
  t.iterations = iterations;
  return t;
}

}  // namespace

TEST_CASE("local step with equal posteriors always accepts") {
  const TableEvaluator flat(1, {0.0, 0.0});
  MjmcmcState s = make_mjmcmc_state(flat, quick(0), 1, 0);
  for (int i = 0; i < 100; ++i) {
    CHECK(local_step(s, flat));
    CHECK(s.current == static_cast<ModelMask>((i + 1) % 2));
  }
}

TEST_CASE("excluded proposals are rejected but recorded") {
  const TableEvaluator guarded(1, {0.0, kNegInf});
  MjmcmcState s = make_mjmcmc_state(guarded, quick(0), 1, 0);
  for (int i = 0; i < 20; ++i) CHECK_FALSE(local_step(s, guarded));
  CHECK(s.current == 0);
  REQUIRE(s.visited.count(1) == 1);
  CHECK(s.visited.at(1) == kNegInf);
  CHECK(s.counters.local_proposals == 20);
  CHECK(s.counters.local_accepts == 0);
}

TEST_CASE("local acceptance rate matches the analytic rate") {
  const std::vector<double> logs{0.0, -0.5, -1.2, 0.3};
  const TableEvaluator table(2, logs);
  const auto pi = testing::normalize_log(logs);
  double analytic = 0.0;
  for (ModelMask g = 0; g < 4; ++g) {
    for (std::size_t k = 0; k < 2; ++k) {
      analytic += pi[g] * 0.5 * std::min(1.0, std::exp(logs[g ^ bit(k)] - logs[g]));
    }
  }
  MjmcmcState s = make_mjmcmc_state(table, quick(0), 42, 0);
  int accepted = 0;
  const int steps = 10000;
  for (int i = 0; i < steps; ++i) accepted += local_step(s, table);
  CHECK(std::abs(accepted / static_cast<double>(steps) - analytic) < 0.02);
}

TEST_CASE("local kernel detailed balance") {
  const std::vector<double> logs{0.0, -0.7, 0.4, -1.5};
  const TableEvaluator table(2, logs);
  MjmcmcState s = make_mjmcmc_state(table, quick(0), 9, 0);
  std::array<std::array<double, 4>, 4> counts{};
  const int steps = 400000;
  for (int i = 0; i < steps; ++i) {
    const ModelMask from = s.current;
    local_step(s, table);
    counts[from][s.current] += 1.0;
  }
  for (ModelMask a = 0; a < 4; ++a) {
    for (std::size_t k = 0; k < 2; ++k) {
      const ModelMask b = a ^ bit(k);
      if (b < a) continue;
      // Flux a->b and b->a estimate pi(a)P(a,b) and pi(b)P(b,a).
      const double se = std::sqrt(counts[a][b] + counts[b][a]);
      CAPTURE(a);
      CAPTURE(b);
      CHECK(std::abs(counts[a][b] - counts[b][a]) < 3.0 * se);
    }
  }
}

TEST_CASE("randomization density") {
  const double phi = 0.1;
  CHECK(log_randomization_density(0b101, 0b101, 5, phi) ==
        doctest::Approx(5.0 * std::log(0.9)));
  CHECK(log_randomization_density(0b100, 0b001, 5, phi) ==
        doctest::Approx(2.0 * std::log(0.1) + 3.0 * std::log(0.9)));
  // Bits outside the population are ignored.
  CHECK(log_randomization_density(0b100000, 0, 5, phi) ==
        doctest::Approx(5.0 * std::log(0.9)));
  CHECK(log_randomization_density(0b11, 0b01, 2, phi) ==
        log_randomization_density(0b01, 0b11, 2, phi));
}

TEST_CASE("mode jumps on a flat landscape always accept") {
  const TableEvaluator flat(6, std::vector<double>(64, -3.0));
  MjmcmcState s = make_mjmcmc_state(flat, quick(0), 5, 0);
  for (int i = 0; i < 200; ++i) CHECK(mode_jump_step(s, flat));
  CHECK(s.counters.jump_accepts == 200);
}

TEST_CASE("greedy ascent") {
  std::vector<double> logs(8, 0.0);
  logs[0b001] = 1.0;
  logs[0b010] = 1.0;
  logs[0b011] = 3.0;
  logs[0b111] = 2.0;
  const TableEvaluator table(3, logs);
  MjmcmcState s = make_mjmcmc_state(table, quick(0), 1, 0);
  // Ties go to the lowest index: 000 -> 001 -> 011.
  CHECK(greedy_ascent(s, table, 0, 20) == 0b011);
  CHECK(greedy_ascent(s, table, 0, 1) == 0b001);
  CHECK(greedy_ascent(s, table, 0b011, 20) == 0b011);
}

TEST_CASE("run_mjmcmc bookkeeping") {
  const auto scorer = testing::synthetic_six_feature_scorer(3);
  const MjmcmcState none = run_mjmcmc(scorer, quick(0), 1, 0b111);
  CHECK(none.visited.size() == 1);
  CHECK(none.visited.count(0b111) == 1);
  CHECK(none.current == 0b111);

  const MjmcmcState a = run_mjmcmc(scorer, quick(300), 17, 0b111);
  const MjmcmcState b = run_mjmcmc(scorer, quick(300), 17, 0b111);
  CHECK(a.visited == b.visited);
  CHECK(a.current == b.current);
  CHECK(a.visited.count(a.current) == 1);

  std::size_t previous = 0;
  for (int it : {0, 10, 50, 200, 400}) {
    const std::size_t size = run_mjmcmc(scorer, quick(it), 17, 0b111).visited.size();
    CHECK(size >= previous);
    previous = size;
  }

  // Recorded values never change.
  MjmcmcState s = make_mjmcmc_state(scorer, quick(0), 4, 0);
  std::unordered_map<ModelMask, double> snapshot;
  for (int i = 0; i < 300; ++i) {
    i % 4 == 0 ? mode_jump_step(s, scorer) : local_step(s, scorer);
    for (const auto& [m, v] : snapshot) CHECK(s.visited.at(m) == v);
    snapshot = s.visited;
  }

  MjmcmcTuning bad = quick(10);
  bad.mode_jump_probability = 1.0;
  CHECK_THROWS_AS(run_mjmcmc(scorer, bad, 1, 0), std::invalid_argument);
}

TEST_CASE("visited mass matches enumeration on toy problems") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto scorer = testing::synthetic_six_feature_scorer(seed);
    const auto exact = testing::enumerate_posterior(scorer);
    const MjmcmcState s = run_mjmcmc(scorer, quick(20000), seed, 0b000111);
    const auto estimate = testing::visited_posterior(s.visited, 6);
    CAPTURE(seed);
    CHECK(testing::total_variation(exact, estimate) < 0.05);
    const auto pe = testing::inclusion_from_masses(exact, 6);
    const auto pv = testing::inclusion_from_masses(estimate, 6);
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(pe[k] - pv[k]) < 0.02);
  }
}

TEST_CASE("visit frequencies converge to the posterior") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-2.0, 0.0);
  std::vector<double> logs(16);
  for (double& v : logs) v = u(rng);
  const TableEvaluator table(4, logs);
  const auto exact = testing::normalize_log(logs);

  MjmcmcTuning t = quick(0);
  t.large_jump_min = 2;
  t.large_jump_max = 3;
  MjmcmcState s = make_mjmcmc_state(table, t, 12, 0);
  std::vector<double> freq(16, 0.0);
  const int steps = 200000;
  std::bernoulli_distribution jump(0.25);
  std::mt19937_64 mix(13);
  for (int i = 0; i < steps; ++i) {
    jump(mix) ? mode_jump_step(s, table) : local_step(s, table);
    freq[s.current] += 1.0 / steps;
  }
  CHECK(testing::total_variation(exact, freq) < 0.02);
}
