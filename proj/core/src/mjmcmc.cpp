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

#include "bgnlm/mjmcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bgnlm {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("mjmcmc.") + field + " " + what);
}

double uniform01(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

bool metropolis_accept(std::mt19937_64& rng, double log_ratio) {
  if (log_ratio >= 0.0) return true;
  return uniform01(rng) < std::exp(log_ratio);
}

}  // namespace

void MjmcmcTuning::validate() const {
  require(iterations >= 0, "iterations", "must be non-negative");
  require(large_jump_min >= 1, "large_jump_min", "must be at least 1");
  require(large_jump_max >= large_jump_min, "large_jump_max", "must be >= large_jump_min");
  require(local_opt_steps >= 1, "local_opt_steps", "must be positive");
  require(mode_jump_probability > 0.0 && mode_jump_probability < 1.0, "mode_jump_probability",
          "must lie in (0,1)");
  require(randomization_flip_prob > 0.0 && randomization_flip_prob < 1.0,
          "randomization_flip_prob", "must lie in (0,1)");
}

MjmcmcState make_mjmcmc_state(const ModelEvaluator& evaluator, const MjmcmcTuning& tuning,
                              std::uint64_t seed, ModelMask initial) {
  MjmcmcState state;
  state.rng.seed(seed);
  state.tuning = tuning;
  state.current = initial;
  state.current_log_posterior = score_model(state, evaluator, initial);
  return state;
}

double score_model(MjmcmcState& state, const ModelEvaluator& evaluator, ModelMask mask) {
  auto it = state.visited.find(mask);
  if (it != state.visited.end()) return it->second;
  const double value = evaluator.log_posterior(mask);
  state.visited.emplace(mask, value);
  return value;
}

bool local_step(MjmcmcState& state, const ModelEvaluator& evaluator) {
  const std::size_t p = evaluator.feature_count();
  if (p == 0) return false;
  std::uniform_int_distribution<std::size_t> pick(0, p - 1);
  const ModelMask proposal = state.current ^ bit(pick(state.rng));
  const double value = score_model(state, evaluator, proposal);
  ++state.counters.local_proposals;
  if (value == kNegInf) return false;
  if (!metropolis_accept(state.rng, value - state.current_log_posterior)) return false;
  state.current = proposal;
  state.current_log_posterior = value;
  ++state.counters.local_accepts;
  return true;
}

ModelMask greedy_ascent(MjmcmcState& state, const ModelEvaluator& evaluator, ModelMask start,
                        int max_steps) {
  const std::size_t p = evaluator.feature_count();
  ModelMask current = start;
  double value = score_model(state, evaluator, current);
  for (int step = 0; step < max_steps; ++step) {
    ModelMask best = current;
    double best_value = value;
    for (std::size_t k = 0; k < p; ++k) {
      const ModelMask candidate = current ^ bit(k);
      const double v = score_model(state, evaluator, candidate);
      if (v > best_value) {
        best = candidate;
        best_value = v;
      }
    }
    if (best == current) break;
    current = best;
    value = best_value;
  }
  return current;
}

double log_randomization_density(ModelMask to, ModelMask from, std::size_t feature_count,
                                 double flip_prob) {
  const ModelMask domain = feature_count >= 64 ? ~ModelMask{0} : bit(feature_count) - 1;
  const auto flips = static_cast<double>(model_size((to ^ from) & domain));
  const auto stays = static_cast<double>(feature_count) - flips;
  return flips * std::log(flip_prob) + stays * std::log1p(-flip_prob);
}

bool mode_jump_step(MjmcmcState& state, const ModelEvaluator& evaluator) {
  const std::size_t p = evaluator.feature_count();
  if (p == 0) return false;
  const MjmcmcTuning& t = state.tuning;
  const int hi = std::min<int>(t.large_jump_max, static_cast<int>(p));
  const int lo = std::min(t.large_jump_min, hi);
  const int size = std::uniform_int_distribution<int>(lo, hi)(state.rng);

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  ModelMask jump = 0;
  for (int i = 0; i < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), p - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[pick(state.rng)]);
    jump |= bit(order[static_cast<std::size_t>(i)]);
  }

  const ModelMask forward_mode = greedy_ascent(state, evaluator, state.current ^ jump,
                                               t.local_opt_steps);
  ModelMask proposal = forward_mode;
  for (std::size_t k = 0; k < p; ++k) {
    if (uniform01(state.rng) < t.randomization_flip_prob) proposal ^= bit(k);
  }
  ++state.counters.jump_proposals;

  const double proposal_value = score_model(state, evaluator, proposal);
  if (proposal_value == kNegInf) return false;

  const ModelMask backward_mode = greedy_ascent(state, evaluator, proposal ^ jump,
                                                t.local_opt_steps);
  const double phi = t.randomization_flip_prob;
  const double log_ratio = proposal_value - state.current_log_posterior +
                           log_randomization_density(state.current, backward_mode, p, phi) -
                           log_randomization_density(proposal, forward_mode, p, phi);
  if (!metropolis_accept(state.rng, log_ratio)) return false;
  state.current = proposal;
  state.current_log_posterior = proposal_value;
  ++state.counters.jump_accepts;
  return true;
}

MjmcmcState run_mjmcmc(const ModelEvaluator& evaluator, const MjmcmcTuning& tuning,
                       std::uint64_t seed, ModelMask initial) {
  tuning.validate();
  MjmcmcState state = make_mjmcmc_state(evaluator, tuning, seed, initial);
  for (int it = 0; it < tuning.iterations; ++it) {
    if (uniform01(state.rng) < tuning.mode_jump_probability) {
      mode_jump_step(state, evaluator);
    } else {
      local_step(state, evaluator);
    }
  }
  return state;
}

}  // namespace bgnlm
