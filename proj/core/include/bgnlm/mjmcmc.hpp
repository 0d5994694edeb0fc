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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <unordered_map>

#include "bgnlm/model_space.hpp"

namespace bgnlm {

struct MjmcmcTuning {
  int iterations = 500;
  int large_jump_min = 2;
  int large_jump_max = 6;
  int local_opt_steps = 20;
  double mode_jump_probability = 0.25;
  double randomization_flip_prob = 0.1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct MjmcmcCounters {
  std::uint64_t local_proposals = 0;
  std::uint64_t local_accepts = 0;
  std::uint64_t jump_proposals = 0;
  std::uint64_t jump_accepts = 0;
};

/// One Metropolis-Hastings chain over the configurations of a fixed population.
///
/// `visited` doubles as the evaluation cache: every model ever scored is
/// recorded once and never overwritten.
struct MjmcmcState {
  ModelMask current = 0;
  double current_log_posterior = kNegInf;
  std::unordered_map<ModelMask, double> visited;
  std::mt19937_64 rng;
  MjmcmcTuning tuning;
  MjmcmcCounters counters;
};

MjmcmcState make_mjmcmc_state(const ModelEvaluator& evaluator, const MjmcmcTuning& tuning,
                              std::uint64_t seed, ModelMask initial);

/// Cached log posterior of `mask`, scoring and recording it on first use.
double score_model(MjmcmcState& state, const ModelEvaluator& evaluator, ModelMask mask);

/// Flip one uniformly chosen indicator; accept with min(1, exp(delta)).
/// Returns true on acceptance.
bool local_step(MjmcmcState& state, const ModelEvaluator& evaluator);

/// Steepest single-flip ascent from `start` for at most `max_steps` moves.
/// Ties go to the lowest feature index; stops when no flip improves.
ModelMask greedy_ascent(MjmcmcState& state, const ModelEvaluator& evaluator, ModelMask start,
                        int max_steps);

/// log q(to | from) for independent per-coordinate flips with probability `flip_prob`.
double log_randomization_density(ModelMask to, ModelMask from, std::size_t feature_count,
                                 double flip_prob);

/// Large jump over a random subset, greedy ascent, randomization, and the
/// mirrored backward path for the acceptance ratio. Returns true on acceptance.
bool mode_jump_step(MjmcmcState& state, const ModelEvaluator& evaluator);

/// `tuning.iterations` steps, each a mode jump with probability
/// `tuning.mode_jump_probability` and a local flip otherwise.
MjmcmcState run_mjmcmc(const ModelEvaluator& evaluator, const MjmcmcTuning& tuning,
                       std::uint64_t seed, ModelMask initial);

}  // namespace bgnlm
