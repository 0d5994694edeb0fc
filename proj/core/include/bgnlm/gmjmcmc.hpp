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

// Genetically modified MJMCMC: alternate an MJMCMC run over a fixed feature
// population with filtration of weakly supported features and generation of
// new ones by modification (unary transform) and multiplication.

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "bgnlm/bayes_linear.hpp"
#include "bgnlm/dynamics.hpp"
#include "bgnlm/feature.hpp"
#include "bgnlm/mjmcmc.hpp"
#include "bgnlm/posterior.hpp"

namespace bgnlm {

struct GmjmcmcTuning {
  std::size_t pop_size = 15;
  int generations = 20;
  MjmcmcTuning mjmcmc;
  double filtration_threshold = 0.2;
  int chains = 10;
  double modify_weight = 0.5;
  double multiply_weight = 0.5;
  bool keep_originals = true;
  std::vector<TransformKind> alphabet{all_transforms().begin(), all_transforms().end()};
  GenerationLimits limits;
  double psi = kDefaultPsi;
  CoefficientPrior prior = CoefficientPrior::UnitInformation;
  int slot_retries = 50;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

struct Population {
  int generation = 0;
  std::vector<Feature> features;
  std::vector<bool> is_protected;

  std::set<FeatureKey> keys() const;
};

/// Originals plus everything with inclusion probability >= threshold.
/// `inclusion` is aligned with `population.features`.
Population filtration(const Population& population, std::span<const double> inclusion,
                      double threshold);

/// Inputs that decide whether a generated candidate is admissible.
struct GenerationContext {
  std::span<const TransformKind> alphabet;
  GenerationLimits limits;
  double modify_weight = 0.5;
  double multiply_weight = 0.5;
  int slot_retries = 50;
  /// Candidates must evaluate on every row and not be constant here.
  const RowMatrix* training_states = nullptr;
};

/// True when `f` evaluates on every row of `states` and is not constant there.
bool valid_on(const Feature& f, const RowMatrix& states);

/// Best-effort fill of `slots` new features. Parents are drawn uniformly from
/// `survivors`; each slot is retried up to ctx.slot_retries times to find a
/// candidate whose key is not in `taken` (which is extended), that respects
/// the limits, and that is valid on the training states.
std::vector<Feature> generate_features(std::span<const Feature> survivors, std::size_t slots,
                                       std::mt19937_64& rng, const GenerationContext& ctx,
                                       std::set<FeatureKey>& taken);

struct GenerationDiagnostic {
  int generation = 0;
  FeatureKey feature;
  double inclusion_prob = 0.0;
};

struct ChainResult {
  /// Every finite-scored model, keyed by its sorted feature keys.
  std::map<ModelKey, double> global_visited;
  /// Every feature that appeared in a population of this chain.
  std::map<FeatureKey, Feature> dictionary;
  std::vector<GenerationDiagnostic> diagnostics;
};

/// Renormalized inclusion probabilities over one MJMCMC visited map, indexed
/// like the population.
std::vector<double> inclusion_probabilities(const MjmcmcState& state, std::size_t feature_count);

/// One GMJMCMC chain for response column `equation`, scored on `split`.
ChainResult run_chain(const TrajectoryDataset& data, Split split, std::size_t equation,
                      const GmjmcmcTuning& tuning, std::uint64_t seed);

/// Union of the chains' model sets, renormalized; MPM = {k : P(k) > 0.5}.
PosteriorSummary aggregate_chains(std::span<const ChainResult> results, std::size_t equation);

}  // namespace bgnlm
