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

#include "bgnlm/gmjmcmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bgnlm {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("sampler.") + field + " " + what);
}

template <class T>
const T& pick_uniform(std::span<const T> items, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

// exp(v - max) / sum; ties come out exactly equal.
std::vector<double> normalized_weights(const std::vector<double>& values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  std::vector<double> w(values.size(), 0.0);
  if (hi == kNegInf) return w;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    w[i] = std::exp(values[i] - hi);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

ModelKey model_key(ModelMask mask, const std::vector<Feature>& features) {
  ModelKey key;
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (includes(mask, k)) key.push_back(features[k].key());
  }
  std::sort(key.begin(), key.end());
  return key;
}

}  // namespace

void GmjmcmcTuning::validate() const {
  require(pop_size >= 1 && pop_size <= kMaxPopulation, "pop_size", "must lie in [1, 64]");
  require(generations >= 1, "generations", "must be at least 1");
  require(filtration_threshold > 0.0 && filtration_threshold < 1.0, "filtration_threshold",
          "must lie in (0,1)");
  require(chains >= 1, "chains", "must be at least 1");
  require(modify_weight >= 0.0 && multiply_weight >= 0.0 && modify_weight + multiply_weight > 0.0,
          "modify_weight", "and multiply_weight must be non-negative with a positive sum");
  require(limits.max_depth >= 0, "max_depth", "must be non-negative");
  require(limits.max_complexity >= 1, "max_complexity", "must be at least 1");
  require(psi > 0.0, "psi", "must be positive");
  require(slot_retries >= 1, "slot_retries", "must be at least 1");
  mjmcmc.validate();
}

std::set<FeatureKey> Population::keys() const {
  std::set<FeatureKey> out;
  for (const auto& f : features) out.insert(f.key());
  return out;
}

Population filtration(const Population& population, std::span<const double> inclusion,
                      double threshold) {
  if (inclusion.size() != population.features.size()) {
    throw std::invalid_argument("filtration: inclusion probabilities misaligned with population");
  }
  Population out;
  out.generation = population.generation;
  for (std::size_t k = 0; k < population.features.size(); ++k) {
    const bool prot = k < population.is_protected.size() && population.is_protected[k];
    if (prot || inclusion[k] >= threshold) {
      out.features.push_back(population.features[k]);
      out.is_protected.push_back(prot);
    }
  }
  return out;
}

bool valid_on(const Feature& f, const RowMatrix& states) {
  const auto cols = static_cast<std::size_t>(states.cols());
  double sum = 0.0;
  double sum_sq = 0.0;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    auto v = try_evaluate(f, std::span<const double>(states.row(i).data(), cols));
    if (!v) return false;
    values.push_back(*v);
    sum += *v;
    sum_sq += *v * *v;
  }
  if (values.empty()) return false;
  // Residual of the column after projecting out the intercept, under the
  // same relative rule as the Cholesky rank guard.
  const double mean = sum / static_cast<double>(values.size());
  double centered = 0.0;
  for (double v : values) centered += (v - mean) * (v - mean);
  return std::isfinite(sum_sq) && centered > kRankTolerance * sum_sq;
}

std::vector<Feature> generate_features(std::span<const Feature> survivors, std::size_t slots,
                                       std::mt19937_64& rng, const GenerationContext& ctx,
                                       std::set<FeatureKey>& taken) {
  std::vector<Feature> out;
  if (survivors.empty()) return out;
  const double total = ctx.modify_weight + ctx.multiply_weight;
  std::uniform_real_distribution<double> coin(0.0, total);
  for (std::size_t slot = 0; slot < slots; ++slot) {
    for (int attempt = 0; attempt < ctx.slot_retries; ++attempt) {
      std::optional<Feature> candidate;
      if (coin(rng) < ctx.modify_weight) {
        if (ctx.alphabet.empty()) continue;
        const Feature& parent = pick_uniform(survivors, rng);
        candidate = mutate_modify(parent, pick_uniform(ctx.alphabet, rng), ctx.limits);
      } else {
        const Feature& a = pick_uniform(survivors, rng);
        const Feature& b = pick_uniform(survivors, rng);
        // A self-product is represented by its square so only one form exists.
        candidate = a.key() == b.key() ? mutate_modify(a, TransformKind::Pow2, ctx.limits)
                                       : mutate_multiply(a, b, ctx.limits);
      }
      if (!candidate) continue;
      if (complexity(*candidate) > ctx.limits.max_complexity) continue;
      if (taken.contains(candidate->key())) continue;
      if (ctx.training_states && !valid_on(*candidate, *ctx.training_states)) continue;
      taken.insert(candidate->key());
      out.push_back(std::move(*candidate));
      break;
    }
  }
  return out;
}

std::vector<double> inclusion_probabilities(const MjmcmcState& state, std::size_t feature_count) {
  std::vector<std::pair<ModelMask, double>> models;
  models.reserve(state.visited.size());
  for (const auto& [mask, value] : state.visited) {
    if (value != kNegInf) models.emplace_back(mask, value);
  }
  std::sort(models.begin(), models.end());
  std::vector<double> values;
  values.reserve(models.size());
  for (const auto& m : models) values.push_back(m.second);
  const auto weights = normalized_weights(values);

  std::vector<double> probs(feature_count, 0.0);
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t k = 0; k < feature_count; ++k) {
      if (includes(models[i].first, k)) probs[k] += weights[i];
    }
  }
  return probs;
}

ChainResult run_chain(const TrajectoryDataset& data, Split split, std::size_t equation,
                      const GmjmcmcTuning& tuning, std::uint64_t seed) {
  tuning.validate();
  std::mt19937_64 rng(seed);
  const RowMatrix states = data.split_states(split);
  const Eigen::VectorXd y = data.split_response(split, equation);

  GenerationContext ctx;
  ctx.alphabet = tuning.alphabet;
  ctx.limits = tuning.limits;
  ctx.modify_weight = tuning.modify_weight;
  ctx.multiply_weight = tuning.multiply_weight;
  ctx.slot_retries = tuning.slot_retries;
  ctx.training_states = &states;

  Population population;
  population.features = original_variables(static_cast<std::size_t>(states.cols()));
  if (population.features.size() > tuning.pop_size) {
    population.features.erase(population.features.begin() + static_cast<std::ptrdiff_t>(tuning.pop_size),
                              population.features.end());
  }
  population.is_protected.assign(population.features.size(), tuning.keep_originals);
  {
    std::set<FeatureKey> taken = population.keys();
    auto fresh = generate_features(population.features, tuning.pop_size - population.features.size(),
                                   rng, ctx, taken);
    for (auto& f : fresh) {
      population.features.push_back(std::move(f));
      population.is_protected.push_back(false);
    }
  }

  ChainResult result;
  for (int g = 1; g <= tuning.generations; ++g) {
    population.generation = g;
    for (const auto& f : population.features) result.dictionary.emplace(f.key(), f);

    PopulationScorer scorer(population.features, states, y, tuning.psi, tuning.prior);
    ModelMask initial = 0;
    for (std::size_t k = 0; k < population.features.size(); ++k) {
      if (population.features[k].kind() == Feature::Kind::Variable) initial |= bit(k);
    }
    const MjmcmcState state = run_mjmcmc(scorer, tuning.mjmcmc, rng(), initial);

    for (const auto& [mask, value] : state.visited) {
      if (value == kNegInf) continue;
      result.global_visited.emplace(model_key(mask, population.features), value);
    }
    const auto probs = inclusion_probabilities(state, population.features.size());
    for (std::size_t k = 0; k < probs.size(); ++k) {
      result.diagnostics.push_back({g, population.features[k].key(), probs[k]});
    }
    if (g == tuning.generations) break;

    Population next = filtration(population, probs, tuning.filtration_threshold);
    std::set<FeatureKey> taken = next.keys();
    auto fresh = generate_features(next.features, tuning.pop_size - next.features.size(), rng, ctx,
                                   taken);
    for (auto& f : fresh) {
      next.features.push_back(std::move(f));
      next.is_protected.push_back(false);
    }
    population = std::move(next);
  }
  return result;
}

PosteriorSummary aggregate_chains(std::span<const ChainResult> results, std::size_t equation) {
  std::map<ModelKey, double> models;
  std::map<FeatureKey, Feature> dictionary;
  for (const auto& r : results) {
    for (const auto& [key, value] : r.global_visited) models.emplace(key, value);
    for (const auto& [key, f] : r.dictionary) dictionary.emplace(key, f);
  }

  PosteriorSummary out;
  out.equation = equation;
  out.model_count = models.size();
  std::vector<double> values;
  values.reserve(models.size());
  for (const auto& m : models) values.push_back(m.second);
  const auto weights = normalized_weights(values);
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) return out;

  std::size_t i = 0;
  for (const auto& [key, value] : models) {
    const double w = weights[i++];
    for (const auto& k : key) out.inclusion_probs[k] += w;
  }
  for (const auto& [key, prob] : out.inclusion_probs) {
    if (prob > kMedianThreshold) {
      out.mpm_keys.push_back(key);
      auto it = dictionary.find(key);
      out.mpm_features.push_back(it != dictionary.end() ? it->second : parse_feature(key.text));
    }
  }
  return out;
}

}  // namespace bgnlm
