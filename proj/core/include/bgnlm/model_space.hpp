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

#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace bgnlm {

/// Inclusion indicators over a population: bit k set iff feature k is in the model.
using ModelMask = std::uint64_t;

inline constexpr std::size_t kMaxPopulation = 64;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline constexpr ModelMask bit(std::size_t k) { return ModelMask{1} << k; }

inline constexpr bool includes(ModelMask m, std::size_t k) { return (m >> k) & 1U; }

inline constexpr int model_size(ModelMask m) { return std::popcount(m); }

/// Scores configurations of a fixed feature population.
///
/// Implementations must be pure: the same mask always yields the same value,
/// and concurrent calls are allowed. kNegInf marks an excluded model.
class ModelEvaluator {
 public:
  virtual ~ModelEvaluator() = default;
  virtual std::size_t feature_count() const = 0;
  virtual double log_posterior(ModelMask mask) const = 0;
};

}  // namespace bgnlm
