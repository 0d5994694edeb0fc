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
#include <map>
#include <vector>

#include <Eigen/Core>

#include "bgnlm/feature.hpp"

namespace bgnlm {

/// Sorted feature keys of one model.
using ModelKey = std::vector<FeatureKey>;

inline constexpr double kMedianThreshold = 0.5;

/// Posterior over one equation's models.
struct PosteriorSummary {
  std::size_t equation = 0;
  std::map<FeatureKey, double> inclusion_probs;
  /// Exactly the keys with inclusion probability > 0.5, sorted.
  std::vector<FeatureKey> mpm_keys;
  std::vector<Feature> mpm_features;  // aligned with mpm_keys
  /// Intercept first, then one coefficient per mpm key; empty until fitted.
  Eigen::VectorXd mpm_betas;
  std::size_t model_count = 0;
};

}  // namespace bgnlm
