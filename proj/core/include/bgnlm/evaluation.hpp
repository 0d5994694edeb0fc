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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bgnlm/dynamics.hpp"
#include "bgnlm/feature.hpp"
#include "bgnlm/posterior.hpp"

namespace bgnlm {

struct PowerFdr {
  double power = 0.0;
  double fdr = 0.0;
};

/// Exact key matching: power = |S & T| / |T|, fdr = |S \ T| / max(|S|, 1).
/// Duplicate keys on either side count once.
PowerFdr match_terms(std::span<const FeatureKey> selected, std::span<const FeatureKey> truth);

/// Fits the MPM by least squares on the training split and stores the
/// coefficients in `summary.mpm_betas`. If the MPM design is rank deficient
/// the dependent columns get zero coefficients.
void fit_mpm(PosteriorSummary& summary, const TrajectoryDataset& data);

struct Prediction {
  std::vector<std::size_t> rows;  // dataset row indices that were predicted
  Eigen::VectorXd observed;
  Eigen::VectorXd predicted;
  std::size_t excluded_rows = 0;  // rows where an MPM feature failed to evaluate
};

/// intercept + sum_k beta_k g_k(x_i) on every row of `split`, using the
/// fitted coefficients of `summary` (call fit_mpm first).
Prediction predict(const PosteriorSummary& summary, const TrajectoryDataset& data, Split split);

/// 1 - sum (y - yhat)^2 / sum (y - baseline_mean)^2. Throws std::invalid_argument
/// on fewer than 2 rows or zero baseline variance.
double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat, double baseline_mean);

struct MetricsRow {
  std::string system;
  double noise_sd = 0.0;
  int replicate = 0;
  std::size_t equation = 0;
  double power = 0.0;
  double fdr = 0.0;
  double r2_train = 0.0;
  double r2_insample = 0.0;
  double r2_oos = 0.0;
  std::size_t excluded_rows_train = 0;
  std::size_t excluded_rows_insample = 0;
  std::size_t excluded_rows_oos = 0;
};

/// Power/FDR against `truth` and R^2 on all three splits (training-mean
/// baseline). `summary` must already be fitted.
MetricsRow evaluate_equation(const PosteriorSummary& summary, const TrajectoryDataset& data,
                             std::span<const FeatureKey> truth);

}  // namespace bgnlm
