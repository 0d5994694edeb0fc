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

// Gaussian linear model over generated features with fixed unit noise
// variance. Under a flat prior on the coefficients:
//
//   log p(y | gamma) = -((n - p) / 2) log(2 pi) - 1/2 log det(X'X) - 1/2 RSS
//   log p(gamma)     = -psi * sum_k gamma_k * complexity(g_k)
//
// X always carries the intercept column, which is not part of gamma.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bgnlm/dynamics.hpp"
#include "bgnlm/feature.hpp"
#include "bgnlm/model_space.hpp"

namespace bgnlm {

/// Relative Cholesky pivot below which a column counts as linearly dependent.
inline constexpr double kRankTolerance = 1e-10;

inline constexpr double kDefaultPsi = 2.0;

class RankDeficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Design {
  Eigen::MatrixXd X;  // column 0 is the intercept, column k+1 is feature k
  Eigen::VectorXd y;
  /// Indices of features that failed to evaluate on some row; their columns hold NaN.
  std::vector<std::size_t> invalid_features;
};

/// Evaluates `features` row-wise on `states`.
Design build_design(std::span<const Feature> features, const RowMatrix& states,
                    const Eigen::VectorXd& y);

/// Same, on one split of a dataset for response column `equation`.
Design build_design(std::span<const Feature> features, const TrajectoryDataset& data, Split split,
                    std::size_t equation);

/// Result of factoring the Gram matrix of a column subset.
struct GramSolution {
  double logdet = 0.0;  // log det of the selected Gram block
  double rss = 0.0;     // y'y - b' G^{-1} b, clamped at zero
};

/// Cholesky of G restricted to rows/columns `columns`; nullopt if any pivot
/// falls below kRankTolerance times its own diagonal entry or is non-finite.
std::optional<GramSolution> solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                                       double yty, std::span<const Eigen::Index> columns);

/// Closed-form log evidence; kNegInf on rank deficiency or n <= p.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// -psi * sum of complexities of included features.
double log_model_prior(ModelMask gamma, std::span<const int> complexities, double psi);
double log_model_prior(ModelMask gamma, std::span<const Feature> features, double psi);

struct FitResult {
  Eigen::VectorXd beta;  // intercept first, then included features in design order
  double rss = 0.0;
  double logdet_gram = 0.0;
  std::size_t n_used = 0;
};

/// Least-squares solution, which is the posterior mode under the flat prior.
/// Throws RankDeficientError under the same rule as log_marginal_likelihood.
FitResult fit_posterior_mode(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Column-pivoted QR least squares; dependent columns get a zero coefficient.
Eigen::VectorXd fit_least_squares_basic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// One configuration of a population with its cached scores.
struct ModelGamma {
  std::shared_ptr<const std::vector<Feature>> features;
  ModelMask gamma = 0;
  std::optional<double> log_marginal;
  std::optional<double> log_prior;

  std::vector<FeatureKey> included_keys() const;
};

/// Marginal likelihood plus model prior; fills the caches of `model`.
double log_unnormalized_posterior(ModelGamma& model, const TrajectoryDataset& data, Split split,
                                  std::size_t equation, double psi = kDefaultPsi);

/// Prior on the coefficients of an included model.
///
/// `Flat` is the density-one location prior of log_marginal_likelihood. Its
/// evidence moves by -log|c| when a column is scaled by c and grows without
/// bound as a column approaches the span of the others.
///
/// `UnitInformation` is the Jeffreys prior |X'X / n|^{1/2} (2 pi)^{-p/2}, which
/// is invariant to column scaling and collinearity:
///
///   log p(y | gamma) = -(n / 2) log(2 pi) - (p / 2) log n - 1/2 RSS
enum class CoefficientPrior { UnitInformation, Flat };

std::string_view coefficient_prior_name(CoefficientPrior prior);
std::optional<CoefficientPrior> coefficient_prior_from_name(std::string_view name);

/// log p(y | gamma) under `prior`; kNegInf on rank deficiency or n <= p.
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               CoefficientPrior prior);

/// Scores every configuration of one population against one split and equation.
///
/// The Gram matrix of the centered design is built once and the intercept is
/// eliminated analytically; each query factors the selected block only. Immutable after construction, so chains may share it.
class PopulationScorer final : public ModelEvaluator {
 public:
  PopulationScorer(std::vector<Feature> features, const RowMatrix& states,
                   const Eigen::VectorXd& y, double psi = kDefaultPsi,
                   CoefficientPrior prior = CoefficientPrior::UnitInformation);
  PopulationScorer(std::vector<Feature> features, const TrajectoryDataset& data, Split split,
                   std::size_t equation, double psi = kDefaultPsi,
                   CoefficientPrior prior = CoefficientPrior::UnitInformation);

  std::size_t feature_count() const override { return features_.size(); }
  double log_posterior(ModelMask mask) const override;

  double log_marginal(ModelMask mask) const;
  double log_prior(ModelMask mask) const;

  const std::vector<Feature>& features() const { return features_; }
  /// Bit k set iff feature k failed to evaluate on some row.
  ModelMask invalid_mask() const { return invalid_; }
  std::size_t rows() const { return n_; }

 private:
  void init(const Design& design);

  std::vector<Feature> features_;
  std::vector<int> complexities_;
  double psi_;
  CoefficientPrior prior_;
  std::size_t n_ = 0;
  double log_n_ = 0.0;
  Eigen::VectorXd log_scale_;   // log of the norm each centered column was divided by
  ModelMask invalid_ = 0;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  double yty_ = 0.0;
};

}  // namespace bgnlm
