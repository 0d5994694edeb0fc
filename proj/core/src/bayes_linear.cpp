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

#include "bgnlm/bayes_linear.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

namespace bgnlm {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

constexpr Eigen::Index kMaxColumns = static_cast<Eigen::Index>(kMaxPopulation) + 1;

using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxColumns, kMaxColumns>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxColumns, 1>;

double closed_form(std::size_t n, std::size_t p, const GramSolution& s) {
  return -0.5 * static_cast<double>(n - p) * kLog2Pi - 0.5 * s.logdet - 0.5 * s.rss;
}

double unit_information_form(std::size_t n, std::size_t p, double rss) {
  return -0.5 * static_cast<double>(n) * kLog2Pi -
         0.5 * static_cast<double>(p) * std::log(static_cast<double>(n)) - 0.5 * rss;
}

}  // namespace

Design build_design(std::span<const Feature> features, const RowMatrix& states,
                    const Eigen::VectorXd& y) {
  const Eigen::Index n = states.rows();
  Design d;
  d.X.resize(n, static_cast<Eigen::Index>(features.size()) + 1);
  d.X.col(0).setOnes();
  d.y = y;
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k) + 1;
    bool valid = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::span<const double> row(states.row(i).data(), static_cast<std::size_t>(states.cols()));
      auto v = try_evaluate(features[k], row);
      if (!v) {
        valid = false;
        break;
      }
      d.X(i, col) = *v;
    }
    if (!valid) {
      d.X.col(col).setConstant(std::numeric_limits<double>::quiet_NaN());
      d.invalid_features.push_back(k);
    }
  }
  return d;
}

Design build_design(std::span<const Feature> features, const TrajectoryDataset& data, Split split,
                    std::size_t equation) {
  return build_design(features, data.split_states(split), data.split_response(split, equation));
}

std::optional<GramSolution> solve_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty,
                                       double yty, std::span<const Eigen::Index> columns) {
  const auto p = static_cast<Eigen::Index>(columns.size());
  if (p > kMaxColumns) throw std::invalid_argument("solve_gram: too many columns");
  SmallMatrix L(p, p);
  SmallVector z(p);
  GramSolution out;
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index cj = columns[static_cast<std::size_t>(j)];
    const double diag = gram(cj, cj);
    double d = diag;
    for (Eigen::Index k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!std::isfinite(d) || !(d > kRankTolerance * diag)) return std::nullopt;
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const Eigen::Index ci = columns[static_cast<std::size_t>(i)];
      double s = gram(ci, cj);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / ljj;
    }
    double zj = xty(cj);
    for (Eigen::Index k = 0; k < j; ++k) zj -= L(j, k) * z(k);
    z(j) = zj / ljj;
    out.logdet += 2.0 * std::log(ljj);
  }
  out.rss = yty - z.squaredNorm();
  if (out.rss < 0.0) out.rss = 0.0;
  if (!std::isfinite(out.rss)) return std::nullopt;
  return out;
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (n <= p || !X.allFinite() || !y.allFinite()) return kNegInf;
  const Eigen::MatrixXd gram = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * y;
  std::vector<Eigen::Index> cols(p);
  for (std::size_t k = 0; k < p; ++k) cols[k] = static_cast<Eigen::Index>(k);
  auto s = solve_gram(gram, xty, y.squaredNorm(), cols);
  if (!s) return kNegInf;
  return closed_form(n, p, *s);
}

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               CoefficientPrior prior) {
  const double flat = log_marginal_likelihood(X, y);
  if (prior == CoefficientPrior::Flat || flat == kNegInf) return flat;
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  const Eigen::MatrixXd gram = X.transpose() * X;
  std::vector<Eigen::Index> cols(p);
  for (std::size_t k = 0; k < p; ++k) cols[k] = static_cast<Eigen::Index>(k);
  const auto s = solve_gram(gram, X.transpose() * y, y.squaredNorm(), cols);
  return unit_information_form(n, p, s->rss);
}

double log_model_prior(ModelMask gamma, std::span<const int> complexities, double psi) {
  double sum = 0.0;
  for (std::size_t k = 0; k < complexities.size(); ++k) {
    if (includes(gamma, k)) sum += static_cast<double>(complexities[k]);
  }
  return -psi * sum;
}

double log_model_prior(ModelMask gamma, std::span<const Feature> features, double psi) {
  std::vector<int> c;
  c.reserve(features.size());
  for (const auto& f : features) c.push_back(complexity(f));
  return log_model_prior(gamma, c, psi);
}

FitResult fit_posterior_mode(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto p = static_cast<std::size_t>(X.cols());
  if (n <= p) throw RankDeficientError("fit_posterior_mode: need more rows than columns");
  if (!X.allFinite() || !y.allFinite()) {
    throw RankDeficientError("fit_posterior_mode: non-finite design");
  }
  const Eigen::MatrixXd gram = X.transpose() * X;
  const Eigen::VectorXd xty = X.transpose() * y;
  std::vector<Eigen::Index> cols(p);
  for (std::size_t k = 0; k < p; ++k) cols[k] = static_cast<Eigen::Index>(k);
  auto s = solve_gram(gram, xty, y.squaredNorm(), cols);
  if (!s) throw RankDeficientError("fit_posterior_mode: design is rank deficient");

  FitResult out;
  out.beta = X.householderQr().solve(y);
  out.rss = (y - X * out.beta).squaredNorm();
  out.logdet_gram = s->logdet;
  out.n_used = n;
  return out;
}

Eigen::VectorXd fit_least_squares_basic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(std::sqrt(kRankTolerance));
  return qr.solve(y);
}

std::vector<FeatureKey> ModelGamma::included_keys() const {
  std::vector<FeatureKey> out;
  if (!features) return out;
  for (std::size_t k = 0; k < features->size(); ++k) {
    if (includes(gamma, k)) out.push_back((*features)[k].key());
  }
  return out;
}

double log_unnormalized_posterior(ModelGamma& model, const TrajectoryDataset& data, Split split,
                                  std::size_t equation, double psi) {
  std::vector<Feature> selected;
  std::vector<int> complexities;
  if (model.features) {
    for (std::size_t k = 0; k < model.features->size(); ++k) {
      if (!includes(model.gamma, k)) continue;
      selected.push_back((*model.features)[k]);
      complexities.push_back(complexity(selected.back()));
    }
  }
  if (!model.log_marginal) {
    const Design d = build_design(selected, data, split, equation);
    model.log_marginal = d.invalid_features.empty() ? log_marginal_likelihood(d.X, d.y) : kNegInf;
  }
  if (!model.log_prior) {
    const ModelMask all = selected.empty() ? 0 : (ModelMask{~0ULL} >> (64 - selected.size()));
    model.log_prior = log_model_prior(all, complexities, psi);
  }
  return *model.log_marginal + *model.log_prior;
}

PopulationScorer::PopulationScorer(std::vector<Feature> features, const RowMatrix& states,
                                   const Eigen::VectorXd& y, double psi, CoefficientPrior prior)
    : features_(std::move(features)), psi_(psi), prior_(prior) {
  init(build_design(features_, states, y));
}

PopulationScorer::PopulationScorer(std::vector<Feature> features, const TrajectoryDataset& data,
                                   Split split, std::size_t equation, double psi,
                                   CoefficientPrior prior)
    : features_(std::move(features)), psi_(psi), prior_(prior) {
  init(build_design(features_, data, split, equation));
}

std::string_view coefficient_prior_name(CoefficientPrior prior) {
  return prior == CoefficientPrior::Flat ? "flat" : "unit_information";
}

std::optional<CoefficientPrior> coefficient_prior_from_name(std::string_view name) {
  if (name == "unit_information") return CoefficientPrior::UnitInformation;
  if (name == "flat") return CoefficientPrior::Flat;
  return std::nullopt;
}

void PopulationScorer::init(const Design& design) {
  if (features_.size() > kMaxPopulation) {
    throw std::invalid_argument("population exceeds " + std::to_string(kMaxPopulation) +
                                " features");
  }
  complexities_.reserve(features_.size());
  for (const auto& f : features_) complexities_.push_back(complexity(f));
  n_ = static_cast<std::size_t>(design.X.rows());
  log_n_ = n_ > 0 ? std::log(static_cast<double>(n_)) : 0.0;

  const auto q = static_cast<Eigen::Index>(features_.size());
  Eigen::MatrixXd Xc = design.X.rightCols(q);
  log_scale_ = Eigen::VectorXd::Zero(q);
  for (std::size_t k : design.invalid_features) {
    invalid_ |= bit(k);
    Xc.col(static_cast<Eigen::Index>(k)).setZero();
  }
  Eigen::VectorXd yc = design.y;
  if (n_ > 0) {
    yc.array() -= yc.mean();
    for (Eigen::Index c = 0; c < q; ++c) {
      if (includes(invalid_, static_cast<std::size_t>(c))) continue;
      Xc.col(c).array() -= Xc.col(c).mean();
      const double norm = Xc.col(c).norm();
      if (norm > 0.0 && std::isfinite(norm)) {
        Xc.col(c) /= norm;
        log_scale_(c) = std::log(norm);
      }
    }
  }
  gram_ = Xc.transpose() * Xc;
  xty_ = Xc.transpose() * yc;
  yty_ = yc.squaredNorm();
}

double PopulationScorer::log_marginal(ModelMask mask) const {
  if (mask & invalid_) return kNegInf;
  const std::size_t p = static_cast<std::size_t>(model_size(mask)) + 1;
  if (n_ <= p) return kNegInf;
  std::array<Eigen::Index, kMaxPopulation> cols{};
  std::size_t m = 0;
  double log_scale = 0.0;
  for (ModelMask rest = mask; rest; rest &= rest - 1) {
    const auto c = static_cast<Eigen::Index>(std::countr_zero(rest));
    cols[m++] = c;
    log_scale += log_scale_(c);
  }
  auto s = solve_gram(gram_, xty_, yty_, std::span<const Eigen::Index>(cols.data(), m));
  if (!s) return kNegInf;
  if (prior_ == CoefficientPrior::UnitInformation) {
    return unit_information_form(n_, p, s->rss);
  }
  // Restore the intercept pivot and the column norms divided out in init().
  s->logdet += log_n_ + 2.0 * log_scale;
  return closed_form(n_, p, *s);
}

double PopulationScorer::log_prior(ModelMask mask) const {
  return log_model_prior(mask, complexities_, psi_);
}

double PopulationScorer::log_posterior(ModelMask mask) const {
  const double ml = log_marginal(mask);
  if (ml == kNegInf) return kNegInf;
  return ml + log_prior(mask);
}

}  // namespace bgnlm
