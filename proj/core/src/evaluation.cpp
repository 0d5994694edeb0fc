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

#include "bgnlm/evaluation.hpp"

#include <set>
#include <stdexcept>

#include "bgnlm/bayes_linear.hpp"

namespace bgnlm {

PowerFdr match_terms(std::span<const FeatureKey> selected, std::span<const FeatureKey> truth) {
  const std::set<FeatureKey> s(selected.begin(), selected.end());
  const std::set<FeatureKey> t(truth.begin(), truth.end());
  if (t.empty()) throw std::invalid_argument("match_terms: empty truth set");
  std::size_t hits = 0;
  for (const auto& k : s) hits += t.count(k);
  PowerFdr out;
  out.power = static_cast<double>(hits) / static_cast<double>(t.size());
  out.fdr = s.empty() ? 0.0
                      : static_cast<double>(s.size() - hits) / static_cast<double>(s.size());
  return out;
}

void fit_mpm(PosteriorSummary& summary, const TrajectoryDataset& data) {
  const Design d = build_design(summary.mpm_features, data, Split::Train, summary.equation);
  if (!d.invalid_features.empty()) {
    throw EvaluationError("fit_mpm: an MPM feature is invalid on the training split");
  }
  try {
    summary.mpm_betas = fit_posterior_mode(d.X, d.y).beta;
  } catch (const RankDeficientError&) {
    summary.mpm_betas = fit_least_squares_basic(d.X, d.y);
  }
}

Prediction predict(const PosteriorSummary& summary, const TrajectoryDataset& data, Split split) {
  const auto p = summary.mpm_features.size();
  if (static_cast<std::size_t>(summary.mpm_betas.size()) != p + 1) {
    throw std::logic_error("predict: summary has no fitted coefficients");
  }
  const auto& idx = data.splits.get(split);
  const auto cols = static_cast<std::size_t>(data.states.cols());
  const auto eq = static_cast<Eigen::Index>(summary.equation);

  Prediction out;
  std::vector<double> observed;
  std::vector<double> predicted;
  for (std::size_t i : idx) {
    std::span<const double> state(data.states.row(static_cast<Eigen::Index>(i)).data(), cols);
    double value = summary.mpm_betas(0);
    bool ok = true;
    for (std::size_t k = 0; k < p && ok; ++k) {
      auto g = try_evaluate(summary.mpm_features[k], state);
      if (!g) {
        ok = false;
        break;
      }
      value += summary.mpm_betas(static_cast<Eigen::Index>(k) + 1) * *g;
    }
    if (!ok) {
      ++out.excluded_rows;
      continue;
    }
    out.rows.push_back(i);
    observed.push_back(data.responses(static_cast<Eigen::Index>(i), eq));
    predicted.push_back(value);
  }
  out.observed = Eigen::Map<const Eigen::VectorXd>(observed.data(),
                                                   static_cast<Eigen::Index>(observed.size()));
  out.predicted = Eigen::Map<const Eigen::VectorXd>(predicted.data(),
                                                    static_cast<Eigen::Index>(predicted.size()));
  return out;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat, double baseline_mean) {
  if (y.size() != yhat.size()) throw std::invalid_argument("r_squared: length mismatch");
  if (y.size() < 2) throw std::invalid_argument("r_squared: need at least 2 rows");
  const double total = (y.array() - baseline_mean).square().sum();
  if (!(total > 0.0)) throw std::invalid_argument("r_squared: zero baseline variance");
  return 1.0 - (y - yhat).squaredNorm() / total;
}

MetricsRow evaluate_equation(const PosteriorSummary& summary, const TrajectoryDataset& data,
                             std::span<const FeatureKey> truth) {
  MetricsRow row;
  row.noise_sd = data.noise_sd;
  row.equation = summary.equation;
  const PowerFdr pf = match_terms(summary.mpm_keys, truth);
  row.power = pf.power;
  row.fdr = pf.fdr;

  const double baseline = data.split_response(Split::Train, summary.equation).mean();
  const Prediction train = predict(summary, data, Split::Train);
  const Prediction insample = predict(summary, data, Split::Insample);
  const Prediction oos = predict(summary, data, Split::Oos);
  row.r2_train = r_squared(train.observed, train.predicted, baseline);
  row.r2_insample = r_squared(insample.observed, insample.predicted, baseline);
  row.r2_oos = r_squared(oos.observed, oos.predicted, baseline);
  row.excluded_rows_train = train.excluded_rows;
  row.excluded_rows_insample = insample.excluded_rows;
  row.excluded_rows_oos = oos.excluded_rows;
  return row;
}

}  // namespace bgnlm
