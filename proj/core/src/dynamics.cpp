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

#include "bgnlm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "bgnlm/csv.hpp"

namespace bgnlm {

std::string_view system_name(SystemId id) {
  switch (id) {
    case SystemId::Linear3D: return "Linear3D";
    case SystemId::Lorenz3D: return "Lorenz3D";
    case SystemId::Hybrid3D: return "Hybrid3D";
  }
  return "?";
}

std::optional<SystemId> system_from_name(std::string_view name) {
  for (SystemId id : {SystemId::Linear3D, SystemId::Lorenz3D, SystemId::Hybrid3D}) {
    if (system_name(id) == name) return id;
  }
  return std::nullopt;
}

namespace {

std::vector<FeatureKey> keys(std::initializer_list<const char*> texts) {
  std::vector<FeatureKey> out;
  for (const char* t : texts) out.push_back(canonicalize(parse_feature(t).canonical()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SystemSpec make_system(SystemId id) {
  SystemSpec spec;
  spec.id = id;
  spec.name = std::string(system_name(id));
  switch (id) {
    case SystemId::Linear3D: {
      // x' = a x + b xy, y' = c x + d xy, z' = e z
      constexpr double a = -1, b = 20, c = -20, d = -1, e = -3;
      spec.parameters = {{"a", a}, {"b", b}, {"c", c}, {"d", d}, {"e", e}};
      spec.initial_state = {2.0, 0.0, 1.0};
      spec.rhs = [=](const State3& s) -> State3 {
        const double xy = s[0] * s[1];
        return {a * s[0] + b * xy, c * s[0] + d * xy, e * s[2]};
      };
      spec.true_terms = {keys({"x0", "x0*x1"}), keys({"x0", "x0*x1"}), keys({"x2"})};
      spec.true_intercepts = {0.0, 0.0, 0.0};
      break;
    }
    case SystemId::Lorenz3D: {
      constexpr double sigma = 10, rho = 28, beta = 8.0 / 3.0;
      spec.parameters = {{"sigma", sigma}, {"rho", rho}, {"beta", beta}};
      spec.initial_state = {-0.5, -2.0, 3.0};
      spec.rhs = [=](const State3& s) -> State3 {
        return {sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2]};
      };
      spec.true_terms = {keys({"x0", "x1"}), keys({"x0", "x0*x2", "x1"}), keys({"x0*x1", "x2"})};
      spec.true_intercepts = {0.0, 0.0, 0.0};
      break;
    }
    case SystemId::Hybrid3D: {
      // Rossler-Lorenz hybrid; sin is in radians.
      constexpr double a = 0.2, b = 0.1, c = 0.4, d = 5.7;
      spec.parameters = {{"a", a}, {"b", b}, {"c", c}, {"d", d}};
      spec.initial_state = {0.5, -1.0, 2.0};
      spec.rhs = [=](const State3& s) -> State3 {
        return {-s[1] - s[2] + a * std::sin(s[0]), s[0] + b * s[1], c + s[2] * (s[0] - d)};
      };
      spec.true_terms = {keys({"x1", "x2", "sin_rad(x0)"}), keys({"x0", "x1"}),
                         keys({"x0*x2", "x2"})};
      spec.true_intercepts = {0.0, 0.0, c};
      break;
    }
  }
  return spec;
}

Trajectory simulate_system(const SystemSpec& spec, double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon >= 0.0)) {
    throw std::invalid_argument("simulate_system: dt must be positive and horizon non-negative");
  }
  const double ratio = horizon / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6) {
    throw std::invalid_argument("simulate_system: horizon is not a multiple of dt");
  }

  Trajectory out;
  out.times.resize(steps + 1);
  out.states.resize(static_cast<Eigen::Index>(steps + 1), kStateDim);

  State3 s = spec.initial_state;
  auto store = [&](std::size_t i) {
    for (std::size_t c = 0; c < kStateDim; ++c) {
      if (!std::isfinite(s[c])) {
        throw SimulationError(spec.name + ": non-finite state at step " + std::to_string(i));
      }
      out.states(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = s[c];
    }
    out.times[i] = static_cast<double>(i) * dt;
  };
  auto axpy = [](const State3& x, double h, const State3& k) {
    return State3{x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]};
  };

  store(0);
  const double half = 0.5 * dt;
  for (std::size_t i = 1; i <= steps; ++i) {
    const State3 k1 = spec.rhs(s);
    const State3 k2 = spec.rhs(axpy(s, half, k1));
    const State3 k3 = spec.rhs(axpy(s, half, k2));
    const State3 k4 = spec.rhs(axpy(s, dt, k3));
    for (std::size_t c = 0; c < kStateDim; ++c) {
      s[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    store(i);
  }
  return out;
}

RowMatrix finite_difference_derivatives(std::span<const double> times, const RowMatrix& states) {
  const std::size_t n = times.size();
  if (n < 3) throw std::invalid_argument("finite differences need at least 3 grid points");
  if (static_cast<std::size_t>(states.rows()) != n) {
    throw std::invalid_argument("finite differences: times and states disagree in length");
  }
  const double span = times[n - 1] - times[0];
  const double h = span / static_cast<double>(n - 1);
  if (!(h > 0.0)) throw std::invalid_argument("finite differences: grid is not increasing");
  for (std::size_t i = 0; i < n; ++i) {
    const double expected = times[0] + static_cast<double>(i) * h;
    if (std::abs(times[i] - expected) > 1e-12 * span) {
      throw std::invalid_argument("finite differences: non-uniform grid at index " +
                                  std::to_string(i));
    }
  }

  RowMatrix d(states.rows(), states.cols());
  const double inv = 1.0 / (2.0 * h);
  const auto last = static_cast<Eigen::Index>(n - 1);
  d.row(0) = (-3.0 * states.row(0) + 4.0 * states.row(1) - states.row(2)) * inv;
  for (Eigen::Index i = 1; i < last; ++i) {
    d.row(i) = (states.row(i + 1) - states.row(i - 1)) * inv;
  }
  d.row(last) = (3.0 * states.row(last) - 4.0 * states.row(last - 1) + states.row(last - 2)) * inv;
  return d;
}

double noise_sd_for_level(int k) { return 0.1 * std::ldexp(1.0, k); }

RowMatrix add_noise(const RowMatrix& derivs, double noise_sd, std::uint64_t seed) {
  if (noise_sd < 0.0) throw std::invalid_argument("noise sd must be non-negative");
  RowMatrix out = derivs;
  if (noise_sd == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_sd);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += normal(rng);
  }
  return out;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Insample: return "insample";
    case Split::Oos: return "oos";
  }
  return "?";
}

const std::vector<std::size_t>& Splits::get(Split split) const {
  switch (split) {
    case Split::Train: return train;
    case Split::Insample: return insample;
    case Split::Oos: return oos;
  }
  return train;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_regions(
    std::span<const double> times, const SplitRegions& regions) {
  // Points within a billionth of a step of a boundary count as on it.
  const double tol = times.size() > 1 ? 1e-9 * std::abs(times[1] - times[0]) : 0.0;
  std::vector<std::size_t> interior;
  std::vector<std::size_t> edge;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t > regions.interior_lo + tol && t < regions.interior_hi - tol) {
      interior.push_back(i);
    } else {
      edge.push_back(i);
    }
  }
  return {std::move(interior), std::move(edge)};
}

Splits make_splits(std::span<const double> times, const SplitSizes& sizes, std::uint64_t seed,
                   const SplitRegions& regions) {
  auto [interior, edge] = split_regions(times, regions);
  if (sizes.train + sizes.insample > interior.size()) {
    throw std::invalid_argument("make_splits: interior region has " +
                                std::to_string(interior.size()) + " points, requested " +
                                std::to_string(sizes.train + sizes.insample));
  }
  if (sizes.oos > edge.size()) {
    throw std::invalid_argument("make_splits: edge region has " + std::to_string(edge.size()) +
                                " points, requested " + std::to_string(sizes.oos));
  }

  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first `count` entries become a uniform sample.
  auto sample = [&rng](std::vector<std::size_t>& pool, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
  };
  sample(interior, sizes.train + sizes.insample);
  sample(edge, sizes.oos);

  Splits out;
  const auto train_end = interior.begin() + static_cast<std::ptrdiff_t>(sizes.train);
  const auto insample_end = train_end + static_cast<std::ptrdiff_t>(sizes.insample);
  out.train.assign(interior.begin(), train_end);
  out.insample.assign(train_end, insample_end);
  out.oos.assign(edge.begin(), edge.begin() + static_cast<std::ptrdiff_t>(sizes.oos));
  for (auto* list : {&out.train, &out.insample, &out.oos}) std::sort(list->begin(), list->end());
  return out;
}

RowMatrix TrajectoryDataset::split_states(Split split) const {
  const auto& idx = splits.get(split);
  RowMatrix out(static_cast<Eigen::Index>(idx.size()), states.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = states.row(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

Eigen::VectorXd TrajectoryDataset::split_response(Split split, std::size_t equation) const {
  const auto& idx = splits.get(split);
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out(static_cast<Eigen::Index>(r)) =
        responses(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(equation));
  }
  return out;
}

void write_dataset_csv(std::ostream& out, const TrajectoryDataset& data) {
  std::vector<std::string_view> label(data.times.size(), "unused");
  for (Split s : {Split::Train, Split::Insample, Split::Oos}) {
    for (std::size_t i : data.splits.get(s)) label[i] = split_name(s);
  }
  out << csv::schema_line() << '\n';
  csv::write_row(out, {"t", "x0", "x1", "x2", "y0", "y1", "y2", "split"});
  std::vector<std::string> fields(8);
  for (std::size_t i = 0; i < data.times.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    fields[0] = csv::format_double(data.times[i]);
    for (Eigen::Index c = 0; c < 3; ++c) {
      fields[static_cast<std::size_t>(1 + c)] = csv::format_double(data.states(r, c));
      fields[static_cast<std::size_t>(4 + c)] = csv::format_double(data.responses(r, c));
    }
    fields[7] = std::string(label[i]);
    csv::write_row(out, fields);
  }
}

}  // namespace bgnlm
