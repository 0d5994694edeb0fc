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

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bgnlm/feature.hpp"

namespace bgnlm {

inline constexpr std::size_t kStateDim = 3;

using State3 = std::array<double, kStateDim>;

/// n x m matrix, one state (or derivative) per contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class SystemId { Linear3D, Lorenz3D, Hybrid3D };

std::string_view system_name(SystemId id);
std::optional<SystemId> system_from_name(std::string_view name);

struct SystemSpec {
  SystemId id;
  std::string name;
  std::vector<std::pair<std::string, double>> parameters;
  State3 initial_state;
  std::function<State3(const State3&)> rhs;
  /// Ground-truth feature keys of each equation, intercept excluded.
  std::array<std::vector<FeatureKey>, kStateDim> true_terms;
  std::array<double, kStateDim> true_intercepts;
};

/// The three benchmark systems with their reference parameters.
SystemSpec make_system(SystemId id);

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Trajectory {
  std::vector<double> times;
  RowMatrix states;
};

/// Fixed-step classic RK4 from the system's initial state over [0, horizon].
/// t_i = i * dt exactly; horizon / dt must be an integer.
Trajectory simulate_system(const SystemSpec& spec, double dt, double horizon);

/// Central differences inside, second-order one-sided differences at both ends.
/// Throws std::invalid_argument on fewer than 3 rows or a non-uniform grid.
RowMatrix finite_difference_derivatives(std::span<const double> times, const RowMatrix& states);

/// Standard deviation of noise level k: 0.1 * 2^k.
double noise_sd_for_level(int k);

/// derivs + iid N(0, sd^2) per entry, reproducible from `seed`.
RowMatrix add_noise(const RowMatrix& derivs, double noise_sd, std::uint64_t seed);

enum class Split { Train, Insample, Oos };

std::string_view split_name(Split split);

struct SplitSizes {
  std::size_t train = 1000;
  std::size_t insample = 1000;
  std::size_t oos = 1000;
};

/// Interior region (lo, hi) feeds train/insample; the edges [t0, lo] and [hi, tn]
/// feed the out-of-sample split. Boundary points go to the edges.
struct SplitRegions {
  double interior_lo = 0.05;
  double interior_hi = 49.5;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> insample;
  std::vector<std::size_t> oos;

  const std::vector<std::size_t>& get(Split split) const;
};

/// Index populations of the interior and edge regions, ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_regions(
    std::span<const double> times, const SplitRegions& regions);

/// Uniform sampling without replacement; every list is returned sorted.
/// Throws std::invalid_argument when a region cannot supply the requested rows.
Splits make_splits(std::span<const double> times, const SplitSizes& sizes, std::uint64_t seed,
                   const SplitRegions& regions = {});

/// Everything one replicate contributes to a fit: states, responses and splits.
struct TrajectoryDataset {
  std::vector<double> times;
  RowMatrix states;
  RowMatrix derivatives;  // noise-free finite differences
  RowMatrix responses;    // derivatives plus observation noise
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
  Splits splits;

  /// Rows of `states` selected by the split, copied contiguously.
  RowMatrix split_states(Split split) const;
  /// Column `equation` of `responses` restricted to the split.
  Eigen::VectorXd split_response(Split split, std::size_t equation) const;
};

/// CSV dump: header t,x0,x1,x2,y0,y1,y2,split with 17 significant digits.
void write_dataset_csv(std::ostream& out, const TrajectoryDataset& data);

}  // namespace bgnlm
