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

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bgnlm/csv.hpp"
#include "bgnlm/dynamics.hpp"
#include "bgnlm/evaluation.hpp"
#include "bgnlm/gmjmcmc.hpp"

namespace bgnlm {

/// A configuration problem the user can fix; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::vector<SystemId> systems;
  double dt = 1e-4;
  double horizon = 50.0;
  std::vector<int> noise_ks;
  int replicates = 10;
  SplitSizes split_sizes;
  SplitRegions regions;
  GmjmcmcTuning sampler;
  std::uint64_t seed_base = 20240917;
  std::filesystem::path output_dir = "results";
  int threads = 1;
  /// Restricts noise levels to k in 0..7 and the alphabet to the non-radian set.
  bool paper_faithful = false;
  /// Draw new splits for every noise level instead of one set per replicate.
  bool fresh_trajectory_per_noise = false;
  bool write_diagnostics = false;
};

/// Parses the JSON config format; unknown keys are rejected.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError naming the first invalid field.
void validate_config(const ExperimentConfig& config);

/// Canonical JSON rendering of every field (used for hashing and the manifest).
std::string config_to_json(const ExperimentConfig& config);

/// Hex FNV-1a of the canonical rendering, excluding `threads` and `output_dir`.
std::string config_hash(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view text);

/// Stable seed derivation: splitmix64 folded over (base, parts...).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);

/// Seeds of one (system, k, replicate) cell.
struct CellSeeds {
  std::uint64_t noise = 0;
  std::uint64_t splits = 0;
  /// chains[equation][chain]
  std::vector<std::vector<std::uint64_t>> chains;
};

CellSeeds cell_seeds(const ExperimentConfig& config, SystemId system, int k, int replicate);

/// Noise-free trajectory and finite-difference derivatives of one system.
struct SimulatedSystem {
  SystemSpec spec;
  Trajectory trajectory;
  RowMatrix derivatives;
};

SimulatedSystem simulate_with_derivatives(SystemId id, double dt, double horizon);

/// Adds noise and draws splits over a simulated system.
TrajectoryDataset make_dataset(const SimulatedSystem& sim, double noise_sd,
                               std::uint64_t noise_seed, const SplitSizes& sizes,
                               std::uint64_t split_seed, const SplitRegions& regions);

/// Summary of one equation's fit inside a cell.
struct EquationResult {
  MetricsRow metrics;
  PosteriorSummary summary;
  std::vector<std::pair<int, ChainResult>> chains;  // (chain index, result)
};

/// All three per-equation GMJMCMC fits for one dataset.
std::vector<EquationResult> fit_cell(const TrajectoryDataset& data, const SystemSpec& spec,
                                     const GmjmcmcTuning& tuning,
                                     const std::vector<std::vector<std::uint64_t>>& chain_seeds);

struct RunOptions {
  bool resume = false;
  int threads = 0;  // 0: use the config value
  std::ostream* log = nullptr;
};

struct RunSummary {
  int completed = 0;
  int skipped = 0;
  int failed = 0;
};

/// Runs the (system x noise level x replicate) grid and writes metrics.csv,
/// terms.csv, curves.csv and manifest.json under config.output_dir.
/// With `resume`, cells recorded as completed in the manifest are not rerun.
RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

std::vector<std::string> metrics_header();
std::vector<std::string> terms_header();
std::vector<std::string> curves_header();

std::vector<std::string> metrics_fields(const MetricsRow& row);

struct CurveRow {
  std::string system;
  double noise_sd = 0.0;
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n_replicates = 0;
};

struct CurvesResult {
  std::vector<CurveRow> rows;
  /// "system,noise_sd,replicate" of cells missing from the table.
  std::vector<std::string> missing;
};

/// Groups metrics rows by (system, noise sd). Each replicate contributes the
/// mean over its equations; mean and sample sd are taken across replicates.
CurvesResult emit_curves(const csv::Table& metrics);

void write_curves_csv(std::ostream& out, const CurvesResult& curves);

}  // namespace bgnlm
