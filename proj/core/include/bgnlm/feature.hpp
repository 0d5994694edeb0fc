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

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bgnlm {

/// Unary transforms available to the modification operator.
///
/// The `Pow*` members are the first-order fractional polynomial family.
/// Power 1 is the identity and is never wrapped; power 0 is `LogAbs`.
enum class TransformKind {
  SinRad,
  CosRad,
  SinDeg,
  CosDeg,
  PowNeg2,
  PowNeg1,
  PowNegHalf,
  PowHalf,
  Pow2,
  Pow3,
  LogAbs,
};

/// Every transform, in declaration order.
std::span<const TransformKind> all_transforms();

/// {SinDeg, CosDeg, fractional powers, LogAbs}: the alphabet without radian trig.
std::vector<TransformKind> paper_faithful_transforms();

bool is_trigonometric(TransformKind kind);
bool is_fractional_power(TransformKind kind);

/// Rendering used in canonical strings, e.g. "sin_rad", "pow-0.5", "log_abs".
std::string_view transform_name(TransformKind kind);
std::optional<TransformKind> transform_from_name(std::string_view name);

/// Raised when a feature cannot be evaluated at a given state.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by `parse_feature` on text outside the canonical grammar.
class FeatureParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical text of a feature; equal keys iff equal canonical trees.
struct FeatureKey {
  std::string text;

  friend auto operator<=>(const FeatureKey&, const FeatureKey&) = default;
};

/// Absolute threshold below which negative powers and log|v| refuse to evaluate.
inline constexpr double kGuardEpsilon = 1e-8;

/// Immutable symbolic expression over state coordinates.
///
/// A feature is a Variable leaf, a unary Transform, or a binary Product.
/// Nodes are shared, so copies are cheap and safe to pass between threads.
class Feature {
 public:
  enum class Kind { Variable, Transform, Product };

  static Feature variable(std::size_t index);
  static Feature transform(TransformKind kind, Feature child);
  /// Keeps the argument order; see `canonical()` for the normal form.
  static Feature product(Feature left, Feature right);

  Kind kind() const;
  std::size_t variable_index() const;  // Variable only
  TransformKind transform_kind() const;  // Transform only
  const Feature& child() const;         // Transform only
  const Feature& left() const;          // Product only
  const Feature& right() const;         // Product only

  /// Operator levels above the leaves; a bare variable has depth 0.
  int depth() const;
  /// Number of Transform and Product nodes.
  int operator_count() const;
  /// Largest variable index referenced.
  std::size_t max_variable_index() const;

  /// Canonical key, precomputed at construction.
  const FeatureKey& key() const;

  /// Same tree with every product's children in canonical-string order.
  Feature canonical() const;

  /// Structural equality of the trees as built (not canonicalized).
  bool same_tree(const Feature& other) const;

 private:
  struct Node;
  explicit Feature(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

/// g(x) at one state. Throws EvaluationError on non-finite input, on a
/// guarded-domain violation, or on a non-finite result.
double evaluate(const Feature& f, std::span<const double> state);

/// Non-throwing counterpart of `evaluate`; nullopt where `evaluate` would throw.
std::optional<double> try_evaluate(const Feature& f, std::span<const double> state);

FeatureKey canonicalize(const Feature& f);

/// 1 + number of Transform and Product nodes.
int complexity(const Feature& f);

/// Inverse of the canonical rendering. Accepts any product order and
/// returns the tree as written.
Feature parse_feature(std::string_view text);

/// Bounds enforced by the generating operators.
struct GenerationLimits {
  int max_depth = 3;
  int max_complexity = 6;
};

/// Transform(kind, f), or nullopt when the depth limit would be exceeded or
/// `kind` is a trig transform directly wrapping the same trig transform.
std::optional<Feature> mutate_modify(const Feature& f, TransformKind kind,
                                     const GenerationLimits& limits = {});

/// Canonicalized Product(a, b), or nullopt when the depth limit would be exceeded.
std::optional<Feature> mutate_multiply(const Feature& a, const Feature& b,
                                       const GenerationLimits& limits = {});

/// The original coordinates x0..x{m-1}.
std::vector<Feature> original_variables(std::size_t dimension);

}  // namespace bgnlm
