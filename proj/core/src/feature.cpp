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

#include "bgnlm/feature.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <utility>

namespace bgnlm {

namespace {

constexpr std::array<TransformKind, 11> kAllTransforms = {
    TransformKind::SinRad,     TransformKind::CosRad,  TransformKind::SinDeg,
    TransformKind::CosDeg,     TransformKind::PowNeg2, TransformKind::PowNeg1,
    TransformKind::PowNegHalf, TransformKind::PowHalf, TransformKind::Pow2,
    TransformKind::Pow3,       TransformKind::LogAbs,
};

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string render_operand(const FeatureKey& key, bool is_product) {
  if (is_product) return "(" + key.text + ")";
  return key.text;
}

}  // namespace

std::span<const TransformKind> all_transforms() { return kAllTransforms; }

std::vector<TransformKind> paper_faithful_transforms() {
  return {TransformKind::SinDeg,  TransformKind::CosDeg,     TransformKind::PowNeg2,
          TransformKind::PowNeg1, TransformKind::PowNegHalf, TransformKind::PowHalf,
          TransformKind::Pow2,    TransformKind::Pow3,       TransformKind::LogAbs};
}

bool is_trigonometric(TransformKind kind) {
  switch (kind) {
    case TransformKind::SinRad:
    case TransformKind::CosRad:
    case TransformKind::SinDeg:
    case TransformKind::CosDeg:
      return true;
    default:
      return false;
  }
}

bool is_fractional_power(TransformKind kind) {
  switch (kind) {
    case TransformKind::PowNeg2:
    case TransformKind::PowNeg1:
    case TransformKind::PowNegHalf:
    case TransformKind::PowHalf:
    case TransformKind::Pow2:
    case TransformKind::Pow3:
      return true;
    default:
      return false;
  }
}

std::string_view transform_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::SinRad: return "sin_rad";
    case TransformKind::CosRad: return "cos_rad";
    case TransformKind::SinDeg: return "sin_deg";
    case TransformKind::CosDeg: return "cos_deg";
    case TransformKind::PowNeg2: return "pow-2";
    case TransformKind::PowNeg1: return "pow-1";
    case TransformKind::PowNegHalf: return "pow-0.5";
    case TransformKind::PowHalf: return "pow0.5";
    case TransformKind::Pow2: return "pow2";
    case TransformKind::Pow3: return "pow3";
    case TransformKind::LogAbs: return "log_abs";
  }
  return "?";
}

std::optional<TransformKind> transform_from_name(std::string_view name) {
  for (TransformKind kind : kAllTransforms) {
    if (transform_name(kind) == name) return kind;
  }
  return std::nullopt;
}

struct Feature::Node {
  Kind kind;
  std::size_t variable = 0;
  TransformKind transform = TransformKind::SinRad;
  std::optional<Feature> first;
  std::optional<Feature> second;
  int depth = 0;
  int operators = 0;
  std::size_t max_variable = 0;
  FeatureKey key;
};

Feature::Feature(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Feature Feature::variable(std::size_t index) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Variable;
  node->variable = index;
  node->max_variable = index;
  node->key.text = "x" + std::to_string(index);
  return Feature(std::move(node));
}

Feature Feature::transform(TransformKind kind, Feature child) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Transform;
  node->transform = kind;
  node->depth = child.depth() + 1;
  node->operators = child.node_->operators + 1;
  node->max_variable = child.max_variable_index();
  node->key.text = std::string(transform_name(kind)) + "(" + child.key().text + ")";
  node->first = std::move(child);
  return Feature(std::move(node));
}

Feature Feature::product(Feature left, Feature right) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Product;
  node->depth = std::max(left.depth(), right.depth()) + 1;
  node->operators = left.node_->operators + right.node_->operators + 1;
  node->max_variable = std::max(left.max_variable_index(), right.max_variable_index());
  std::string a = render_operand(left.key(), left.kind() == Kind::Product);
  std::string b = render_operand(right.key(), right.kind() == Kind::Product);
  if (b < a) std::swap(a, b);
  node->key.text = a + "*" + b;
  node->first = std::move(left);
  node->second = std::move(right);
  return Feature(std::move(node));
}

Feature::Kind Feature::kind() const { return node_->kind; }

std::size_t Feature::variable_index() const {
  assert(node_->kind == Kind::Variable);
  return node_->variable;
}

TransformKind Feature::transform_kind() const {
  assert(node_->kind == Kind::Transform);
  return node_->transform;
}

const Feature& Feature::child() const {
  assert(node_->kind == Kind::Transform);
  return *node_->first;
}

const Feature& Feature::left() const {
  assert(node_->kind == Kind::Product);
  return *node_->first;
}

const Feature& Feature::right() const {
  assert(node_->kind == Kind::Product);
  return *node_->second;
}

int Feature::depth() const { return node_->depth; }

int Feature::operator_count() const { return node_->operators; }

std::size_t Feature::max_variable_index() const { return node_->max_variable; }

const FeatureKey& Feature::key() const { return node_->key; }

Feature Feature::canonical() const {
  switch (node_->kind) {
    case Kind::Variable:
      return *this;
    case Kind::Transform:
      return transform(node_->transform, child().canonical());
    case Kind::Product: {
      Feature a = left().canonical();
      Feature b = right().canonical();
      if (render_operand(b.key(), b.kind() == Kind::Product) <
          render_operand(a.key(), a.kind() == Kind::Product)) {
        std::swap(a, b);
      }
      return product(std::move(a), std::move(b));
    }
  }
  return *this;
}

bool Feature::same_tree(const Feature& other) const {
  if (node_ == other.node_) return true;
  if (kind() != other.kind()) return false;
  switch (kind()) {
    case Kind::Variable:
      return variable_index() == other.variable_index();
    case Kind::Transform:
      return transform_kind() == other.transform_kind() && child().same_tree(other.child());
    case Kind::Product:
      return left().same_tree(other.left()) && right().same_tree(other.right());
  }
  return false;
}

namespace {

std::optional<double> apply_transform(TransformKind kind, double v) {
  const double mag = std::abs(v);
  switch (kind) {
    case TransformKind::SinRad: return std::sin(v);
    case TransformKind::CosRad: return std::cos(v);
    case TransformKind::SinDeg: return std::sin(kDegToRad * v);
    case TransformKind::CosDeg: return std::cos(kDegToRad * v);
    case TransformKind::PowNeg2:
      if (mag < kGuardEpsilon) return std::nullopt;
      return 1.0 / (v * v);
    case TransformKind::PowNeg1:
      if (mag < kGuardEpsilon) return std::nullopt;
      return 1.0 / v;
    case TransformKind::PowNegHalf:
      if (mag < kGuardEpsilon) return std::nullopt;
      return std::copysign(1.0 / std::sqrt(mag), v);
    case TransformKind::PowHalf: return std::copysign(std::sqrt(mag), v);
    case TransformKind::Pow2: return v * v;
    case TransformKind::Pow3: return v * v * v;
    case TransformKind::LogAbs:
      if (mag < kGuardEpsilon) return std::nullopt;
      return std::log(mag);
  }
  return std::nullopt;
}

}  // namespace

std::optional<double> try_evaluate(const Feature& f, std::span<const double> state) {
  std::optional<double> out;
  switch (f.kind()) {
    case Feature::Kind::Variable: {
      if (f.variable_index() >= state.size()) return std::nullopt;
      out = state[f.variable_index()];
      break;
    }
    case Feature::Kind::Transform: {
      auto inner = try_evaluate(f.child(), state);
      if (!inner) return std::nullopt;
      out = apply_transform(f.transform_kind(), *inner);
      break;
    }
    case Feature::Kind::Product: {
      auto a = try_evaluate(f.left(), state);
      if (!a) return std::nullopt;
      auto b = try_evaluate(f.right(), state);
      if (!b) return std::nullopt;
      out = *a * *b;
      break;
    }
  }
  if (out && !std::isfinite(*out)) return std::nullopt;
  return out;
}

double evaluate(const Feature& f, std::span<const double> state) {
  if (f.max_variable_index() >= state.size()) {
    throw EvaluationError("feature " + f.key().text + " needs state dimension " +
                          std::to_string(f.max_variable_index() + 1));
  }
  for (double v : state) {
    if (!std::isfinite(v)) throw EvaluationError("non-finite state component");
  }
  auto value = try_evaluate(f, state);
  if (!value) throw EvaluationError("guarded domain violated by " + f.key().text);
  return *value;
}

FeatureKey canonicalize(const Feature& f) { return f.key(); }

int complexity(const Feature& f) { return 1 + f.operator_count(); }

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Feature parse_all() {
    Feature f = parse_expression();
    if (pos_ != text_.size()) fail("trailing characters");
    return f;
  }

 private:
  // expression := operand ('*' operand)?
  Feature parse_expression() {
    Feature left = parse_operand();
    if (pos_ < text_.size() && text_[pos_] == '*') {
      ++pos_;
      Feature right = parse_operand();
      return Feature::product(std::move(left), std::move(right));
    }
    return left;
  }

  // operand := 'x' digits | name '(' expression ')' | '(' expression ')'
  Feature parse_operand() {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '(') {
      ++pos_;
      Feature inner = parse_expression();
      expect(')');
      return inner;
    }
    const std::size_t open = text_.find('(', pos_);
    const std::size_t stop = text_.find_first_of("*)", pos_);
    if (open != std::string_view::npos && (stop == std::string_view::npos || open < stop)) {
      const std::string_view name = text_.substr(pos_, open - pos_);
      auto kind = transform_from_name(name);
      if (!kind) fail("unknown transform '" + std::string(name) + "'");
      pos_ = open + 1;
      Feature inner = parse_expression();
      expect(')');
      return Feature::transform(*kind, std::move(inner));
    }
    if (text_[pos_] != 'x') fail("expected variable");
    ++pos_;
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + begin, text_.data() + pos_, index);
    if (ec != std::errc{} || begin == pos_) fail("bad variable index");
    return Feature::variable(index);
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FeatureParseError("cannot parse feature '" + std::string(text_) + "' at offset " +
                            std::to_string(pos_) + ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Feature parse_feature(std::string_view text) { return Parser(text).parse_all(); }

std::optional<Feature> mutate_modify(const Feature& f, TransformKind kind,
                                     const GenerationLimits& limits) {
  if (f.depth() + 1 > limits.max_depth) return std::nullopt;
  if (is_trigonometric(kind) && f.kind() == Feature::Kind::Transform &&
      f.transform_kind() == kind) {
    return std::nullopt;
  }
  return Feature::transform(kind, f);
}

std::optional<Feature> mutate_multiply(const Feature& a, const Feature& b,
                                       const GenerationLimits& limits) {
  if (std::max(a.depth(), b.depth()) + 1 > limits.max_depth) return std::nullopt;
  return Feature::product(a, b).canonical();
}

std::vector<Feature> original_variables(std::size_t dimension) {
  std::vector<Feature> out;
  out.reserve(dimension);
  for (std::size_t i = 0; i < dimension; ++i) out.push_back(Feature::variable(i));
  return out;
}

}  // namespace bgnlm
