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

#include "bgnlm/csv.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "bgnlm/feature.hpp"

using namespace bgnlm;

namespace {

const Feature x0 = Feature::variable(0);
const Feature x1 = Feature::variable(1);
const Feature x2 = Feature::variable(2);

double eval3(const Feature& f, double a, double b, double c) {
  const std::vector<double> s{a, b, c};
  return evaluate(f, s);
}

// Random generation by the two operators, as the sampler does it.
Feature random_feature(std::mt19937_64& rng, int ops) {
  std::uniform_int_distribution<std::size_t> var(0, 2);
  std::uniform_int_distribution<std::size_t> kind(0, all_transforms().size() - 1);
  std::bernoulli_distribution coin(0.5);
  Feature f = Feature::variable(var(rng));
  for (int i = 0; i < ops; ++i) {
    std::optional<Feature> next;
    if (coin(rng)) {
      next = mutate_modify(f, all_transforms()[kind(rng)]);
    } else {
      next = mutate_multiply(f, random_feature(rng, i % 2));
    }
    if (next) f = *next;
  }
  return f;
}

}  // namespace

TEST_CASE("evaluate examples") {
  CHECK(eval3(x0, 2, 0, 1) == 2.0);
  CHECK(eval3(Feature::transform(TransformKind::SinDeg, x0), 90, 0, 0) == 1.0);
  CHECK(eval3(Feature::product(x0, x1), -0.5, -2, 3) == 1.0);
}

TEST_CASE("transform semantics") {
  CHECK(eval3(Feature::transform(TransformKind::CosDeg, x0), 180, 0, 0) == doctest::Approx(-1.0));
  CHECK(eval3(Feature::transform(TransformKind::PowHalf, x0), -4, 0, 0) == -2.0);
  CHECK(eval3(Feature::transform(TransformKind::PowNegHalf, x0), 4, 0, 0) == 0.5);
  CHECK(eval3(Feature::transform(TransformKind::PowNegHalf, x0), -4, 0, 0) == -0.5);
  CHECK(eval3(Feature::transform(TransformKind::PowNeg1, x0), -4, 0, 0) == -0.25);
  CHECK(eval3(Feature::transform(TransformKind::PowNeg2, x0), -2, 0, 0) == 0.25);
  CHECK(eval3(Feature::transform(TransformKind::Pow2, x0), -3, 0, 0) == 9.0);
  CHECK(eval3(Feature::transform(TransformKind::Pow3, x0), -2, 0, 0) == -8.0);
  CHECK(eval3(Feature::transform(TransformKind::LogAbs, x0), -std::numbers::e, 0, 0) ==
        doctest::Approx(1.0));
}

TEST_CASE("guarded domains") {
  const std::vector<double> zero{0.0, 1.0, 1.0};
  const std::vector<double> tiny{5e-9, 1.0, 1.0};
  for (auto kind : {TransformKind::PowNeg2, TransformKind::PowNeg1, TransformKind::PowNegHalf,
                    TransformKind::LogAbs}) {
    const Feature f = Feature::transform(kind, x0);
    CHECK_FALSE(try_evaluate(f, zero).has_value());
    CHECK_FALSE(try_evaluate(f, tiny).has_value());
    CHECK_THROWS_AS(evaluate(f, zero), EvaluationError);
  }
  // Positive powers are defined at zero.
  CHECK(*try_evaluate(Feature::transform(TransformKind::PowHalf, x0), zero) == 0.0);
  const std::vector<double> bad{std::nan(""), 0.0, 0.0};
  CHECK_THROWS_AS(evaluate(x1, bad), EvaluationError);
  const std::vector<double> short_state{1.0};
  CHECK_THROWS_AS(evaluate(x2, short_state), EvaluationError);
}

TEST_CASE("canonicalize examples") {
  CHECK(canonicalize(Feature::product(x1, x0)).text == "x0*x1");
  CHECK(canonicalize(Feature::product(x0, x1)).text == "x0*x1");
  CHECK(canonicalize(Feature::transform(TransformKind::Pow2, x2)).text == "pow2(x2)");
  CHECK(canonicalize(Feature::transform(TransformKind::PowNegHalf, x2)).text == "pow-0.5(x2)");
  CHECK(canonicalize(Feature::transform(TransformKind::SinRad, x0)).text == "sin_rad(x0)");
}

TEST_CASE("nested products keep their shape") {
  const Feature left = Feature::product(Feature::product(x1, x0), x2);
  const Feature right = Feature::product(x2, Feature::product(x0, x1));
  CHECK(canonicalize(left) == canonicalize(right));
  CHECK(canonicalize(left).text == "(x0*x1)*x2");
  const Feature other = Feature::product(x0, Feature::product(x1, x2));
  CHECK(canonicalize(other) != canonicalize(left));
  CHECK(parse_feature(canonicalize(other).text).key() == canonicalize(other));
}

TEST_CASE("complexity examples") {
  CHECK(complexity(x0) == 1);
  CHECK(complexity(Feature::product(x0, x1)) == 2);
  CHECK(complexity(Feature::transform(TransformKind::SinRad, Feature::product(x0, x1))) == 3);
}

TEST_CASE("mutate_modify examples") {
  auto a = mutate_modify(x0, TransformKind::SinRad);
  REQUIRE(a);
  CHECK(a->same_tree(Feature::transform(TransformKind::SinRad, x0)));
  CHECK_FALSE(mutate_modify(*a, TransformKind::SinRad));
  CHECK(mutate_modify(*a, TransformKind::CosRad));
  auto b = mutate_modify(Feature::product(x0, x2), TransformKind::Pow2);
  REQUIRE(b);
  CHECK(b->key().text == "pow2(x0*x2)");

  GenerationLimits limits;
  limits.max_depth = 1;
  CHECK_FALSE(mutate_modify(*a, TransformKind::Pow2, limits));
  CHECK(mutate_modify(x0, TransformKind::Pow2, limits));
}

TEST_CASE("mutate_multiply examples") {
  CHECK(mutate_multiply(x0, x1)->key().text == "x0*x1");
  CHECK(mutate_multiply(x1, x0)->key().text == "x0*x1");
  CHECK(mutate_multiply(x0, x0)->key().text == "x0*x0");
  GenerationLimits limits;
  limits.max_depth = 1;
  CHECK_FALSE(mutate_multiply(*mutate_multiply(x0, x1), x2, limits));
}

TEST_CASE("parse round trip and errors") {
  for (const char* text : {"x0", "x12", "sin_deg(x1)", "pow-2(cos_rad(x0*x2))", "log_abs(x1)*x2",
                           "(x0*x1)*pow0.5(x2)", "pow3(x0)*sin_rad(x1)"}) {
    CHECK(parse_feature(text).key().text == text);
  }
  CHECK(parse_feature("x1*x0").key().text == "x0*x1");
  for (const char* bad : {"", "y0", "sin(x0)", "x0*", "pow7(x0)", "x0*x1*x2", "(x0", "x0)"}) {
    CHECK_THROWS_AS(parse_feature(bad), FeatureParseError);
  }
}

TEST_CASE("properties over randomly generated features") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Feature a = random_feature(rng, trial % 4);
    const Feature b = random_feature(rng, (trial / 4) % 3);

    const FeatureKey key = canonicalize(a);
    CHECK(canonicalize(parse_feature(key.text)) == key);
    CHECK(a.depth() <= GenerationLimits{}.max_depth);

    auto ab = mutate_multiply(a, b);
    auto ba = mutate_multiply(b, a);
    REQUIRE(ab.has_value() == ba.has_value());
    if (!ab) continue;
    CHECK(canonicalize(*ab) == canonicalize(*ba));
    CHECK(complexity(*ab) == complexity(a) + complexity(b));

    const std::vector<double> s{u(rng), u(rng), u(rng)};
    auto va = try_evaluate(a, s);
    auto vb = try_evaluate(b, s);
    auto vab = try_evaluate(*ab, s);
    if (va && vb && vab) {
      CHECK(*vab == doctest::Approx(*va * *vb).epsilon(1e-14));
    }
    if (va) CHECK(*try_evaluate(parse_feature(key.text), s) == *va);
  }
}

TEST_CASE("degree transforms equal radian transforms of the scaled child") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-720.0, 720.0);
  const Feature child = Feature::product(x0, x1);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng) / 20.0;
    const double b = u(rng) / 20.0;
    const double scaled = a * b * std::numbers::pi / 180.0;
    CHECK(std::abs(eval3(Feature::transform(TransformKind::SinDeg, child), a, b, 0) -
                   eval3(Feature::transform(TransformKind::SinRad, x0), scaled, 0, 0)) < 1e-12);
    CHECK(std::abs(eval3(Feature::transform(TransformKind::CosDeg, child), a, b, 0) -
                   eval3(Feature::transform(TransformKind::CosRad, x0), scaled, 0, 0)) < 1e-12);
  }
}

TEST_CASE("every true term is reachable within two operator applications") {
  std::set<FeatureKey> level0;
  std::vector<Feature> frontier = original_variables(3);
  for (const auto& f : frontier) level0.insert(f.key());

  auto expand = [](const std::vector<Feature>& pool) {
    std::vector<Feature> out;
    for (const auto& a : pool) {
      for (auto kind : all_transforms()) {
        if (auto f = mutate_modify(a, kind)) out.push_back(*f);
      }
      for (const auto& b : pool) {
        if (auto f = mutate_multiply(a, b)) out.push_back(*f);
      }
    }
    return out;
  };
  std::vector<Feature> pool = frontier;
  for (int step = 0; step < 2; ++step) {
    auto more = expand(pool);
    pool.insert(pool.end(), more.begin(), more.end());
  }
  std::set<FeatureKey> closure;
  for (const auto& f : pool) closure.insert(f.key());
  for (const char* truth :
       {"x0", "x1", "x2", "x0*x1", "x0*x2", "sin_rad(x0)", "pow2(x0)", "sin_rad(x0)*x1"}) {
    CHECK_MESSAGE(closure.contains(FeatureKey{truth}), truth);
  }
}
