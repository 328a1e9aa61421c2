// Copyright 2026 The scoredvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "divergences.hpp"
#include "errors.hpp"
#include "special.hpp"

using namespace sdvi;

namespace {

// Log-uniform sample over [lo, hi].
double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

double lgamma_tolerance(double ref) {
  // 1e-10 absolute, widened to a few ulps where |ln Gamma| is large.
  return std::max(1e-10, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(ref));
}

}  // namespace

TEST_CASE("special function examples") {
  CHECK(std::abs(log_gamma(1.0)) < 1e-14);
  CHECK(std::abs(log_gamma(2.0)) < 1e-14);
  CHECK(std::abs(log_gamma(0.5) - 0.5723649429247001) < 1e-10);
  CHECK(std::abs(digamma(1.0) + 0.5772156649015329) < 1e-10);
  CHECK(std::abs(digamma(2.0) - 0.4227843350984671) < 1e-10);
}

TEST_CASE("special functions match an independent library across the domain") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double x = log_uniform(rng, 1e-3, 1e6);
    const double lg = boost::math::lgamma(x);
    CHECK(std::abs(log_gamma(x) - lg) <= lgamma_tolerance(lg));
    CHECK(std::abs(digamma(x) - boost::math::digamma(x)) <= 1e-10);
    const double tg = boost::math::trigamma(x);
    CHECK(std::abs(trigamma(x) - tg) <= 1e-10 * std::max(1.0, tg));
  }
}

TEST_CASE("digamma recurrence over [1e-3, 1e3]") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 5000; ++i) {
    const double x = log_uniform(rng, 1e-3, 1e3);
    // At tiny x the 1/x term dominates; compare relative to its size.
    const double scale = std::max(1.0, 1.0 / x);
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-10 * scale);
  }
}

TEST_CASE("special functions reject nonpositive arguments") {
  for (double x : {0.0, -1.0, -0.5, std::numeric_limits<double>::quiet_NaN()}) {
    CHECK_THROWS_AS(log_gamma(x), DomainError);
    CHECK_THROWS_AS(digamma(x), DomainError);
    CHECK_THROWS_AS(trigamma(x), DomainError);
  }
}

TEST_CASE("closed-form divergence examples") {
  CHECK(kl_gamma({1, 1}, {1, 1}) == doctest::Approx(0.0));
  CHECK(std::abs(kl_gamma({2, 1}, {1, 1}) - 0.4227843351) < 1e-9);

  const std::vector<double> ones3{1, 1, 1};
  CHECK(std::abs(kl_dirichlet(ones3, ones3)) < 1e-14);
  const std::vector<double> d21{2, 1}, d11{1, 1};
  CHECK(std::abs(kl_dirichlet(d21, d11) - (std::log(2.0) - 0.5)) < 1e-12);

  const std::vector<double> half{0.5, 0.5};
  CHECK(std::abs(expected_cat_dirichlet_kl(half, d11) - (std::log(0.5) + 1.0)) < 1e-12);
  const std::vector<double> onehot{0.0, 1.0};
  const std::vector<double> big{50.0, 50.0};
  CHECK(std::abs(expected_cat_dirichlet_kl(onehot, big) -
                 (-boost::math::digamma(50.0) + boost::math::digamma(100.0))) < 1e-12);

  CHECK(std::abs(l1_pointwise(0.3, 0.3, 0.0, 1.0, 1.0) - kEulerGamma / 2) < 1e-12);
  CHECK(std::abs(l1_pointwise(0.0, 1.0, 0.0, 2.0, 2.0) -
                 (0.5 - (boost::math::digamma(2.0) - std::log(2.0)) / 2)) < 1e-12);
  CHECK(std::abs(l1_pointwise(0.0, 1.0, 0.0, 2.0, 2.0) - 0.63518) < 1e-5);
}

TEST_CASE("Dirichlet normalizer matches its gamma-function definition") {
  const std::vector<double> d{0.7, 2.5, 4.0};
  const double ref = boost::math::lgamma(7.2) - boost::math::lgamma(0.7) - boost::math::lgamma(2.5) -
                     boost::math::lgamma(4.0);
  CHECK(std::abs(log_dirichlet_normalizer(d) - ref) < 1e-12);
}

TEST_CASE("gamma and Dirichlet divergences are nonnegative and vanish only at equality") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> kdist(2, 6);
  for (int i = 0; i < 10000; ++i) {
    const GammaParams q{log_uniform(rng, 1e-2, 1e3), log_uniform(rng, 1e-2, 1e3)};
    const GammaParams p{log_uniform(rng, 1e-2, 1e3), log_uniform(rng, 1e-2, 1e3)};
    REQUIRE(kl_gamma(q, p) >= -1e-9);
    REQUIRE(std::abs(kl_gamma(q, q)) <= 1e-9);
    REQUIRE(kl_gamma(q, p) > 1e-9);

    const int k = kdist(rng);
    std::vector<double> a(k), b(k);
    for (int j = 0; j < k; ++j) {
      a[j] = log_uniform(rng, 1e-2, 1e2);
      b[j] = log_uniform(rng, 1e-2, 1e2);
    }
    REQUIRE(kl_dirichlet(a, b) >= -1e-9);
    REQUIRE(std::abs(kl_dirichlet(a, a)) <= 1e-9);
    REQUIRE(kl_dirichlet(a, b) > 1e-9);
  }
}

TEST_CASE("divergences reject invalid parameters") {
  CHECK_THROWS_AS(kl_gamma({0, 1}, {1, 1}), DomainError);
  CHECK_THROWS_AS(kl_gamma({1, 1}, {1, -1}), DomainError);
  const std::vector<double> a{1, 1}, b{1, 1, 1}, z{1, 0};
  CHECK_THROWS_AS(kl_dirichlet(a, b), DomainError);
  CHECK_THROWS_AS(kl_dirichlet(a, z), DomainError);
  const std::vector<double> off{0.6, 0.6};
  CHECK_THROWS_AS(expected_cat_dirichlet_kl(off, a), DomainError);
  const std::vector<double> neg{-0.1, 1.1};
  CHECK_THROWS_AS(expected_cat_dirichlet_kl(neg, a), DomainError);
  CHECK_THROWS_AS(l1_pointwise(0, 0, -1e-3, 1, 1), DomainError);
  CHECK_THROWS_AS(l1_pointwise(0, 0, 0, 0, 1), DomainError);
}

TEST_CASE("gamma divergence agrees with a Monte Carlo estimate") {
  // Samples phi ~ q and averages log q(phi) - log p(phi) with the full densities.
  std::mt19937_64 rng(14);
  const GammaParams q{3.5, 2.0}, p{1.5, 0.7};
  auto logpdf = [](GammaParams g, double x) {
    return g.shape * std::log(g.rate) - boost::math::lgamma(g.shape) + (g.shape - 1) * std::log(x) -
           g.rate * x;
  };
  std::gamma_distribution<double> draw(q.shape, 1.0 / q.rate);
  const int n = 200000;
  double mean = 0, m2 = 0;
  for (int i = 1; i <= n; ++i) {
    const double x = draw(rng);
    const double v = logpdf(q, x) - logpdf(p, x);
    const double d = v - mean;
    mean += d / i;
    m2 += d * (v - mean);
  }
  const double se = std::sqrt(m2 / (n - 1) / n);
  CHECK(std::abs(mean - kl_gamma(q, p)) < 4 * se);
}
