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

#include "special.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace sdvi {
namespace {

constexpr double kShift = 10.0;

void check_positive(double x, const char* fn) {
  if (!(x > 0.0) || std::isinf(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

}  // namespace

double log_gamma(double x) {
  check_positive(x, "log_gamma");
  double prod = 1.0;
  double shift_log = 0.0;
  while (x < kShift) {
    prod *= x;
    x += 1.0;
    if (prod > 1e250) {
      shift_log += std::log(prod);
      prod = 1.0;
    }
  }
  shift_log += std::log(prod);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Stirling series in 1/x; Bernoulli-number coefficients B_{2n}/(2n(2n-1)).
  const double series =
      inv * (1.0 / 12 +
             inv2 * (-1.0 / 360 +
                     inv2 * (1.0 / 1260 +
                             inv2 * (-1.0 / 1680 +
                                     inv2 * (1.0 / 1188 +
                                             inv2 * (-691.0 / 360360 +
                                                     inv2 * (1.0 / 156 + inv2 * (-3617.0 / 122400))))))));
  const double stirling =
      (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
  return stirling - shift_log;
}

double digamma(double x) {
  check_positive(x, "digamma");
  double acc = 0.0;
  while (x < kShift) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))));
  return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  check_positive(x, "trigamma");
  double acc = 0.0;
  while (x < kShift) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv + inv2 / 2 +
      inv * inv2 *
          (1.0 / 6 -
           inv2 * (1.0 / 30 -
                   inv2 * (1.0 / 42 -
                           inv2 * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * (691.0 / 2730 - inv2 * 7.0 / 6))))));
  return acc + series;
}

}  // namespace sdvi
