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

#pragma once

namespace sdvi {

inline constexpr double kEulerGamma = 0.57721566490153286061;

// Positive-argument special functions. All throw DomainError for x <= 0 or NaN.
// Each shifts x upward by recurrence until x >= 10, then applies the
// asymptotic series.
double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

}  // namespace sdvi
