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

#include <span>

namespace sdvi {

// Gamma(shape, rate): density proportional to phi^(shape-1) exp(-rate*phi).
struct GammaParams {
  double shape;
  double rate;
};

// KL(Gamma(q) || Gamma(p)).
double kl_gamma(GammaParams q, GammaParams p);

// KL(Dir(q) || Dir(p)).
double kl_dirichlet(std::span<const double> q, std::span<const double> p);

// E_{q(Omega)} KL(Cat(pi) || Cat(omega)) with omega ~ Dir(dhat); 0 log 0 := 0.
double expected_cat_dirichlet_kl(std::span<const double> pi, std::span<const double> dhat);

// Per-pixel, per-component negative expected Gaussian log-likelihood of y
// under x ~ N(mu, sigma2) and precision phi ~ Gamma(alpha_hat, beta_hat),
// without the 0.5 log(2 pi) constant.
double l1_pointwise(double y, double mu, double sigma2, double alpha_hat, double beta_hat);

// log Z_Dir(d) = log Gamma(sum d) - sum log Gamma(d_k).
double log_dirichlet_normalizer(std::span<const double> d);

}  // namespace sdvi
