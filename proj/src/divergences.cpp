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

#include "divergences.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"
#include "special.hpp"

namespace sdvi {
namespace {

constexpr double kSimplexTol = 1e-6;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite, got " + std::to_string(v));
  }
}

void require_positive(std::span<const double> v, const char* what) {
  if (v.empty()) throw DomainError(std::string(what) + " is empty");
  for (double x : v) require_positive(x, what);
}

}  // namespace

double kl_gamma(GammaParams q, GammaParams p) {
  require_positive(q.shape, "kl_gamma: q.shape");
  require_positive(q.rate, "kl_gamma: q.rate");
  require_positive(p.shape, "kl_gamma: p.shape");
  require_positive(p.rate, "kl_gamma: p.rate");
  return log_gamma(p.shape) - log_gamma(q.shape) + (q.shape - p.shape) * digamma(q.shape) +
         p.shape * std::log(q.rate / p.rate) + (p.rate - q.rate) * q.shape / q.rate;
}

double log_dirichlet_normalizer(std::span<const double> d) {
  require_positive(d, "Dirichlet concentration");
  double sum = 0.0, lg = 0.0;
  for (double v : d) {
    sum += v;
    lg += log_gamma(v);
  }
  return log_gamma(sum) - lg;
}

double kl_dirichlet(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw DomainError("kl_dirichlet: length mismatch");
  require_positive(q, "kl_dirichlet: q");
  require_positive(p, "kl_dirichlet: p");
  double qsum = 0.0;
  for (double v : q) qsum += v;
  const double psi_sum = digamma(qsum);
  double acc = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) acc += (q[k] - p[k]) * (digamma(q[k]) - psi_sum);
  return acc + log_dirichlet_normalizer(q) - log_dirichlet_normalizer(p);
}

double expected_cat_dirichlet_kl(std::span<const double> pi, std::span<const double> dhat) {
  if (pi.size() != dhat.size()) throw DomainError("expected_cat_dirichlet_kl: length mismatch");
  require_positive(dhat, "expected_cat_dirichlet_kl: dhat");
  double total = 0.0, dsum = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (!(pi[k] >= 0.0)) throw DomainError("expected_cat_dirichlet_kl: negative probability");
    total += pi[k];
    dsum += dhat[k];
  }
  if (std::abs(total - 1.0) > kSimplexTol) {
    throw DomainError("expected_cat_dirichlet_kl: pi sums to " + std::to_string(total));
  }
  const double psi_sum = digamma(dsum);
  double acc = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (pi[k] == 0.0) continue;
    acc += pi[k] * (std::log(pi[k]) - digamma(dhat[k]) + psi_sum);
  }
  return acc;
}

double l1_pointwise(double y, double mu, double sigma2, double alpha_hat, double beta_hat) {
  if (!(sigma2 >= 0.0)) throw DomainError("l1_pointwise: sigma2 must be >= 0");
  require_positive(alpha_hat, "l1_pointwise: alpha_hat");
  require_positive(beta_hat, "l1_pointwise: beta_hat");
  const double r = mu - y;
  return (r * r + sigma2) * alpha_hat / (2.0 * beta_hat) -
         0.5 * (digamma(alpha_hat) - std::log(beta_hat));
}

}  // namespace sdvi
