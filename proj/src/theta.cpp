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

#include "theta.hpp"

#include <algorithm>
#include <string>

#include "errors.hpp"

namespace sdvi {

ThetaFields ThetaFields::zeros(int K, int channels, int height, int width) {
  if (K < 1) throw ArgumentError("number of components K must be >= 1");
  ThetaFields f;
  f.for_each_field([&](std::vector<ImageTensor>& v) {
    v.assign(static_cast<std::size_t>(K), ImageTensor(channels, height, width));
  });
  return f;
}

Theta apply_links(const RawHeads& raw) {
  const int K = raw.K();
  const ImageTensor& ref = raw.shape_ref();
  Theta th = ThetaFields::zeros(K, ref.channels(), ref.height(), ref.width());
  const std::size_t n = ref.size();
  for (int k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      th.mu[k][i] = raw.mu[k][i];
      th.sigma2[k][i] = softplus(raw.sigma2[k][i]) + kSigma2Floor;
      th.alpha[k][i] = softplus(raw.alpha[k][i]) + kAlphaFloor;
      th.beta[k][i] = softplus(raw.beta[k][i]) + kBetaFloor;
      th.dhat[k][i] = softplus(raw.dhat[k][i]) + kDhatFloor;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double best = raw.pi[0][i];
    for (int k = 1; k < K; ++k) best = std::max(best, raw.pi[k][i]);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      th.pi[k][i] = std::exp(raw.pi[k][i] - best);
      sum += th.pi[k][i];
    }
    for (int k = 0; k < K; ++k) th.pi[k][i] /= sum;
  }
  return th;
}

RawHeads links_backward(const RawHeads& raw, const Theta& theta, const ThetaGrad& grad) {
  const int K = raw.K();
  const ImageTensor& ref = raw.shape_ref();
  RawHeads g = ThetaFields::zeros(K, ref.channels(), ref.height(), ref.width());
  const std::size_t n = ref.size();
  for (int k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      g.mu[k][i] = grad.mu[k][i];
      g.sigma2[k][i] = grad.sigma2[k][i] * logistic(raw.sigma2[k][i]);
      g.alpha[k][i] = grad.alpha[k][i] * logistic(raw.alpha[k][i]);
      g.beta[k][i] = grad.beta[k][i] * logistic(raw.beta[k][i]);
      g.dhat[k][i] = grad.dhat[k][i] * logistic(raw.dhat[k][i]);
    }
  }
  // Softmax Jacobian: d pi_k / d z_j = pi_k (delta_kj - pi_j).
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (int k = 0; k < K; ++k) dot += theta.pi[k][i] * grad.pi[k][i];
    for (int k = 0; k < K; ++k) g.pi[k][i] = theta.pi[k][i] * (grad.pi[k][i] - dot);
  }
  return g;
}

void validate_theta(const Theta& theta) {
  const int K = theta.K();
  if (K < 1) throw DomainError("theta has no components");
  const std::size_t n = theta.shape_ref().size();
  auto check_floor = [&](const std::vector<ImageTensor>& maps, double floor, const char* name) {
    for (const auto& m : maps)
      for (double v : m.values())
        if (!(v >= floor)) {
          throw DomainError(std::string("theta.") + name + " below floor: " + std::to_string(v));
        }
  };
  check_floor(theta.sigma2, kSigma2Floor, "sigma2");
  check_floor(theta.alpha, kAlphaFloor, "alpha");
  check_floor(theta.beta, kBetaFloor, "beta");
  check_floor(theta.dhat, kDhatFloor, "dhat");
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      if (!(theta.pi[k][i] >= 0.0)) throw DomainError("theta.pi negative");
      s += theta.pi[k][i];
    }
    if (std::abs(s - 1.0) > 1e-6) throw DomainError("theta.pi off the simplex: " + std::to_string(s));
  }
}

bool all_finite(const ThetaFields& f) {
  bool ok = true;
  f.for_each_field([&](const std::vector<ImageTensor>& v) {
    for (const auto& m : v) ok = ok && m.all_finite();
  });
  return ok;
}

}  // namespace sdvi
