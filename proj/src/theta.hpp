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

#include <cmath>
#include <vector>

#include "tensor.hpp"

namespace sdvi {

inline constexpr double kSigma2Floor = 1e-6;
inline constexpr double kAlphaFloor = 1e-3;
inline constexpr double kBetaFloor = 1e-3;
inline constexpr double kDhatFloor = 1e-3;

// Six K-long lists of C x H x W maps. The same layout carries the
// variational parameters, their gradients, and the unconstrained raw heads
// (where `pi` holds softmax logits).
struct ThetaFields {
  std::vector<ImageTensor> mu;
  std::vector<ImageTensor> sigma2;
  std::vector<ImageTensor> alpha;
  std::vector<ImageTensor> beta;
  std::vector<ImageTensor> pi;
  std::vector<ImageTensor> dhat;

  int K() const { return static_cast<int>(mu.size()); }
  const ImageTensor& shape_ref() const { return mu.front(); }

  static ThetaFields zeros(int K, int channels, int height, int width);

  template <typename F>
  void for_each_field(F&& f) {
    f(mu);
    f(sigma2);
    f(alpha);
    f(beta);
    f(pi);
    f(dhat);
  }
  template <typename F>
  void for_each_field(F&& f) const {
    f(mu);
    f(sigma2);
    f(alpha);
    f(beta);
    f(pi);
    f(dhat);
  }
};

using Theta = ThetaFields;
using ThetaGrad = ThetaFields;
using RawHeads = ThetaFields;

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
// Raw value whose softplus equals v (v > 0).
inline double softplus_inverse(double v) { return v > 30.0 ? v : std::log(std::expm1(v)); }

// mu = raw; sigma2/alpha/beta/dhat = softplus(raw) + floor; pi = softmax over K.
Theta apply_links(const RawHeads& raw);

// Chain rule through apply_links: dL/draw given dL/dTheta at the forward point.
RawHeads links_backward(const RawHeads& raw, const Theta& theta, const ThetaGrad& grad);

// Throws DomainError when positivity floors or the per-site simplex fail.
void validate_theta(const Theta& theta);

bool all_finite(const ThetaFields& f);

}  // namespace sdvi
