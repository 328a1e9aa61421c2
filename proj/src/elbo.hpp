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

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "backend.hpp"
#include "denoiser.hpp"
#include "theta.hpp"

namespace sdvi {

// How the sigma^2 score gradient is formed from the reparameterized samples
// x = mu + sigma * eps:
//   kChainCorrected: mean(score * eps / (2 sigma))   (d/d sigma^2)
//   kPerSigma:       mean(score * eps)               (equals d/d sigma)
enum class Sigma2GradMode { kChainCorrected, kPerSigma };

struct ElboConfig {
  int K = 3;
  int M = 5;
  int T = 400;
  double lr = 1e-3;
  double alpha = 1.0;  // Gamma hyperprior shape
  double beta = 0.02;  // Gamma hyperprior rate
  std::vector<double> d;  // Dirichlet hyperprior; empty means all ones
  double l1 = 10.0;
  double l2 = 25.0;
  double gamma = 2.0;
  Sigma2GradMode sigma2_mode = Sigma2GradMode::kChainCorrected;
  std::uint64_t seed = 0;

  BackendKind backend = BackendKind::kDirect;
  int conv_width = 32;
  InitPolicy init = InitPolicy::kInformed;
  // Skips the noise estimator (0-255 scale). Required for images below 32x32.
  std::optional<double> delta_override;
  // Dispatch the K oracle calls concurrently when every oracle allows it.
  bool parallel_oracles = false;

  void validate() const;
  std::vector<double> prior_d() const;
};

// Each compute_* returns the term's value and, when `grad` is non-null, adds
// scale * dTerm/dTheta into it. Off-simplex pi is accepted so finite
// differences can perturb each entry independently.
double compute_L1(const Theta& theta, const ImageTensor& y, ThetaGrad* grad, double scale = 1.0);
double l2_entropy_part(const Theta& theta, ThetaGrad* grad, double scale = 1.0);
double compute_L3(const Theta& theta, const ElboConfig& cfg, ThetaGrad* grad, double scale = 1.0);
double compute_L4(const Theta& theta, ThetaGrad* grad, double scale = 1.0);
double compute_L5(const Theta& theta, const ElboConfig& cfg, ThetaGrad* grad, double scale = 1.0);

// Monte Carlo estimate of the gradient of E_q log p with respect to one
// component's mu and sigma2, from caller-supplied standard-normal draws.
struct ScoreGradient {
  ImageTensor d_mu;
  ImageTensor d_sigma2;
};
ScoreGradient score_gradient(const ImageTensor& mu, const ImageTensor& sigma2, const DenoiserOracle& oracle,
                             std::span<const ImageTensor> eps, Sigma2GradMode mode);

// Draws fresh eps for every component (order: k, then m, then pixel) and
// returns one ScoreGradient per component. oracles.size() is 1 (broadcast) or K.
std::vector<ScoreGradient> score_grad_L2(const Theta& theta, const std::vector<OraclePtr>& oracles, int M,
                                         std::mt19937_64& rng, Sigma2GradMode mode, bool parallel = false);

// Pixel-wise fusion: mean = sum_k pi_k mu_k, variance = sum_k pi_k^2 sigma2_k.
std::pair<ImageTensor, ImageTensor> fuse(const Theta& theta);

}  // namespace sdvi
