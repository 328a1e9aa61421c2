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

#include "elbo.hpp"

#include <cmath>
#include <future>
#include <limits>

#include "divergences.hpp"
#include "errors.hpp"
#include "special.hpp"

namespace sdvi {
namespace {

constexpr double kTinyProb = 1e-300;

}  // namespace

void ElboConfig::validate() const {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (M < 1) throw ConfigError("M must be >= 1");
  if (T < 1) throw ConfigError("T must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("alpha and beta must be > 0");
  if (!d.empty()) {
    if (static_cast<int>(d.size()) != K) throw ConfigError("d must have K entries");
    for (double v : d)
      if (!(v > 0.0)) throw ConfigError("d entries must be > 0");
  }
  if (!(l1 < l2)) throw ConfigError("l1 must be < l2");
  if (!(gamma >= 1.0)) throw ConfigError("gamma must be >= 1");
  if (backend == BackendKind::kConv && conv_width < 1) throw ConfigError("conv_width must be >= 1");
  if (delta_override && !(*delta_override >= 0.0)) throw ConfigError("delta must be >= 0");
}

std::vector<double> ElboConfig::prior_d() const {
  return d.empty() ? std::vector<double>(static_cast<std::size_t>(K), 1.0) : d;
}

double compute_L1(const Theta& th, const ImageTensor& y, ThetaGrad* grad, double scale) {
  require_same_shape(th.shape_ref(), y, "compute_L1");
  double total = 0.0;
  for (int k = 0; k < th.K(); ++k) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double p = th.pi[k][i], mu = th.mu[k][i], s2 = th.sigma2[k][i];
      const double a = th.alpha[k][i], b = th.beta[k][i];
      const double l = l1_pointwise(y[i], mu, s2, a, b);
      total += p * l;
      if (grad) {
        const double r = mu - y[i];
        const double q = r * r + s2;
        grad->mu[k][i] += scale * p * r * a / b;
        grad->sigma2[k][i] += scale * p * a / (2.0 * b);
        grad->alpha[k][i] += scale * p * (q / (2.0 * b) - 0.5 * trigamma(a));
        grad->beta[k][i] += scale * p * (-q * a / (2.0 * b * b) + 0.5 / b);
        grad->pi[k][i] += scale * l;
      }
    }
  }
  return total;
}

double l2_entropy_part(const Theta& th, ThetaGrad* grad, double scale) {
  double total = 0.0;
  for (int k = 0; k < th.K(); ++k) {
    for (std::size_t i = 0; i < th.shape_ref().size(); ++i) {
      const double s2 = th.sigma2[k][i];
      if (!(s2 > 0.0)) throw DomainError("l2_entropy_part: sigma2 must be > 0");
      const double ls = std::log(s2);
      total += -0.5 * th.pi[k][i] * ls;
      if (grad) {
        grad->sigma2[k][i] += scale * (-0.5 * th.pi[k][i] / s2);
        grad->pi[k][i] += scale * (-0.5 * ls);
      }
    }
  }
  return total;
}

double compute_L3(const Theta& th, const ElboConfig& cfg, ThetaGrad* grad, double scale) {
  const GammaParams prior{cfg.alpha, cfg.beta};
  double total = 0.0;
  for (int k = 0; k < th.K(); ++k) {
    for (std::size_t i = 0; i < th.shape_ref().size(); ++i) {
      const double p = th.pi[k][i], a = th.alpha[k][i], b = th.beta[k][i];
      const double kl = kl_gamma({a, b}, prior);
      total += p * kl;
      if (grad) {
        grad->alpha[k][i] += scale * p * ((a - prior.shape) * trigamma(a) + prior.rate / b - 1.0);
        grad->beta[k][i] += scale * p * (prior.shape / b - prior.rate * a / (b * b));
        grad->pi[k][i] += scale * kl;
      }
    }
  }
  return total;
}

double compute_L4(const Theta& th, ThetaGrad* grad, double scale) {
  const int K = th.K();
  double total = 0.0;
  std::vector<double> psi(K), tri(K);
  for (std::size_t i = 0; i < th.shape_ref().size(); ++i) {
    double dsum = 0.0, psum = 0.0;
    for (int k = 0; k < K; ++k) {
      const double dk = th.dhat[k][i];
      if (!(dk > 0.0)) throw DomainError("compute_L4: dhat must be > 0");
      dsum += dk;
      psum += th.pi[k][i];
      psi[k] = digamma(dk);
      if (grad) tri[k] = trigamma(dk);
    }
    const double psi_sum = digamma(dsum);
    for (int k = 0; k < K; ++k) {
      const double p = th.pi[k][i];
      if (p < 0.0) throw DomainError("compute_L4: negative pi");
      const double logp = std::log(std::max(p, kTinyProb));
      if (p > 0.0) total += p * (logp - psi[k] + psi_sum);
      if (grad) {
        grad->pi[k][i] += scale * (logp + 1.0 - psi[k] + psi_sum);
        grad->dhat[k][i] += scale * (-p * tri[k] + trigamma(dsum) * psum);
      }
    }
  }
  return total;
}

double compute_L5(const Theta& th, const ElboConfig& cfg, ThetaGrad* grad, double scale) {
  const int K = th.K();
  const std::vector<double> d = cfg.d.empty() ? std::vector<double>(K, 1.0) : cfg.d;
  if (static_cast<int>(d.size()) != K) throw DomainError("compute_L5: prior d must have K entries");
  double dsum_prior = 0.0;
  for (double v : d) dsum_prior += v;
  double total = 0.0;
  std::vector<double> dh(K);
  for (std::size_t i = 0; i < th.shape_ref().size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      dh[k] = th.dhat[k][i];
      s += dh[k];
    }
    total += kl_dirichlet(dh, d);
    if (grad) {
      const double tri_sum = trigamma(s);
      for (int k = 0; k < K; ++k) {
        grad->dhat[k][i] += scale * ((dh[k] - d[k]) * trigamma(dh[k]) - tri_sum * (s - dsum_prior));
      }
    }
  }
  return total;
}

ScoreGradient score_gradient(const ImageTensor& mu, const ImageTensor& sigma2, const DenoiserOracle& oracle,
                             std::span<const ImageTensor> eps, Sigma2GradMode mode) {
  require_same_shape(mu, sigma2, "score_gradient");
  if (eps.empty()) throw ArgumentError("score_gradient: need at least one sample");
  for (double v : sigma2.values())
    if (!(v > 0.0)) throw DomainError("score_gradient: sigma2 must be > 0");
  ImageTensor sigma = sigma2;
  for (double& v : sigma.raw()) v = std::sqrt(v);
  ScoreGradient g{ImageTensor(mu.channels(), mu.height(), mu.width()),
                  ImageTensor(mu.channels(), mu.height(), mu.width())};
  const double inv_m = 1.0 / static_cast<double>(eps.size());
  for (const ImageTensor& e : eps) {
    require_same_shape(mu, e, "score_gradient: eps");
    ImageTensor x = mu;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += sigma[i] * e[i];
    const ImageTensor s = score_from_denoiser(x, sigma2, oracle);
    for (std::size_t i = 0; i < x.size(); ++i) {
      g.d_mu[i] += inv_m * s[i];
      const double factor = mode == Sigma2GradMode::kChainCorrected ? e[i] / (2.0 * sigma[i]) : e[i];
      g.d_sigma2[i] += inv_m * s[i] * factor;
    }
  }
  return g;
}

std::vector<ScoreGradient> score_grad_L2(const Theta& theta, const std::vector<OraclePtr>& oracles, int M,
                                         std::mt19937_64& rng, Sigma2GradMode mode, bool parallel) {
  const int K = theta.K();
  if (M < 1) throw ArgumentError("score_grad_L2: M must be >= 1");
  if (oracles.size() != 1 && static_cast<int>(oracles.size()) != K) {
    throw ArgumentError("score_grad_L2: need 1 or K oracles, got " + std::to_string(oracles.size()));
  }
  auto oracle_for = [&](int k) -> const DenoiserOracle& {
    return *oracles[oracles.size() == 1 ? 0 : static_cast<std::size_t>(k)];
  };
  const ImageTensor& ref = theta.shape_ref();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<ImageTensor>> eps(K);
  for (int k = 0; k < K; ++k) {
    eps[k].reserve(M);
    for (int m = 0; m < M; ++m) {
      ImageTensor e(ref.channels(), ref.height(), ref.width());
      for (double& v : e.raw()) v = normal(rng);
      eps[k].push_back(std::move(e));
    }
  }
  bool concurrent = parallel && K > 1;
  for (int k = 0; k < K && concurrent; ++k) concurrent = oracle_for(k).concurrent_safe();
  std::vector<ScoreGradient> out;
  out.reserve(K);
  if (concurrent) {
    std::vector<std::future<ScoreGradient>> jobs;
    for (int k = 0; k < K; ++k) {
      jobs.push_back(std::async(std::launch::async, [&, k] {
        return score_gradient(theta.mu[k], theta.sigma2[k], oracle_for(k), eps[k], mode);
      }));
    }
    for (auto& j : jobs) out.push_back(j.get());
  } else {
    for (int k = 0; k < K; ++k) out.push_back(score_gradient(theta.mu[k], theta.sigma2[k], oracle_for(k), eps[k], mode));
  }
  return out;
}

std::pair<ImageTensor, ImageTensor> fuse(const Theta& th) {
  const ImageTensor& ref = th.shape_ref();
  ImageTensor mean(ref.channels(), ref.height(), ref.width());
  ImageTensor var(ref.channels(), ref.height(), ref.width());
  for (int k = 0; k < th.K(); ++k) {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double p = th.pi[k][i];
      mean[i] += p * th.mu[k][i];
      var[i] += p * p * th.sigma2[k][i];
    }
  }
  return {std::move(mean), std::move(var)};
}

}  // namespace sdvi
