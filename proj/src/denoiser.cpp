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

#include "denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace sdvi {
namespace {

void check_noise_var(const ImageTensor& noisy, const ImageTensor& noise_var, const char* fn) {
  require_same_shape(noisy, noise_var, fn);
  for (double v : noise_var.values()) {
    if (!(v >= 0.0)) throw DomainError(std::string(fn) + ": noise variance must be >= 0");
  }
}

void check_map(const ImageTensor& map, const ImageTensor& noisy, const char* fn) {
  if (map.size() != 1 && !map.same_shape(noisy)) {
    throw ArgumentError(std::string(fn) + ": prior map shape " + map.shape_string() +
                        " does not match input " + noisy.shape_string());
  }
}

}  // namespace

GaussPriorOracle::GaussPriorOracle(ImageTensor mean, ImageTensor var)
    : mean_(std::move(mean)), var_(std::move(var)) {
  if (mean_.size() != 1 && var_.size() != 1 && !mean_.same_shape(var_)) {
    throw ArgumentError("GaussPriorOracle: mean/variance shape mismatch");
  }
  for (double v : var_.values()) {
    if (!(v > 0.0)) throw DomainError("GaussPriorOracle: prior variance must be > 0");
  }
}

GaussPriorOracle::GaussPriorOracle(double mean, double var)
    : GaussPriorOracle(ImageTensor(1, 1, 1, mean), ImageTensor(1, 1, 1, var)) {}

ImageTensor GaussPriorOracle::denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const {
  check_noise_var(noisy, noise_var, "denoise_gauss_prior");
  check_map(mean_, noisy, "denoise_gauss_prior");
  check_map(var_, noisy, "denoise_gauss_prior");
  ImageTensor out(noisy.channels(), noisy.height(), noisy.width());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    const double nv = noise_var[i];
    if (nv == 0.0) {
      out[i] = noisy[i];
      continue;
    }
    const double s2 = var_at(i);
    out[i] = (s2 * noisy[i] + nv * mean_at(i)) / (s2 + nv);
  }
  return out;
}

std::string GaussPriorOracle::describe() const {
  std::ostringstream os;
  if (mean_.size() == 1 && var_.size() == 1) {
    os << "gauss(m=" << mean_[0] << ", s2=" << var_[0] << ")";
  } else {
    os << "gauss(per-pixel " << mean_.shape_string() << ")";
  }
  return os.str();
}

void GmmPrior::validate() const {
  const std::size_t J = weights.size();
  if (J == 0 || means.size() != J || vars.size() != J) {
    throw ArgumentError("GMM prior: weights/means/vars must be non-empty and equal length");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (!(weights[j] >= 0.0)) throw DomainError("GMM prior: negative weight");
    if (!(vars[j] > 0.0)) throw DomainError("GMM prior: variances must be > 0");
    sum += weights[j];
  }
  if (std::abs(sum - 1.0) > 1e-6) throw DomainError("GMM prior: weights must sum to 1");
}

double GmmPrior::log_density(double x, double extra_var) const {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double v = vars[j] + extra_var;
    const double d = x - means[j];
    terms[j] = std::log(weights[j]) - 0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
    best = std::max(best, terms[j]);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

GmmPriorOracle::GmmPriorOracle(GmmPrior prior) : prior_(std::move(prior)) { prior_.validate(); }

double GmmPriorOracle::posterior_mean(double noisy, double nv) const {
  const std::size_t J = prior_.weights.size();
  double logr[64];
  std::vector<double> heap;
  double* lr = logr;
  if (J > 64) {
    heap.resize(J);
    lr = heap.data();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < J; ++j) {
    const double v = prior_.vars[j] + nv;
    const double d = noisy - prior_.means[j];
    lr[j] = prior_.weights[j] > 0.0
                ? std::log(prior_.weights[j]) - 0.5 * std::log(v) - d * d / (2.0 * v)
                : -std::numeric_limits<double>::infinity();
    best = std::max(best, lr[j]);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    const double r = std::exp(lr[j] - best);
    const double s2 = prior_.vars[j];
    num += r * (s2 * noisy + nv * prior_.means[j]) / (s2 + nv);
    den += r;
  }
  return num / den;
}

ImageTensor GmmPriorOracle::denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const {
  check_noise_var(noisy, noise_var, "denoise_gmm_prior");
  ImageTensor out(noisy.channels(), noisy.height(), noisy.width());
  for (std::size_t i = 0; i < noisy.size(); ++i) out[i] = posterior_mean(noisy[i], noise_var[i]);
  return out;
}

std::string GmmPriorOracle::describe() const {
  std::ostringstream os;
  os << "gmm(J=" << prior_.weights.size() << ")";
  return os.str();
}

ImageTensor IdentityOracle::denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const {
  check_noise_var(noisy, noise_var, "identity denoiser");
  return noisy;
}

ImageTensor denoise_gauss_prior(const ImageTensor& noisy, const ImageTensor& noise_var,
                                const GaussPriorOracle& oracle) {
  return oracle.denoise(noisy, noise_var);
}

ImageTensor denoise_gmm_prior(const ImageTensor& noisy, const ImageTensor& noise_var,
                              const GmmPriorOracle& oracle) {
  return oracle.denoise(noisy, noise_var);
}

ImageTensor score_from_denoiser(const ImageTensor& noisy, const ImageTensor& noise_var,
                                const DenoiserOracle& oracle) {
  require_same_shape(noisy, noise_var, "score_from_denoiser");
  ImageTensor nv = noise_var;
  const auto range = oracle.validity_range();
  for (double& v : nv.raw()) {
    if (!(v > 0.0)) throw DomainError("score_from_denoiser: noise variance must be > 0");
    if (range) {
      const double s = std::clamp(std::sqrt(v), range->sigma_min, range->sigma_max);
      v = s * s;
    }
  }
  ImageTensor score = oracle.denoise(noisy, nv);
  require_same_shape(noisy, score, "score_from_denoiser: oracle output");
  for (std::size_t i = 0; i < score.size(); ++i) score[i] = (score[i] - noisy[i]) / nv[i];
  return score;
}

}  // namespace sdvi
