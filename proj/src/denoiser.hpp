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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace sdvi {

// Standard-deviation window [sigma_min, sigma_max] an oracle is valid for.
struct ValidityRange {
  double sigma_min;
  double sigma_max;
};

// MMSE denoiser for independent, per-pixel-variance Gaussian noise: returns an
// approximation of E[x | x_noisy]. The per-pixel noise variance is always
// supplied; blind implementations may ignore it.
class DenoiserOracle {
 public:
  virtual ~DenoiserOracle() = default;
  virtual ImageTensor denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const = 0;
  virtual std::optional<ValidityRange> validity_range() const { return std::nullopt; }
  virtual bool concurrent_safe() const { return true; }
  virtual std::string describe() const = 0;
};

using OraclePtr = std::shared_ptr<const DenoiserOracle>;

// Independent Gaussian prior N(mean, var) per pixel. A 1x1x1 map broadcasts.
class GaussPriorOracle final : public DenoiserOracle {
 public:
  GaussPriorOracle(ImageTensor mean, ImageTensor var);
  GaussPriorOracle(double mean, double var);

  ImageTensor denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const override;
  std::string describe() const override;

  double mean_at(std::size_t i) const { return mean_.size() == 1 ? mean_[0] : mean_[i]; }
  double var_at(std::size_t i) const { return var_.size() == 1 ? var_[0] : var_[i]; }

 private:
  ImageTensor mean_;
  ImageTensor var_;
};

// Scalar Gaussian-mixture prior shared by every pixel.
struct GmmPrior {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> vars;

  void validate() const;
  // log of the prior density convolved with N(0, extra_var), at x.
  double log_density(double x, double extra_var = 0.0) const;
};

class GmmPriorOracle final : public DenoiserOracle {
 public:
  explicit GmmPriorOracle(GmmPrior prior);

  ImageTensor denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const override;
  std::string describe() const override;
  const GmmPrior& prior() const { return prior_; }

  // Scalar posterior mean E[x | x_noisy] under noise variance nv.
  double posterior_mean(double noisy, double nv) const;

 private:
  GmmPrior prior_;
};

// G(x) = x: contributes no prior information.
class IdentityOracle final : public DenoiserOracle {
 public:
  ImageTensor denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const override;
  std::string describe() const override { return "identity"; }
};

ImageTensor denoise_gauss_prior(const ImageTensor& noisy, const ImageTensor& noise_var,
                                const GaussPriorOracle& oracle);
ImageTensor denoise_gmm_prior(const ImageTensor& noisy, const ImageTensor& noise_var,
                              const GmmPriorOracle& oracle);

// Score of the noise-smoothed prior, (G(x) - x) / sigma^2 per pixel. The noise
// std is clamped into the oracle's validity range when it declares one, and
// the clamped variance is used both for the call and for the division.
ImageTensor score_from_denoiser(const ImageTensor& noisy, const ImageTensor& noise_var,
                                const DenoiserOracle& oracle);

}  // namespace sdvi
