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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "denoiser.hpp"
#include "tensor.hpp"

namespace sdvi {

enum class NoiseKind { kAwgn, kNonIid, kCorrelated, kSignalDependent };

struct NoiseModel {
  NoiseKind kind = NoiseKind::kAwgn;
  double sigma = 0.0;        // awgn std; correlated target marginal std
  ImageTensor variance_map;  // non-iid
  std::vector<double> kernel;  // correlated: square, odd side, sums to 1
  int kernel_size = 0;
  double a = 0.0;  // signal-dependent: var = a * x + b
  double b = 0.0;

  static NoiseModel awgn(double sigma);
  static NoiseModel non_iid(ImageTensor variance_map);
  static NoiseModel correlated(double sigma, std::vector<double> kernel, int kernel_size);
  static NoiseModel box_correlated(double sigma, int kernel_size);
  static NoiseModel signal_dependent(double a, double b);

  void validate() const;
  // One line, "key=value" pairs separated by spaces. Variance maps are
  // summarized by their size only.
  std::string to_string() const;
  static NoiseModel parse(const std::string& text);
};

struct ScenePrior {
  // Per-pixel Gaussian; 1x1x1 maps broadcast.
  ImageTensor mean;
  ImageTensor var;
  // Shared scalar mixture; used when non-empty.
  GmmPrior gmm;

  bool is_gmm() const { return !gmm.weights.empty(); }
  void validate() const;
  static ScenePrior gauss(ImageTensor mean, ImageTensor var);
  static ScenePrior gauss(double mean, double var);
  static ScenePrior mixture(GmmPrior gmm);
  std::string to_string() const;
};

enum class SceneKind { kConstant, kRamp, kChecker, kSmoothRandom };

SceneKind parse_scene_kind(const std::string& s);
std::string scene_kind_name(SceneKind k);

// Single-channel scene of size height x width (both >= 8), values in [0,1].
// constant = 0.5; ramp = linspace(0,1) along x; checker = 8-pixel squares of
// 0.25 / 0.75; smooth-random = 7x7 box-blurred uniform noise rescaled to
// [0.2, 0.8].
ImageTensor gen_clean(SceneKind kind, int height, int width, std::mt19937_64& rng);

// Output is not clamped.
ImageTensor add_noise(const ImageTensor& x, const NoiseModel& model, std::mt19937_64& rng);

// Per-pixel variance the model implies for clean image x (marginal variance
// for the correlated model).
ImageTensor noise_variance(const ImageTensor& x, const NoiseModel& model);

// Conjugate posterior for a per-pixel Gaussian prior and diagonal noise.
std::pair<ImageTensor, ImageTensor> exact_posterior_gauss(const ImageTensor& y, const ScenePrior& prior,
                                                          const ImageTensor& noise_var);

struct ScoreIdentityCheck {
  double max_rel_discrepancy = 0.0;
  std::vector<double> lhs;  // Sigma^-1 (E[x|x_noisy] - x_noisy)
  std::vector<double> rhs;  // -(P + Sigma)^-1 (x_noisy - m)
};

// Dense Gaussian check of the denoiser-score identity. Matrices are row-major
// dim x dim. The discrepancy is max|lhs - rhs| / max(max|rhs|, tiny), i.e.
// relative to the largest entry of the analytic score.
ScoreIdentityCheck verify_score_identity_dense(int dim, const std::vector<double>& m, const std::vector<double>& P,
                                    const std::vector<double>& Sigma, const std::vector<double>& x_noisy);

// Random SPD matrix A A^T / dim + ridge * I with N(0,1) entries in A.
std::vector<double> random_spd(int dim, std::mt19937_64& rng, double ridge = 0.1);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of sum_i E_{x ~ N(mu_i, sigma2_i)} log p_s(x) where p_s
// is the prior smoothed by N(0, sigma2_i) (held fixed, not resampled).
McEstimate mc_expected_logp(const ImageTensor& mu, const ImageTensor& sigma2, const ScenePrior& prior,
                            int samples, std::mt19937_64& rng);

// Closed form of the scalar Gaussian case of mc_expected_logp.
double expected_logp_gauss(double mu, double sigma2, double m, double s2);

struct SynthRequest {
  SceneKind scene = SceneKind::kSmoothRandom;
  int height = 64;
  int width = 64;
  NoiseModel noise;
  // When set, clean = scene + N(0, prior_s2) per pixel, i.e. a draw from the
  // per-pixel Gaussian prior centred on the scene.
  std::optional<double> prior_s2;
  std::uint64_t seed = 0;
};

struct SynthOutput {
  ImageTensor scene;
  ImageTensor clean;
  ImageTensor noisy;
  std::string sidecar;
};

SynthOutput synthesize(const SynthRequest& req);

// Sidecar: one "key=value ..." record per line (scene, size, seed, noise,
// prior).
struct Sidecar {
  std::map<std::string, std::string> lines;  // first key of the line -> full line
  std::optional<NoiseModel> noise;           // absent for non-iid maps
};
Sidecar parse_sidecar(const std::string& text);

// EM fit of a J-component scalar mixture to the pixel values. Deterministic:
// components start at evenly spaced quantiles.
GmmPrior fit_gmm(const std::vector<double>& values, int J, int iterations = 200, double var_floor = 1e-6);

}  // namespace sdvi
