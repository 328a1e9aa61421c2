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
#include <memory>
#include <string>
#include <vector>

#include "nn.hpp"
#include "theta.hpp"

namespace sdvi {

enum class BackendKind { kDirect, kConv };

// Starting values for the positive fields. `informed` seeds sigma2, alpha_hat,
// beta_hat and dhat from the hyperpriors and a noise estimate; `zero` leaves
// every raw field except mu at 0.
enum class InitPolicy { kInformed, kZero };

struct InitValues {
  double sigma2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double dhat = 0.0;
};

// Conjugate-update starting point: alpha + 1/2, beta + noise_var/2, dhat = d,
// sigma2 = beta_hat / (2 alpha_hat).
InitValues informed_init(double alpha, double beta, double d, double noise_var);

// Produces Theta from raw trainable state. forward() caches what backward()
// needs; backward() overwrites the parameter gradients.
class ParamBackend {
 public:
  virtual ~ParamBackend() = default;
  virtual BackendKind kind() const = 0;
  virtual Theta forward(const ImageTensor& y) = 0;
  virtual void backward(const ThetaGrad& grad) = 0;
  virtual std::vector<nn::Parameter*> parameters() = 0;

  int K() const { return K_; }
  int channels() const { return C_; }
  int height() const { return H_; }
  int width() const { return W_; }

 protected:
  ParamBackend(int K, int C, int H, int W);
  void check_input(const ImageTensor& y) const;

  int K_, C_, H_, W_;
};

// One raw parameter per (k, c, h, w) and field.
class DirectBackend final : public ParamBackend {
 public:
  // mu raw = y replicated K times; other fields per `init`.
  DirectBackend(int K, const ImageTensor& y, InitPolicy policy, const InitValues& init = {});

  BackendKind kind() const override { return BackendKind::kDirect; }
  Theta forward(const ImageTensor& y) override;
  void backward(const ThetaGrad& grad) override;
  std::vector<nn::Parameter*> parameters() override;

  RawHeads raw_heads() const;
  void set_raw_heads(const RawHeads& raw);

 private:
  // mu, sigma2, alpha, beta, pi, dhat; each K x C x H x W.
  std::vector<nn::Parameter> fields_;
  RawHeads raw_;
  Theta theta_;
};

// X-net (two-scale encoder-decoder) emits raw mu and sigma2; Phi-net raw
// alpha_hat and beta_hat; Z-net pi logits; Omega-net raw dhat. Head channel
// index for component k and image channel c is k*C + c.
class ConvBackend final : public ParamBackend {
 public:
  ConvBackend(int K, int C, int H, int W, int width, std::uint64_t seed, InitPolicy policy,
              const InitValues& init = {});

  BackendKind kind() const override { return BackendKind::kConv; }
  Theta forward(const ImageTensor& y) override;
  void backward(const ThetaGrad& grad) override;
  std::vector<nn::Parameter*> parameters() override;

  // Zeroes every weight and bias.
  void zero_weights();
  nn::UNet2& xnet() { return xnet_; }

 private:
  nn::UNet2 xnet_;
  nn::PlainNet phinet_;
  nn::PlainNet znet_;
  nn::PlainNet omeganet_;
  RawHeads raw_;
  Theta theta_;
};

std::unique_ptr<ParamBackend> make_backend(BackendKind kind, int K, const ImageTensor& y, int conv_width,
                                           std::uint64_t seed, InitPolicy policy, const InitValues& init);

}  // namespace sdvi
