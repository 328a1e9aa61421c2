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
#include <random>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace sdvi::nn {

// Trainable array with its accumulated gradient.
struct Parameter {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<double> value;
  std::vector<double> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<std::uint32_t> d);
  void zero_grad();
};

// 3x3 convolution, stride 1, zero padding 1 (spatial size preserved).
class Conv2d {
 public:
  Conv2d(std::string name, int in_channels, int out_channels);

  ImageTensor forward(const ImageTensor& x);
  // Accumulates weight/bias gradients and returns dL/dx.
  ImageTensor backward(const ImageTensor& grad_out);

  // Fan-in scaled uniform weights, zero bias.
  void init_uniform(std::mt19937_64& rng);

  int in_channels() const { return in_; }
  int out_channels() const { return out_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }

 private:
  double w(int o, int i, int ky, int kx) const {
    return weight_.value[((static_cast<std::size_t>(o) * in_ + i) * 3 + ky) * 3 + kx];
  }

  int in_;
  int out_;
  Parameter weight_;
  Parameter bias_;
  ImageTensor input_;
};

class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = 0.1) : slope_(slope) {}
  ImageTensor forward(const ImageTensor& x);
  ImageTensor backward(const ImageTensor& grad_out) const;

 private:
  double slope_;
  ImageTensor input_;
};

// 2x2 average pooling; trailing odd rows/columns are dropped.
class AvgPool2 {
 public:
  ImageTensor forward(const ImageTensor& x);
  ImageTensor backward(const ImageTensor& grad_out) const;

 private:
  int in_h_ = 0;
  int in_w_ = 0;
};

// Nearest-neighbour upsampling to an explicit target size; source index is
// min(i / 2, h_in - 1).
class Upsample2 {
 public:
  ImageTensor forward(const ImageTensor& x, int out_h, int out_w);
  ImageTensor backward(const ImageTensor& grad_out) const;

 private:
  int in_c_ = 0;
  int in_h_ = 0;
  int in_w_ = 0;
};

ImageTensor concat_channels(const ImageTensor& a, const ImageTensor& b);
// Splits the channel axis at `first` channels.
std::pair<ImageTensor, ImageTensor> split_channels(const ImageTensor& x, int first);

class Network {
 public:
  virtual ~Network() = default;
  virtual ImageTensor forward(const ImageTensor& x) = 0;
  virtual ImageTensor backward(const ImageTensor& grad_out) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
};

// conv-lrelu x4, then a linear conv head: 5 convolution layers.
class PlainNet final : public Network {
 public:
  PlainNet(const std::string& name, int in_channels, int width, int out_channels, int layers = 5);
  ImageTensor forward(const ImageTensor& x) override;
  ImageTensor backward(const ImageTensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void init(std::mt19937_64& rng);

 private:
  std::vector<Conv2d> convs_;
  std::vector<LeakyRelu> acts_;
};

// Two-scale encoder-decoder with one skip connection:
//   enc1 (2 convs) -> pool -> enc2 (2 convs) -> upsample -> concat(enc1) ->
//   dec (conv + lrelu) -> linear head.
class UNet2 final : public Network {
 public:
  UNet2(const std::string& name, int in_channels, int width, int out_channels);
  ImageTensor forward(const ImageTensor& x) override;
  ImageTensor backward(const ImageTensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void init(std::mt19937_64& rng);

 private:
  int width_;
  Conv2d e1a_, e1b_, e2a_, e2b_, d1_, head_;
  LeakyRelu a1a_, a1b_, a2a_, a2b_, ad1_;
  AvgPool2 pool_;
  Upsample2 up_;
};

}  // namespace sdvi::nn
