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

#include "nn.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace sdvi::nn {

Parameter::Parameter(std::string n, std::vector<std::uint32_t> d) : name(std::move(n)), dims(std::move(d)) {
  std::size_t count = 1;
  for (auto v : dims) count *= v;
  value.assign(count, 0.0);
  grad.assign(count, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

Conv2d::Conv2d(std::string name, int in_channels, int out_channels)
    : in_(in_channels),
      out_(out_channels),
      weight_(name + ".weight", {static_cast<std::uint32_t>(out_channels),
                                 static_cast<std::uint32_t>(in_channels), 3, 3}),
      bias_(name + ".bias", {static_cast<std::uint32_t>(out_channels)}) {
  if (in_channels < 1 || out_channels < 1) throw ArgumentError("Conv2d: channel counts must be >= 1");
}

void Conv2d::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_) * 9.0);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : weight_.value) v = u(rng);
  std::fill(bias_.value.begin(), bias_.value.end(), 0.0);
}

ImageTensor Conv2d::forward(const ImageTensor& x) {
  if (x.channels() != in_) {
    throw ArgumentError(weight_.name + ": expected " + std::to_string(in_) + " input channels, got " +
                        std::to_string(x.channels()));
  }
  input_ = x;
  const int H = x.height(), W = x.width();
  ImageTensor y(out_, H, W);
  for (int o = 0; o < out_; ++o) {
    double* yo = &y.at(o, 0, 0);
    std::fill(yo, yo + static_cast<std::size_t>(H) * W, bias_.value[o]);
    for (int i = 0; i < in_; ++i) {
      const double* xi = x.raw().data() + static_cast<std::size_t>(i) * x.plane_size();
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = w(o, i, ky, kx);
          const int dy = ky - 1, dx = kx - 1;
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          for (int r = std::max(0, -dy); r < std::min(H, H - dy); ++r) {
            double* yrow = yo + static_cast<std::size_t>(r) * W;
            const double* xrow = xi + static_cast<std::size_t>(r + dy) * W + dx;
            for (int c = x0; c < x1; ++c) yrow[c] += wv * xrow[c];
          }
        }
      }
    }
  }
  return y;
}

ImageTensor Conv2d::backward(const ImageTensor& grad_out) {
  const ImageTensor& x = input_;
  require_same_shape(grad_out, ImageTensor(out_, x.height(), x.width()), "Conv2d::backward");
  const int H = x.height(), W = x.width();
  ImageTensor gin(in_, H, W);
  for (int o = 0; o < out_; ++o) {
    const double* go = grad_out.raw().data() + static_cast<std::size_t>(o) * grad_out.plane_size();
    double gb = 0.0;
    for (std::size_t p = 0; p < static_cast<std::size_t>(H) * W; ++p) gb += go[p];
    bias_.grad[o] += gb;
    for (int i = 0; i < in_; ++i) {
      const double* xi = x.raw().data() + static_cast<std::size_t>(i) * x.plane_size();
      double* gi = &gin.at(i, 0, 0);
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(o) * in_ + i) * 3 + ky) * 3 + kx;
          const double wv = weight_.value[widx];
          const int dy = ky - 1, dx = kx - 1;
          const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
          double gw = 0.0;
          for (int r = std::max(0, -dy); r < std::min(H, H - dy); ++r) {
            const double* grow = go + static_cast<std::size_t>(r) * W;
            const double* xrow = xi + static_cast<std::size_t>(r + dy) * W + dx;
            double* girow = gi + static_cast<std::size_t>(r + dy) * W + dx;
            for (int c = x0; c < x1; ++c) {
              gw += grow[c] * xrow[c];
              girow[c] += wv * grow[c];
            }
          }
          weight_.grad[widx] += gw;
        }
      }
    }
  }
  return gin;
}

ImageTensor LeakyRelu::forward(const ImageTensor& x) {
  input_ = x;
  ImageTensor y = x;
  for (double& v : y.raw()) v = v > 0.0 ? v : slope_ * v;
  return y;
}

ImageTensor LeakyRelu::backward(const ImageTensor& grad_out) const {
  require_same_shape(grad_out, input_, "LeakyRelu::backward");
  ImageTensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= input_[i] > 0.0 ? 1.0 : slope_;
  return g;
}

ImageTensor AvgPool2::forward(const ImageTensor& x) {
  in_h_ = x.height();
  in_w_ = x.width();
  const int h = std::max(1, in_h_ / 2), w = std::max(1, in_w_ / 2);
  if (in_h_ < 2 || in_w_ < 2) throw ArgumentError("AvgPool2: input smaller than 2x2");
  ImageTensor y(x.channels(), h, w);
  for (int c = 0; c < x.channels(); ++c)
    for (int r = 0; r < h; ++r)
      for (int q = 0; q < w; ++q)
        y.at(c, r, q) = 0.25 * (x.at(c, 2 * r, 2 * q) + x.at(c, 2 * r, 2 * q + 1) +
                                x.at(c, 2 * r + 1, 2 * q) + x.at(c, 2 * r + 1, 2 * q + 1));
  return y;
}

ImageTensor AvgPool2::backward(const ImageTensor& grad_out) const {
  ImageTensor g(grad_out.channels(), in_h_, in_w_);
  for (int c = 0; c < grad_out.channels(); ++c)
    for (int r = 0; r < grad_out.height(); ++r)
      for (int q = 0; q < grad_out.width(); ++q) {
        const double v = 0.25 * grad_out.at(c, r, q);
        g.at(c, 2 * r, 2 * q) += v;
        g.at(c, 2 * r, 2 * q + 1) += v;
        g.at(c, 2 * r + 1, 2 * q) += v;
        g.at(c, 2 * r + 1, 2 * q + 1) += v;
      }
  return g;
}

ImageTensor Upsample2::forward(const ImageTensor& x, int out_h, int out_w) {
  in_c_ = x.channels();
  in_h_ = x.height();
  in_w_ = x.width();
  ImageTensor y(in_c_, out_h, out_w);
  for (int c = 0; c < in_c_; ++c)
    for (int r = 0; r < out_h; ++r)
      for (int q = 0; q < out_w; ++q)
        y.at(c, r, q) = x.at(c, std::min(r / 2, in_h_ - 1), std::min(q / 2, in_w_ - 1));
  return y;
}

ImageTensor Upsample2::backward(const ImageTensor& grad_out) const {
  ImageTensor g(in_c_, in_h_, in_w_);
  for (int c = 0; c < in_c_; ++c)
    for (int r = 0; r < grad_out.height(); ++r)
      for (int q = 0; q < grad_out.width(); ++q)
        g.at(c, std::min(r / 2, in_h_ - 1), std::min(q / 2, in_w_ - 1)) += grad_out.at(c, r, q);
  return g;
}

ImageTensor concat_channels(const ImageTensor& a, const ImageTensor& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ArgumentError("concat_channels: spatial mismatch");
  }
  std::vector<double> data(a.raw());
  data.insert(data.end(), b.raw().begin(), b.raw().end());
  return ImageTensor(a.channels() + b.channels(), a.height(), a.width(), std::move(data));
}

std::pair<ImageTensor, ImageTensor> split_channels(const ImageTensor& x, int first) {
  if (first < 1 || first >= x.channels()) throw ArgumentError("split_channels: bad split point");
  const auto mid = x.raw().begin() + static_cast<std::ptrdiff_t>(first * x.plane_size());
  return {ImageTensor(first, x.height(), x.width(), std::vector<double>(x.raw().begin(), mid)),
          ImageTensor(x.channels() - first, x.height(), x.width(), std::vector<double>(mid, x.raw().end()))};
}

PlainNet::PlainNet(const std::string& name, int in_channels, int width, int out_channels, int layers) {
  if (layers < 2) throw ArgumentError("PlainNet needs at least 2 layers");
  convs_.emplace_back(name + ".conv0", in_channels, width);
  for (int l = 1; l < layers - 1; ++l) convs_.emplace_back(name + ".conv" + std::to_string(l), width, width);
  convs_.emplace_back(name + ".head", width, out_channels);
  acts_.assign(static_cast<std::size_t>(layers - 1), LeakyRelu(0.1));
}

void PlainNet::init(std::mt19937_64& rng) {
  for (auto& c : convs_) c.init_uniform(rng);
}

ImageTensor PlainNet::forward(const ImageTensor& x) {
  ImageTensor h = x;
  for (std::size_t l = 0; l + 1 < convs_.size(); ++l) h = acts_[l].forward(convs_[l].forward(h));
  return convs_.back().forward(h);
}

ImageTensor PlainNet::backward(const ImageTensor& grad_out) {
  ImageTensor g = convs_.back().backward(grad_out);
  for (std::size_t l = convs_.size() - 1; l-- > 0;) g = convs_[l].backward(acts_[l].backward(g));
  return g;
}

std::vector<Parameter*> PlainNet::parameters() {
  std::vector<Parameter*> ps;
  for (auto& c : convs_) {
    ps.push_back(&c.weight());
    ps.push_back(&c.bias());
  }
  return ps;
}

UNet2::UNet2(const std::string& name, int in_channels, int width, int out_channels)
    : width_(width),
      e1a_(name + ".enc1a", in_channels, width),
      e1b_(name + ".enc1b", width, width),
      e2a_(name + ".enc2a", width, width),
      e2b_(name + ".enc2b", width, width),
      d1_(name + ".dec1", 2 * width, width),
      head_(name + ".head", width, out_channels) {}

void UNet2::init(std::mt19937_64& rng) {
  for (Conv2d* c : {&e1a_, &e1b_, &e2a_, &e2b_, &d1_, &head_}) c->init_uniform(rng);
}

ImageTensor UNet2::forward(const ImageTensor& x) {
  const ImageTensor s1 = a1b_.forward(e1b_.forward(a1a_.forward(e1a_.forward(x))));
  const ImageTensor p = pool_.forward(s1);
  const ImageTensor s2 = a2b_.forward(e2b_.forward(a2a_.forward(e2a_.forward(p))));
  const ImageTensor u = up_.forward(s2, s1.height(), s1.width());
  const ImageTensor d = ad1_.forward(d1_.forward(concat_channels(s1, u)));
  return head_.forward(d);
}

ImageTensor UNet2::backward(const ImageTensor& grad_out) {
  const ImageTensor gd = d1_.backward(ad1_.backward(head_.backward(grad_out)));
  auto [gs1, gu] = split_channels(gd, width_);
  const ImageTensor gs2 = up_.backward(gu);
  const ImageTensor gp = e2a_.backward(a2a_.backward(e2b_.backward(a2b_.backward(gs2))));
  const ImageTensor gpool = pool_.backward(gp);
  for (std::size_t i = 0; i < gs1.size(); ++i) gs1[i] += gpool[i];
  return e1a_.backward(a1a_.backward(e1b_.backward(a1b_.backward(gs1))));
}

std::vector<Parameter*> UNet2::parameters() {
  std::vector<Parameter*> ps;
  for (Conv2d* c : {&e1a_, &e1b_, &e2a_, &e2b_, &d1_, &head_}) {
    ps.push_back(&c->weight());
    ps.push_back(&c->bias());
  }
  return ps;
}

}  // namespace sdvi::nn
