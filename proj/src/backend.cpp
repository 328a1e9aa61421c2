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

#include "backend.hpp"

#include <algorithm>

#include "errors.hpp"

namespace sdvi {
namespace {

enum Field { kMu = 0, kSigma2, kAlpha, kBeta, kPi, kDhat, kFieldCount };
const char* const kFieldNames[kFieldCount] = {"mu_raw", "sigma2_raw", "alpha_raw",
                                              "beta_raw", "pi_logit", "dhat_raw"};

std::vector<ImageTensor>& field_of(ThetaFields& f, int field) {
  switch (field) {
    case kMu: return f.mu;
    case kSigma2: return f.sigma2;
    case kAlpha: return f.alpha;
    case kBeta: return f.beta;
    case kPi: return f.pi;
    default: return f.dhat;
  }
}

const std::vector<ImageTensor>& field_of(const ThetaFields& f, int field) {
  return field_of(const_cast<ThetaFields&>(f), field);
}

double raw_for(double value, double floor) { return softplus_inverse(std::max(value - floor, 1e-12)); }

// Copies K*C channels starting at `offset` of a network output into K maps.
void unpack(const ImageTensor& out, int offset, int K, int C, std::vector<ImageTensor>& dst) {
  const std::size_t plane = out.plane_size();
  for (int k = 0; k < K; ++k) {
    auto first = out.raw().begin() + static_cast<std::ptrdiff_t>((offset + k * C) * plane);
    std::copy(first, first + static_cast<std::ptrdiff_t>(C * plane), dst[k].raw().begin());
  }
}

void pack(const std::vector<ImageTensor>& src, int offset, int C, ImageTensor& out) {
  const std::size_t plane = out.plane_size();
  for (std::size_t k = 0; k < src.size(); ++k) {
    std::copy(src[k].raw().begin(), src[k].raw().end(),
              out.raw().begin() + static_cast<std::ptrdiff_t>((offset + static_cast<int>(k) * C) * plane));
  }
}

}  // namespace

InitValues informed_init(double alpha, double beta, double d, double noise_var) {
  InitValues v;
  v.alpha = alpha + 0.5;
  v.beta = beta + 0.5 * noise_var;
  v.sigma2 = v.beta / (2.0 * v.alpha);
  v.dhat = d;
  return v;
}

ParamBackend::ParamBackend(int K, int C, int H, int W) : K_(K), C_(C), H_(H), W_(W) {
  if (K < 1) throw ArgumentError("backend: K must be >= 1");
  if (C < 1 || H < 1 || W < 1) throw ArgumentError("backend: image dimensions must be positive");
}

void ParamBackend::check_input(const ImageTensor& y) const {
  if (y.channels() != C_ || y.height() != H_ || y.width() != W_) {
    throw ArgumentError("backend configured for " + std::to_string(C_) + "x" + std::to_string(H_) + "x" +
                        std::to_string(W_) + " but got " + y.shape_string());
  }
}

DirectBackend::DirectBackend(int K, const ImageTensor& y, InitPolicy policy, const InitValues& init)
    : ParamBackend(K, y.channels(), y.height(), y.width()) {
  const std::vector<std::uint32_t> dims = {static_cast<std::uint32_t>(K), static_cast<std::uint32_t>(C_),
                                           static_cast<std::uint32_t>(H_), static_cast<std::uint32_t>(W_)};
  for (int f = 0; f < kFieldCount; ++f) fields_.emplace_back(kFieldNames[f], dims);
  const std::size_t n = y.size();
  for (int k = 0; k < K; ++k) std::copy(y.raw().begin(), y.raw().end(), fields_[kMu].value.begin() + k * n);
  if (policy == InitPolicy::kInformed) {
    std::fill(fields_[kSigma2].value.begin(), fields_[kSigma2].value.end(), raw_for(init.sigma2, kSigma2Floor));
    std::fill(fields_[kAlpha].value.begin(), fields_[kAlpha].value.end(), raw_for(init.alpha, kAlphaFloor));
    std::fill(fields_[kBeta].value.begin(), fields_[kBeta].value.end(), raw_for(init.beta, kBetaFloor));
    std::fill(fields_[kDhat].value.begin(), fields_[kDhat].value.end(), raw_for(init.dhat, kDhatFloor));
  }
}

RawHeads DirectBackend::raw_heads() const {
  RawHeads raw = ThetaFields::zeros(K_, C_, H_, W_);
  const std::size_t n = static_cast<std::size_t>(C_) * H_ * W_;
  for (int f = 0; f < kFieldCount; ++f) {
    auto& maps = field_of(raw, f);
    for (int k = 0; k < K_; ++k) {
      auto first = fields_[f].value.begin() + static_cast<std::ptrdiff_t>(k * n);
      std::copy(first, first + static_cast<std::ptrdiff_t>(n), maps[k].raw().begin());
    }
  }
  return raw;
}

void DirectBackend::set_raw_heads(const RawHeads& raw) {
  if (raw.K() != K_ || !raw.shape_ref().same_shape(ImageTensor(C_, H_, W_))) {
    throw ArgumentError("set_raw_heads: shape mismatch");
  }
  const std::size_t n = static_cast<std::size_t>(C_) * H_ * W_;
  for (int f = 0; f < kFieldCount; ++f) {
    const auto& maps = field_of(raw, f);
    for (int k = 0; k < K_; ++k) std::copy(maps[k].raw().begin(), maps[k].raw().end(), fields_[f].value.begin() + k * n);
  }
}

Theta DirectBackend::forward(const ImageTensor& y) {
  check_input(y);
  raw_ = raw_heads();
  theta_ = apply_links(raw_);
  return theta_;
}

void DirectBackend::backward(const ThetaGrad& grad) {
  if (raw_.K() == 0) throw ArgumentError("DirectBackend::backward called before forward");
  const RawHeads g = links_backward(raw_, theta_, grad);
  const std::size_t n = static_cast<std::size_t>(C_) * H_ * W_;
  for (int f = 0; f < kFieldCount; ++f) {
    const auto& maps = field_of(g, f);
    for (int k = 0; k < K_; ++k) std::copy(maps[k].raw().begin(), maps[k].raw().end(), fields_[f].grad.begin() + k * n);
  }
}

std::vector<nn::Parameter*> DirectBackend::parameters() {
  std::vector<nn::Parameter*> ps;
  for (auto& f : fields_) ps.push_back(&f);
  return ps;
}

ConvBackend::ConvBackend(int K, int C, int H, int W, int width, std::uint64_t seed, InitPolicy policy,
                         const InitValues& init)
    : ParamBackend(K, C, H, W),
      xnet_("xnet", C, width, 2 * K * C),
      phinet_("phinet", C, width, 2 * K * C),
      znet_("znet", C, width, K * C),
      omeganet_("omeganet", C, width, K * C) {
  if (width < 1) throw ArgumentError("ConvBackend: width must be >= 1");
  if (H < 2 || W < 2) throw ArgumentError("ConvBackend: image must be at least 2x2");
  std::mt19937_64 rng(seed);
  xnet_.init(rng);
  phinet_.init(rng);
  znet_.init(rng);
  omeganet_.init(rng);
  if (policy == InitPolicy::kInformed) {
    const int KC = K * C;
    auto& xb = xnet_.parameters().back()->value;
    auto& pb = phinet_.parameters().back()->value;
    auto& ob = omeganet_.parameters().back()->value;
    for (int j = 0; j < KC; ++j) {
      xb[KC + j] = raw_for(init.sigma2, kSigma2Floor);
      pb[j] = raw_for(init.alpha, kAlphaFloor);
      pb[KC + j] = raw_for(init.beta, kBetaFloor);
      ob[j] = raw_for(init.dhat, kDhatFloor);
    }
  }
}

void ConvBackend::zero_weights() {
  for (nn::Parameter* p : parameters()) std::fill(p->value.begin(), p->value.end(), 0.0);
}

Theta ConvBackend::forward(const ImageTensor& y) {
  check_input(y);
  const int KC = K_ * C_;
  raw_ = ThetaFields::zeros(K_, C_, H_, W_);
  const ImageTensor xo = xnet_.forward(y);
  const ImageTensor po = phinet_.forward(y);
  const ImageTensor zo = znet_.forward(y);
  const ImageTensor oo = omeganet_.forward(y);
  unpack(xo, 0, K_, C_, raw_.mu);
  unpack(xo, KC, K_, C_, raw_.sigma2);
  unpack(po, 0, K_, C_, raw_.alpha);
  unpack(po, KC, K_, C_, raw_.beta);
  unpack(zo, 0, K_, C_, raw_.pi);
  unpack(oo, 0, K_, C_, raw_.dhat);
  theta_ = apply_links(raw_);
  return theta_;
}

void ConvBackend::backward(const ThetaGrad& grad) {
  if (raw_.K() == 0) throw ArgumentError("ConvBackend::backward called before forward");
  for (nn::Parameter* p : parameters()) p->zero_grad();
  const RawHeads g = links_backward(raw_, theta_, grad);
  const int KC = K_ * C_;
  ImageTensor gx(2 * KC, H_, W_), gp(2 * KC, H_, W_), gz(KC, H_, W_), go(KC, H_, W_);
  pack(g.mu, 0, C_, gx);
  pack(g.sigma2, KC, C_, gx);
  pack(g.alpha, 0, C_, gp);
  pack(g.beta, KC, C_, gp);
  pack(g.pi, 0, C_, gz);
  pack(g.dhat, 0, C_, go);
  xnet_.backward(gx);
  phinet_.backward(gp);
  znet_.backward(gz);
  omeganet_.backward(go);
}

std::vector<nn::Parameter*> ConvBackend::parameters() {
  std::vector<nn::Parameter*> ps;
  for (nn::Network* net : std::initializer_list<nn::Network*>{&xnet_, &phinet_, &znet_, &omeganet_}) {
    auto p = net->parameters();
    ps.insert(ps.end(), p.begin(), p.end());
  }
  return ps;
}

std::unique_ptr<ParamBackend> make_backend(BackendKind kind, int K, const ImageTensor& y, int conv_width,
                                           std::uint64_t seed, InitPolicy policy, const InitValues& init) {
  if (kind == BackendKind::kDirect) return std::make_unique<DirectBackend>(K, y, policy, init);
  return std::make_unique<ConvBackend>(K, y.channels(), y.height(), y.width(), conv_width, seed, policy, init);
}

}  // namespace sdvi
