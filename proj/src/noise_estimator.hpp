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

#include <cstddef>
#include <vector>

#include "tensor.hpp"

namespace sdvi {

struct NoiseEstimate {
  double delta = 0.0;  // noise std on the 0-255 scale
  std::size_t patches_used = 0;
  std::vector<double> sub_image_medians;  // 0-255 scale, channel-major
};

inline constexpr int kNoisePdStride = 4;
inline constexpr int kNoisePatch = 8;
inline constexpr int kNoisePatchStride = 4;
inline constexpr int kNoiseMinSize = 32;

// Pixel-shuffle the image with stride 4, score 8x8 patches (stride 4) by mean
// absolute first difference, keep those at or below the per-sub-image median,
// and measure each kept patch by the bias-corrected std of its residual
// against a 3x3 box filter (interior pixels only). delta is 255 times the
// mean over sub-images and channels of the per-sub-image median.
NoiseEstimate estimate_delta(const ImageTensor& y);

// 1/gamma below l1, 1 on [l1, l2), gamma from l2 upward.
double lambda_weight(double delta, double l1 = 10.0, double l2 = 25.0, double gamma = 2.0);

}  // namespace sdvi
