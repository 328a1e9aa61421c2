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

#include <vector>

#include "tensor.hpp"

namespace sdvi {

// Pixel-shuffle downsampling. subs[a * stride + b] holds the pixels at rows
// a, a+s, ... and columns b, b+s, ... of the stride-divisible crop.
struct SubImageGrid {
  int stride = 1;
  std::vector<ImageTensor> subs;
};

SubImageGrid pd_down(const ImageTensor& img, int stride);

// Inverse of pd_down on the cropped region: returns a C x (s*h) x (s*w) image.
ImageTensor pd_up(const SubImageGrid& grid);

}  // namespace sdvi
