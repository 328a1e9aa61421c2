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

#include "pd.hpp"

#include <string>

#include "errors.hpp"

namespace sdvi {

SubImageGrid pd_down(const ImageTensor& img, int stride) {
  if (stride < 1) throw ArgumentError("pd_down: stride must be >= 1");
  if (img.height() < stride || img.width() < stride) {
    throw ArgumentError("pd_down: stride " + std::to_string(stride) + " exceeds image " +
                        img.shape_string());
  }
  const int h = img.height() / stride;
  const int w = img.width() / stride;
  SubImageGrid grid;
  grid.stride = stride;
  grid.subs.reserve(static_cast<std::size_t>(stride) * stride);
  for (int a = 0; a < stride; ++a) {
    for (int b = 0; b < stride; ++b) {
      ImageTensor sub(img.channels(), h, w);
      for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) sub.at(c, y, x) = img.at(c, a + y * stride, b + x * stride);
      grid.subs.push_back(std::move(sub));
    }
  }
  return grid;
}

ImageTensor pd_up(const SubImageGrid& grid) {
  const int s = grid.stride;
  if (s < 1 || grid.subs.size() != static_cast<std::size_t>(s) * s) {
    throw ArgumentError("pd_up: grid must hold stride^2 sub-images");
  }
  const ImageTensor& first = grid.subs.front();
  for (const auto& sub : grid.subs) require_same_shape(first, sub, "pd_up");
  ImageTensor out(first.channels(), first.height() * s, first.width() * s);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) {
      const ImageTensor& sub = grid.subs[static_cast<std::size_t>(a) * s + b];
      for (int c = 0; c < sub.channels(); ++c)
        for (int y = 0; y < sub.height(); ++y)
          for (int x = 0; x < sub.width(); ++x) out.at(c, a + y * s, b + x * s) = sub.at(c, y, x);
    }
  return out;
}

}  // namespace sdvi
