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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace sdvi {

// Loads an 8-bit grayscale or RGB raster (PNG, binary PGM/PPM) scaled to
// [0,1], or an SDVI1 tensor file (values taken verbatim).
ImageTensor load_image(const std::string& path);

// Format chosen by extension: .png, .pgm, .ppm quantize round(clamp(v)*255);
// .sdvi writes an unclamped SDVI1 tensor.
void save_image(const ImageTensor& img, const std::string& path);

// SDVI1 tensor exchange format: "SDVI1", u32 LE ndim, ndim u32 LE dims,
// row-major f32 LE data.
struct RawTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

void write_sdvi(std::ostream& os, std::span<const std::uint32_t> dims, std::span<const double> data);
RawTensor read_sdvi(std::istream& is);

void write_tensor(const std::string& path, const ImageTensor& t);
// Accepts ndim 2 (H,W; one channel) or ndim 3 (C,H,W).
ImageTensor read_tensor(const std::string& path);

inline std::uint8_t quantize_byte(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(c * 255.0 + 0.5);
}

}  // namespace sdvi
