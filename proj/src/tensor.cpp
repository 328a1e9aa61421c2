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

#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace sdvi {

ImageTensor::ImageTensor(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw ArgumentError("tensor dimensions must be positive, got " + std::to_string(channels) +
                        "x" + std::to_string(height) + "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

ImageTensor::ImageTensor(int channels, int height, int width, std::vector<double> data)
    : ImageTensor(channels, height, width) {
  if (data.size() != data_.size()) {
    throw ArgumentError("tensor data length " + std::to_string(data.size()) +
                        " does not match shape " + shape_string());
  }
  data_ = std::move(data);
}

std::string ImageTensor::shape_string() const {
  return std::to_string(channels_) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
}

void ImageTensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool ImageTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double ImageTensor::min() const {
  return data_.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : *std::min_element(data_.begin(), data_.end());
}

double ImageTensor::max() const {
  return data_.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : *std::max_element(data_.begin(), data_.end());
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ArgumentError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                        b.shape_string());
  }
}

ImageTensor clamp01(const ImageTensor& t) {
  ImageTensor out = t;
  for (double& v : out.raw()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace sdvi
