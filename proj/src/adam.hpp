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
#include <string>
#include <vector>

#include "nn.hpp"

namespace sdvi {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameters. Moment buffers are
// allocated on the first step and bound to the parameter sizes seen then.
class AdamState {
 public:
  explicit AdamState(AdamOptions opts = {}) : opts_(opts) {}

  void step(const std::vector<nn::Parameter*>& params);
  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return opts_; }

 private:
  AdamOptions opts_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Writes every parameter at full double precision into `path` (per block:
// u32 ndim, u32 dims, f64 values, little-endian) and a plain-text
// manifest `path + ".manifest"` with lines "name d0xd1x... byte_offset".
void save_checkpoint(const std::string& path, const std::vector<nn::Parameter*>& params);
// Restores values by name; shapes must match.
void load_checkpoint(const std::string& path, const std::vector<nn::Parameter*>& params);

}  // namespace sdvi
