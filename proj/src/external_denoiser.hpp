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

#include <chrono>
#include <string>

#include "denoiser.hpp"

namespace sdvi {

// Runs a shell command per call. The template's {in}, {out} and {nv}
// placeholders are replaced with temporary SDVI1 file paths for the noisy
// input, the expected output and the noise-variance map. Exit code 0 means
// success.
class ExternalOracle final : public DenoiserOracle {
 public:
  static constexpr ValidityRange kDefaultRange{1.0 / 255.0, 100.0 / 255.0};

  explicit ExternalOracle(std::string command_template,
                          std::chrono::milliseconds timeout = std::chrono::seconds(120),
                          std::optional<ValidityRange> range = kDefaultRange,
                          bool concurrent_safe = false);

  ImageTensor denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const override;
  std::optional<ValidityRange> validity_range() const override { return range_; }
  bool concurrent_safe() const override { return concurrent_safe_; }
  std::string describe() const override { return "external(" + template_ + ")"; }

 private:
  std::string template_;
  std::chrono::milliseconds timeout_;
  std::optional<ValidityRange> range_;
  bool concurrent_safe_;
};

ImageTensor external_denoise(const ImageTensor& noisy, const ImageTensor& noise_var,
                             const std::string& command_template,
                             std::chrono::milliseconds timeout = std::chrono::seconds(120));

}  // namespace sdvi
