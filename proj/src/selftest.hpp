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
#include <functional>
#include <string>
#include <vector>

#include "elbo.hpp"

namespace sdvi {

struct SelftestCheck {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  std::string suite;  // empty runs every suite
  Sigma2GradMode sigma2_mode = Sigma2GradMode::kChainCorrected;
  std::uint64_t seed = 20260101;
};

// "score-identity", "fd", "kl".
const std::vector<std::string>& selftest_suites();

// Runs the selected suites, reporting each check through `report`. Returns
// true when every check passed. Unknown suite names throw ArgumentError.
bool run_selftest(const SelftestOptions& opts, const std::function<void(const SelftestCheck&)>& report);

}  // namespace sdvi
