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

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "backend.hpp"
#include "elbo.hpp"

namespace sdvi {

struct ElboBreakdown {
  int iteration = 0;
  double L1 = 0.0;
  double L2_entropy = 0.0;
  double L3 = 0.0;
  double L4 = 0.0;
  double L5 = 0.0;
  double lambda = 1.0;
  // L1 + lambda * L2_entropy + L3 + L4 + L5
  double total = 0.0;
};

struct RunResult {
  ImageTensor mean;
  ImageTensor variance;
  std::vector<ImageTensor> pi;
  double delta = 0.0;
  double lambda = 1.0;
  std::vector<ElboBreakdown> history;
};

// Called after every Adam step with the breakdown of that iteration.
using IterationObserver = std::function<void(const ElboBreakdown&, ParamBackend&)>;

// Optimizes the variational objective for T iterations:
//   forward -> analytic terms and gradients -> lambda-scaled score gradients
//   (no gradient to pi) -> backward -> Adam step.
// delta and lambda are fixed before iteration 0. Deterministic given cfg.seed.
RunResult run(const ImageTensor& y, const ElboConfig& cfg, const std::vector<OraclePtr>& oracles,
              ParamBackend& backend, const IterationObserver& observer = {});

// Builds the backend described by cfg (informed init uses the noise estimate).
RunResult run(const ImageTensor& y, const ElboConfig& cfg, const std::vector<OraclePtr>& oracles,
              const IterationObserver& observer = {});

// Backend the second run() overload builds for y under cfg.
std::unique_ptr<ParamBackend> make_run_backend(const ImageTensor& y, const ElboConfig& cfg);

// Noise estimate used by run(): cfg.delta_override or estimate_delta(y).
double resolve_delta(const ImageTensor& y, const ElboConfig& cfg);

// Header "iter,L1,L2ent,L3,L4,L5,lambda,total" followed by one row per entry.
void write_history_csv(std::ostream& os, const std::vector<ElboBreakdown>& history);
void write_history_row(std::ostream& os, const ElboBreakdown& b);

}  // namespace sdvi
