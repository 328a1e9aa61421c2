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

#include "engine.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "adam.hpp"
#include "errors.hpp"
#include "noise_estimator.hpp"

namespace sdvi {
namespace {

constexpr std::uint64_t kWeightSeedSalt = 0x9e3779b97f4a7c15ULL;

std::string describe(const ElboBreakdown& b) {
  std::ostringstream os;
  write_history_row(os, b);
  std::string s = os.str();
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

bool finite(const ElboBreakdown& b) {
  return std::isfinite(b.L1) && std::isfinite(b.L2_entropy) && std::isfinite(b.L3) && std::isfinite(b.L4) &&
         std::isfinite(b.L5) && std::isfinite(b.total);
}

}  // namespace

double resolve_delta(const ImageTensor& y, const ElboConfig& cfg) {
  if (cfg.delta_override) return *cfg.delta_override;
  return estimate_delta(y).delta;
}

RunResult run(const ImageTensor& y, const ElboConfig& cfg, const std::vector<OraclePtr>& oracles,
              ParamBackend& backend, const IterationObserver& observer) {
  cfg.validate();
  if (oracles.size() != 1 && static_cast<int>(oracles.size()) != cfg.K) {
    throw ArgumentError("run: need 1 or K oracles, got " + std::to_string(oracles.size()));
  }
  for (const auto& o : oracles)
    if (!o) throw ArgumentError("run: null oracle");
  if (backend.K() != cfg.K) throw ArgumentError("run: backend K does not match config K");
  if (!y.all_finite()) throw ArgumentError("run: input image has non-finite values");

  RunResult result;
  result.delta = resolve_delta(y, cfg);
  result.lambda = lambda_weight(result.delta, cfg.l1, cfg.l2, cfg.gamma);
  const double lambda = result.lambda;

  std::mt19937_64 rng(cfg.seed);
  AdamState adam(AdamOptions{cfg.lr});
  const auto params = backend.parameters();
  result.history.reserve(static_cast<std::size_t>(cfg.T));

  for (int t = 0; t < cfg.T; ++t) {
    try {
      const Theta theta = backend.forward(y);
      validate_theta(theta);
      ThetaGrad grad = ThetaFields::zeros(cfg.K, y.channels(), y.height(), y.width());

      ElboBreakdown b;
      b.iteration = t;
      b.lambda = lambda;
      b.L1 = compute_L1(theta, y, &grad);
      b.L2_entropy = l2_entropy_part(theta, &grad, lambda);
      b.L3 = compute_L3(theta, cfg, &grad);
      b.L4 = compute_L4(theta, &grad);
      b.L5 = compute_L5(theta, cfg, &grad);
      b.total = b.L1 + lambda * b.L2_entropy + b.L3 + b.L4 + b.L5;

      const auto scores = score_grad_L2(theta, oracles, cfg.M, rng, cfg.sigma2_mode, cfg.parallel_oracles);
      for (int k = 0; k < cfg.K; ++k) {
        for (std::size_t i = 0; i < y.size(); ++i) {
          const double w = -lambda * theta.pi[k][i];
          grad.mu[k][i] += w * scores[k].d_mu[i];
          grad.sigma2[k][i] += w * scores[k].d_sigma2[i];
        }
      }
      if (!finite(b)) throw NumericError("non-finite loss: " + describe(b));
      if (!all_finite(grad)) throw NumericError("non-finite gradient");

      backend.backward(grad);
      for (const nn::Parameter* p : params) {
        for (double g : p->grad)
          if (!std::isfinite(g)) throw NumericError("non-finite parameter gradient in " + p->name);
      }
      adam.step(params);
      result.history.push_back(b);
      if (observer) observer(b, backend);
    } catch (const Error& e) {
      std::string msg = "iteration " + std::to_string(t) + ": " + e.what();
      if (!result.history.empty()) msg += " (last finite breakdown: " + describe(result.history.back()) + ")";
      throw_error(e.kind(), msg);
    }
  }

  const Theta final_theta = backend.forward(y);
  validate_theta(final_theta);
  auto [mean, var] = fuse(final_theta);
  result.mean = std::move(mean);
  result.variance = std::move(var);
  result.pi = final_theta.pi;
  return result;
}

std::unique_ptr<ParamBackend> make_run_backend(const ImageTensor& y, const ElboConfig& cfg) {
  cfg.validate();
  const double delta = resolve_delta(y, cfg);
  const auto d = cfg.prior_d();
  const double dmean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  const double noise_var = (delta / 255.0) * (delta / 255.0);
  const InitValues init = informed_init(cfg.alpha, cfg.beta, dmean, noise_var);
  return make_backend(cfg.backend, cfg.K, y, cfg.conv_width, cfg.seed ^ kWeightSeedSalt, cfg.init, init);
}

RunResult run(const ImageTensor& y, const ElboConfig& cfg, const std::vector<OraclePtr>& oracles,
              const IterationObserver& observer) {
  ElboConfig pinned = cfg;
  pinned.delta_override = resolve_delta(y, cfg);
  auto backend = make_run_backend(y, pinned);
  return run(y, pinned, oracles, *backend, observer);
}

void write_history_row(std::ostream& os, const ElboBreakdown& b) {
  std::ostringstream row;
  row.precision(17);
  row << b.iteration << ',' << b.L1 << ',' << b.L2_entropy << ',' << b.L3 << ',' << b.L4 << ',' << b.L5 << ','
      << b.lambda << ',' << b.total << '\n';
  os << row.str();
}

void write_history_csv(std::ostream& os, const std::vector<ElboBreakdown>& history) {
  os << "iter,L1,L2ent,L3,L4,L5,lambda,total\n";
  for (const auto& b : history) write_history_row(os, b);
}

}  // namespace sdvi
