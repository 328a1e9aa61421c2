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

#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "divergences.hpp"
#include "errors.hpp"
#include "nn.hpp"
#include "synth.hpp"
#include "theta.hpp"

namespace sdvi {
namespace {

using Report = std::function<void(const SelftestCheck&)>;

constexpr double kLossFdTol = 1e-5;
constexpr double kLayerFdTol = 1e-3;
constexpr double kScoreIdentityTol = 1e-8;
constexpr double kDiagonalTol = 1e-10;
constexpr double kMcSigmas = 4.0;
constexpr int kKlSamples = 100000;
constexpr int kKlDraws = 5;
constexpr int kScoreSamples = 100000;

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

std::vector<ImageTensor>& field(ThetaFields& t, int f) {
  switch (f) {
    case 0:
      return t.mu;
    case 1:
      return t.sigma2;
    case 2:
      return t.alpha;
    case 3:
      return t.beta;
    case 4:
      return t.pi;
    default:
      return t.dhat;
  }
}

Theta random_theta(int K, int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Theta th = ThetaFields::zeros(K, 1, h, w);
  for (int k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < th.mu[k].size(); ++i) {
      th.mu[k][i] = u(rng);
      th.sigma2[k][i] = 0.01 + 0.1 * u(rng);
      th.alpha[k][i] = 0.5 + 2.5 * u(rng);
      th.beta[k][i] = 0.05 + 0.5 * u(rng);
      th.pi[k][i] = 0.1 + u(rng);
      th.dhat[k][i] = 0.5 + 2.5 * u(rng);
    }
  }
  for (std::size_t i = 0; i < th.mu[0].size(); ++i) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += th.pi[k][i];
    for (int k = 0; k < K; ++k) th.pi[k][i] /= s;
  }
  return th;
}

// Largest relative disagreement between analytic and central-difference
// gradients over every entry of every field.
template <typename F>
double fd_theta(Theta th, const ThetaGrad& analytic, F&& f) {
  double worst = 0.0;
  for (int fi = 0; fi < 6; ++fi) {
    for (int k = 0; k < th.K(); ++k) {
      for (std::size_t i = 0; i < th.mu[k].size(); ++i) {
        double& x = field(th, fi)[k][i];
        const double x0 = x;
        const double h = 1e-6 * std::max(1.0, std::abs(x0));
        x = x0 + h;
        const double fp = f(th);
        x = x0 - h;
        const double fm = f(th);
        x = x0;
        const double fd = (fp - fm) / (2.0 * h);
        const double a = field(const_cast<ThetaGrad&>(analytic), fi)[k][i];
        const double scale = std::max({std::abs(a), std::abs(fd), 1e-4});
        worst = std::max(worst, std::abs(a - fd) / scale);
      }
    }
  }
  return worst;
}

void check(const Report& report, const std::string& suite, const std::string& name, bool ok,
           const std::string& detail, bool& all) {
  report({suite, name, ok, detail});
  all = all && ok;
}

bool suite_score_identity(const SelftestOptions& opts, const Report& report) {
  bool all = true;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int dim : {4, 16, 64}) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> m(dim), x(dim);
      for (int i = 0; i < dim; ++i) {
        m[i] = normal(rng);
        x[i] = m[i] + normal(rng);
      }
      const auto P = random_spd(dim, rng), S = random_spd(dim, rng);
      worst = std::max(worst, verify_score_identity_dense(dim, m, P, S, x).max_rel_discrepancy);
    }
    check(report, "score-identity", "dense dim " + std::to_string(dim), worst <= kScoreIdentityTol,
          "max rel discrepancy " + sci(worst), all);
  }
  {
    const int dim = 8;
    const double s2 = 0.3, n2 = 0.05;
    std::vector<double> m(dim), x(dim), P(dim * dim, 0.0), S(dim * dim, 0.0);
    for (int i = 0; i < dim; ++i) {
      m[i] = normal(rng);
      x[i] = normal(rng);
      P[i * dim + i] = s2;
      S[i * dim + i] = n2;
    }
    const auto r = verify_score_identity_dense(dim, m, P, S, x);
    double scalar = 0.0;
    for (int i = 0; i < dim; ++i) {
      const double expected = -(x[i] - m[i]) / (s2 + n2);
      scalar = std::max(scalar, std::abs(r.lhs[i] - expected) / std::abs(expected));
    }
    check(report, "score-identity", "diagonal reduction", r.max_rel_discrepancy <= kDiagonalTol && scalar <= kDiagonalTol,
          "identity " + sci(r.max_rel_discrepancy) + ", scalar formula " + sci(scalar), all);
    const auto z = verify_score_identity_dense(dim, m, random_spd(dim, rng), random_spd(dim, rng), m);
    double zmax = 0.0;
    for (int i = 0; i < dim; ++i) zmax = std::max({zmax, std::abs(z.lhs[i]), std::abs(z.rhs[i])});
    check(report, "score-identity", "input at prior mean", zmax == 0.0, "max |side| " + sci(zmax), all);
  }
  return all;
}

template <typename Net>
double fd_network(Net& net, const ImageTensor& x, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const ImageTensor out0 = net.forward(x);
  ImageTensor wts(out0.channels(), out0.height(), out0.width());
  for (double& v : wts.raw()) v = normal(rng);
  auto loss = [&](const ImageTensor& in) {
    const ImageTensor o = net.forward(in);
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += wts[i] * o[i];
    return s;
  };
  loss(x);
  for (auto* p : net.parameters()) p->zero_grad();
  const ImageTensor dx = net.backward(wts);
  double worst = 0.0;
  auto compare = [&](double a, double fd) {
    worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3}));
  };
  for (auto* p : net.parameters()) {
    const std::vector<double> g = p->grad;
    for (std::size_t i = 0; i < p->value.size(); i += 3) {
      const double v0 = p->value[i], h = 1e-5;
      p->value[i] = v0 + h;
      const double fp = loss(x);
      p->value[i] = v0 - h;
      const double fm = loss(x);
      p->value[i] = v0;
      compare(g[i], (fp - fm) / (2.0 * h));
    }
  }
  ImageTensor xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5;
    xp[i] = x[i] + h;
    const double fp = loss(xp);
    xp[i] = x[i] - h;
    const double fm = loss(xp);
    xp[i] = x[i];
    compare(dx[i], (fp - fm) / (2.0 * h));
  }
  return worst;
}

bool suite_fd(const SelftestOptions& opts, const Report& report) {
  bool all = true;
  std::mt19937_64 rng(opts.seed + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int K = 2, H = 4, W = 4;
  const Theta th = random_theta(K, H, W, rng);
  ImageTensor y(1, H, W);
  for (double& v : y.raw()) v = u(rng);
  ElboConfig cfg;
  cfg.K = K;
  cfg.d = {1.0, 1.5};

  struct Term {
    const char* name;
    std::function<double(const Theta&, ThetaGrad*)> fn;
  };
  const std::vector<Term> terms = {
      {"L1", [&](const Theta& t, ThetaGrad* g) { return compute_L1(t, y, g); }},
      {"L2 entropy part", [&](const Theta& t, ThetaGrad* g) { return l2_entropy_part(t, g); }},
      {"L3", [&](const Theta& t, ThetaGrad* g) { return compute_L3(t, cfg, g); }},
      {"L4", [&](const Theta& t, ThetaGrad* g) { return compute_L4(t, g); }},
      {"L5", [&](const Theta& t, ThetaGrad* g) { return compute_L5(t, cfg, g); }},
  };
  for (const auto& term : terms) {
    ThetaGrad g = ThetaFields::zeros(K, 1, H, W);
    term.fn(th, &g);
    const double worst = fd_theta(th, g, [&](const Theta& t) { return term.fn(t, nullptr); });
    check(report, "fd", std::string(term.name) + " gradients", worst <= kLossFdTol, "max rel err " + sci(worst), all);
  }

  {
    RawHeads raw = ThetaFields::zeros(K, 1, H, W);
    std::normal_distribution<double> normal(0.0, 1.0);
    raw.for_each_field([&](std::vector<ImageTensor>& f) {
      for (auto& t : f)
        for (double& v : t.raw()) v = normal(rng);
    });
    ThetaGrad w = ThetaFields::zeros(K, 1, H, W);
    w.for_each_field([&](std::vector<ImageTensor>& f) {
      for (auto& t : f)
        for (double& v : t.raw()) v = normal(rng);
    });
    auto dot = [&](const RawHeads& r) {
      Theta t = apply_links(r);
      double s = 0.0;
      for (int fi = 0; fi < 6; ++fi)
        for (int k = 0; k < K; ++k)
          for (std::size_t i = 0; i < t.mu[k].size(); ++i) s += field(w, fi)[k][i] * field(t, fi)[k][i];
      return s;
    };
    const RawHeads g = links_backward(raw, apply_links(raw), w);
    const double worst = fd_theta(raw, g, dot);
    check(report, "fd", "link functions", worst <= kLossFdTol, "max rel err " + sci(worst), all);
  }

  {
    ImageTensor x(2, 5, 6);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : x.raw()) v = normal(rng);
    nn::Conv2d conv("conv", 2, 3);
    conv.init_uniform(rng);
    conv.bias().value = {0.1, -0.2, 0.3};
    struct ConvNet {
      nn::Conv2d& c;
      ImageTensor forward(const ImageTensor& in) { return c.forward(in); }
      ImageTensor backward(const ImageTensor& g) { return c.backward(g); }
      std::vector<nn::Parameter*> parameters() { return {&c.weight(), &c.bias()}; }
    } wrapped{conv};
    const double wc = fd_network(wrapped, x, rng);
    check(report, "fd", "conv layer", wc <= kLayerFdTol, "max rel err " + sci(wc), all);
    nn::PlainNet plain("plain", 2, 4, 3);
    plain.init(rng);
    const double wp = fd_network(plain, x, rng);
    check(report, "fd", "plain network", wp <= kLayerFdTol, "max rel err " + sci(wp), all);
    nn::UNet2 unet("unet", 2, 4, 3);
    unet.init(rng);
    const double wu = fd_network(unet, x, rng);
    check(report, "fd", "encoder-decoder network", wu <= kLayerFdTol, "max rel err " + sci(wu), all);
  }

  {
    // Gaussian prior: E log p_s at a fixed smoothing level has a closed-form
    // sigma2 derivative of -1 / (2 (s2 + smoothing)).
    const double m = 0.4, s2 = 0.02, mu = 0.45, sigma2 = 0.01;
    const GaussPriorOracle oracle(m, s2);
    const ImageTensor mu_t(1, 1, 1, mu), s2_t(1, 1, 1, sigma2);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<ImageTensor> eps;
    eps.reserve(kScoreSamples);
    for (int i = 0; i < kScoreSamples; ++i) eps.emplace_back(1, 1, 1, normal(rng));
    const auto g = score_gradient(mu_t, s2_t, oracle, eps, opts.sigma2_mode);
    const double ref_mu = -(mu - m) / (s2 + sigma2);
    const double ref_s2 = -1.0 / (2.0 * (s2 + sigma2));
    // Per-sample spread of the chain-corrected estimator for the MC tolerance.
    double ss_mu = 0.0, ss_s2 = 0.0;
    const double sig = std::sqrt(sigma2);
    for (const auto& e : eps) {
      const double sc = -(mu + sig * e[0] - m) / (s2 + sigma2);
      ss_mu += (sc - ref_mu) * (sc - ref_mu);
      const double v = sc * e[0] / (2.0 * sig);
      ss_s2 += (v - ref_s2) * (v - ref_s2);
    }
    const double se_mu = std::sqrt(ss_mu / kScoreSamples / kScoreSamples);
    const double se_s2 = std::sqrt(ss_s2 / kScoreSamples / kScoreSamples);
    check(report, "fd", "score mu gradient", std::abs(g.d_mu[0] - ref_mu) <= kMcSigmas * se_mu,
          "estimate " + sci(g.d_mu[0]) + ", reference " + sci(ref_mu), all);
    const double ratio = g.d_sigma2[0] / ref_s2;
    std::string detail = "estimate/reference " + sci(ratio) + ", 2 sigma = " + sci(2.0 * sig);
    if (opts.sigma2_mode == Sigma2GradMode::kPerSigma) detail += " (per-sigma mode)";
    check(report, "fd", "score sigma2 gradient", std::abs(g.d_sigma2[0] - ref_s2) <= kMcSigmas * se_s2, detail, all);
  }
  return all;
}

double lgamma_ref(double x) { return std::lgamma(x); }

struct Moments {
  double mean = 0.0, m2 = 0.0;
  int n = 0;
  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / n;
    m2 += d * (v - mean);
  }
  double se() const { return std::sqrt(m2 / (n - 1) / n); }
};

bool suite_kl(const SelftestOptions& opts, const Report& report) {
  bool all = true;
  std::mt19937_64 rng(opts.seed + 2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto mc_check = [&](const std::string& name, double closed, const Moments& mc) {
    const double z = std::abs(closed - mc.mean) / mc.se();
    check(report, "kl", name, z <= kMcSigmas,
          "closed " + sci(closed) + ", mc " + sci(mc.mean) + " (" + sci(z) + " se)", all);
  };
  auto log_gamma_pdf = [](double x, double a, double b) {
    return a * std::log(b) - lgamma_ref(a) + (a - 1.0) * std::log(x) - b * x;
  };
  for (int d = 0; d < kKlDraws; ++d) {
    const double qa = 0.5 + 4.0 * u(rng), qb = 0.2 + 3.0 * u(rng);
    const double pa = 0.5 + 4.0 * u(rng), pb = 0.2 + 3.0 * u(rng);
    std::gamma_distribution<double> gq(qa, 1.0 / qb);
    Moments mc;
    for (int i = 0; i < kKlSamples; ++i) {
      const double x = gq(rng);
      mc.add(log_gamma_pdf(x, qa, qb) - log_gamma_pdf(x, pa, pb));
    }
    mc_check("kl_gamma draw " + std::to_string(d), kl_gamma({qa, qb}, {pa, pb}), mc);
  }
  for (int d = 0; d < kKlDraws; ++d) {
    const int K = 2 + d % 3;
    std::vector<double> q(K), p(K), pi(K);
    double ps = 0.0;
    for (int k = 0; k < K; ++k) {
      q[k] = 0.5 + 3.0 * u(rng);
      p[k] = 0.5 + 3.0 * u(rng);
      pi[k] = 0.05 + u(rng);
      ps += pi[k];
    }
    for (double& v : pi) v /= ps;
    auto log_dir = [&](const std::vector<double>& w, const std::vector<double>& a) {
      double sa = 0.0, s = 0.0;
      for (int k = 0; k < K; ++k) {
        sa += a[k];
        s += (a[k] - 1.0) * std::log(w[k]) - lgamma_ref(a[k]);
      }
      return s + lgamma_ref(sa);
    };
    std::vector<std::gamma_distribution<double>> gs;
    for (int k = 0; k < K; ++k) gs.emplace_back(q[k], 1.0);
    Moments kl_mc, cat_mc;
    std::vector<double> w(K);
    for (int i = 0; i < kKlSamples; ++i) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) s += (w[k] = gs[k](rng));
      for (double& v : w) v /= s;
      kl_mc.add(log_dir(w, q) - log_dir(w, p));
      double c = 0.0;
      for (int k = 0; k < K; ++k) c += pi[k] * (std::log(pi[k]) - std::log(w[k]));
      cat_mc.add(c);
    }
    mc_check("kl_dirichlet draw " + std::to_string(d), kl_dirichlet(q, p), kl_mc);
    mc_check("expected_cat_dirichlet_kl draw " + std::to_string(d), expected_cat_dirichlet_kl(pi, q), cat_mc);
  }
  for (int d = 0; d < kKlDraws; ++d) {
    const double y = u(rng), mu = u(rng), s2 = 0.001 + 0.1 * u(rng);
    const double a = 0.5 + 3.0 * u(rng), b = 0.05 + u(rng);
    std::gamma_distribution<double> gphi(a, 1.0 / b);
    std::normal_distribution<double> nx(mu, std::sqrt(s2));
    Moments mc;
    for (int i = 0; i < kKlSamples; ++i) {
      const double phi = gphi(rng), x = nx(rng);
      mc.add(-0.5 * std::log(phi) + 0.5 * phi * (y - x) * (y - x));
    }
    mc_check("l1_pointwise draw " + std::to_string(d), l1_pointwise(y, mu, s2, a, b), mc);
  }
  return all;
}

}  // namespace

const std::vector<std::string>& selftest_suites() {
  static const std::vector<std::string> names = {"score-identity", "fd", "kl"};
  return names;
}

bool run_selftest(const SelftestOptions& opts, const Report& report) {
  const auto& names = selftest_suites();
  if (!opts.suite.empty() && std::find(names.begin(), names.end(), opts.suite) == names.end()) {
    throw ArgumentError("unknown selftest suite '" + opts.suite + "'");
  }
  bool all = true;
  auto want = [&](const char* s) { return opts.suite.empty() || opts.suite == s; };
  if (want("score-identity")) all = suite_score_identity(opts, report) && all;
  if (want("fd")) all = suite_fd(opts, report) && all;
  if (want("kl")) all = suite_kl(opts, report) && all;
  return all;
}

}  // namespace sdvi
