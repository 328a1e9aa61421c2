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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "errors.hpp"
#include "synth.hpp"

using namespace sdvi;

namespace {

double residual_std(const ImageTensor& a, const ImageTensor& b) {
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i];
    s += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(a.size());
  return std::sqrt((s2 - s * s / n) / (n - 1));
}

double lag1_autocorr(const ImageTensor& r) {
  double mean = 0;
  for (double v : r.values()) mean += v;
  mean /= static_cast<double>(r.size());
  double num = 0, den = 0;
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x) {
      const double d = r.at(0, y, x) - mean;
      den += d * d;
      if (x + 1 < r.width()) num += d * (r.at(0, y, x + 1) - mean);
    }
  return num / den;
}

ImageTensor diff(const ImageTensor& a, const ImageTensor& b) {
  ImageTensor r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - a[i];
  return r;
}

double normal_logpdf(double x, double m, double v) {
  return -0.5 * std::log(2 * M_PI * v) - 0.5 * (x - m) * (x - m) / v;
}

double max_first_difference(const ImageTensor& s) {
  double worst = 0;
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x) {
      if (x + 1 < s.width()) worst = std::max(worst, std::abs(s.at(0, y, x + 1) - s.at(0, y, x)));
      if (y + 1 < s.height()) worst = std::max(worst, std::abs(s.at(0, y + 1, x) - s.at(0, y, x)));
    }
  return worst;
}

TEST_CASE("smooth-random first differences are bounded by the box width") {
  // A one-pixel shift of a 7x7 box swaps one 7-pixel column of uniforms, so
  // before renormalization a step is at most 7/49. Renormalization scales it
  // by 0.6 / (range of the blurred field).
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    std::mt19937_64 copy = rng;
    const ImageTensor s = gen_clean(SceneKind::kSmoothRandom, 32, 40, rng);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> noise(38 * 46);
    for (double& v : noise) v = uni(copy);
    double lo = 1e9, hi = -1e9;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 40; ++x) {
        double b = 0;
        for (int dy = 0; dy < 7; ++dy)
          for (int dx = 0; dx < 7; ++dx) b += noise[(y + dy) * 46 + x + dx];
        lo = std::min(lo, b / 49);
        hi = std::max(hi, b / 49);
      }
    CHECK(max_first_difference(s) <= 7.0 / 49.0 * 0.6 / (hi - lo) + 1e-12);
  }
}

TEST_CASE("smooth-random first differences stay below 0.2") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) CHECK(max_first_difference(gen_clean(SceneKind::kSmoothRandom, 64, 64, rng)) < 0.2);
}

}  // namespace

TEST_CASE("scene generators") {
  std::mt19937_64 rng(1);
  const ImageTensor c = gen_clean(SceneKind::kConstant, 8, 9, rng);
  for (double v : c.values()) CHECK(v == 0.5);

  const ImageTensor r = gen_clean(SceneKind::kRamp, 8, 8, rng);
  CHECK(r.at(0, 3, 0) == 0.0);
  CHECK(r.at(0, 3, 1) == doctest::Approx(1.0 / 7.0));
  CHECK(r.at(0, 3, 2) == doctest::Approx(2.0 / 7.0));
  CHECK(r.at(0, 3, 7) == 1.0);
  CHECK_THROWS_AS(gen_clean(SceneKind::kRamp, 8, 4, rng), ArgumentError);

  const ImageTensor ch = gen_clean(SceneKind::kChecker, 16, 16, rng);
  CHECK(ch.at(0, 0, 0) != ch.at(0, 0, 8));
  CHECK(ch.at(0, 0, 0) == ch.at(0, 7, 7));

  for (int t = 0; t < 20; ++t) {
    const ImageTensor s = gen_clean(SceneKind::kSmoothRandom, 32, 40, rng);
    CHECK(s.min() == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(s.max() == doctest::Approx(0.8).epsilon(1e-12));
  }
  CHECK(parse_scene_kind(scene_kind_name(SceneKind::kChecker)) == SceneKind::kChecker);
  CHECK_THROWS_AS(parse_scene_kind("stripes"), ArgumentError);
}

TEST_CASE("noise generators") {
  std::mt19937_64 rng(2);
  const ImageTensor x = gen_clean(SceneKind::kSmoothRandom, 256, 256, rng);
  CHECK(add_noise(x, NoiseModel::awgn(0.0), rng).raw() == x.raw());

  const ImageTensor y = add_noise(x, NoiseModel::awgn(0.1), rng);
  const double s = residual_std(x, y);
  CHECK(s >= 0.098);
  CHECK(s <= 0.102);
  CHECK(std::abs(lag1_autocorr(diff(x, y))) < 0.02);

  const ImageTensor yc = add_noise(x, NoiseModel::box_correlated(0.1, 3), rng);
  CHECK(lag1_autocorr(diff(x, yc)) > 0.3);
  CHECK(residual_std(x, yc) == doctest::Approx(0.1).epsilon(0.03));

  ImageTensor map(1, 256, 256);
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) map.at(0, r, c) = c < 128 ? 0.0001 : 0.04;
  const ImageTensor yn = add_noise(x, NoiseModel::non_iid(map), rng);
  double left = 0, right = 0;
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) {
      const double d = yn.at(0, r, c) - x.at(0, r, c);
      (c < 128 ? left : right) += d * d;
    }
  CHECK(left / (256 * 128) == doctest::Approx(0.0001).epsilon(0.05));
  CHECK(right / (256 * 128) == doctest::Approx(0.04).epsilon(0.05));

  const ImageTensor flat(1, 256, 256, 0.5);
  const ImageTensor ys = add_noise(flat, NoiseModel::signal_dependent(0.02, 0.001), rng);
  CHECK(residual_std(flat, ys) == doctest::Approx(std::sqrt(0.011)).epsilon(0.02));
  CHECK(noise_variance(flat, NoiseModel::signal_dependent(0.02, 0.001))[7] == doctest::Approx(0.011));

  // Unclamped: values leave [0, 1].
  const ImageTensor yb = add_noise(ImageTensor(1, 64, 64, 0.99), NoiseModel::awgn(0.2), rng);
  CHECK(yb.max() > 1.0);

  CHECK_THROWS_AS(add_noise(flat, NoiseModel::signal_dependent(-1.0, 0.1), rng), DomainError);
  ImageTensor neg(1, 256, 256, 0.01);
  neg[4] = -0.01;
  CHECK_THROWS_AS(add_noise(flat, NoiseModel::non_iid(neg), rng), DomainError);
  CHECK_THROWS(NoiseModel::correlated(0.1, {0.5, 0.4, 0.1, 0, 0, 0, 0, 0, 0.2}, 3).validate());
}

TEST_CASE("white noise residuals pass a Kolmogorov-Smirnov normality check") {
  std::mt19937_64 rng(3);
  const ImageTensor x(1, 100, 100, 0.5);
  const ImageTensor y = add_noise(x, NoiseModel::awgn(0.05), rng);
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - x[i];
  std::sort(r.begin(), r.end());
  const boost::math::normal_distribution<double> ref(0.0, 0.05);
  const double n = static_cast<double>(r.size());
  double d = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double f = boost::math::cdf(ref, r[i]);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  // Asymptotic critical value at significance 0.01.
  CHECK(d < 1.628 / std::sqrt(n));
}

TEST_CASE("noise model text round trip") {
  for (const NoiseModel& m : {NoiseModel::awgn(0.0392), NoiseModel::box_correlated(0.1, 3),
                              NoiseModel::signal_dependent(0.01, 0.0004),
                              NoiseModel::correlated(0.05, {0, 0.25, 0, 0.25, 0, 0.25, 0, 0.25, 0}, 3)}) {
    const NoiseModel back = NoiseModel::parse(m.to_string());
    CHECK(back.kind == m.kind);
    CHECK(back.sigma == m.sigma);
    CHECK(back.a == m.a);
    CHECK(back.b == m.b);
    CHECK(back.kernel == m.kernel);
    CHECK(back.kernel_size == m.kernel_size);
  }
  CHECK_THROWS(NoiseModel::parse("noise=pink sigma=1"));
}

TEST_CASE("exact Gaussian posterior") {
  const ImageTensor y(1, 1, 3, std::vector<double>{0.1, 0.5, 0.9});
  const ScenePrior p = ScenePrior::gauss(0.3, 0.02);
  auto [m0, v0] = exact_posterior_gauss(y, p, ImageTensor(1, 1, 3, 0.0));
  CHECK(m0.raw() == y.raw());
  for (double v : v0.values()) CHECK(v == 0.0);
  auto [m1, v1] = exact_posterior_gauss(y, p, ImageTensor(1, 1, 3, 0.02));
  for (int i = 0; i < 3; ++i) {
    CHECK(m1[i] == doctest::Approx((y[i] + 0.3) / 2));
    CHECK(v1[i] == doctest::Approx(0.01));
  }

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    const double s2 = 1e-4 + 0.1 * u(rng), nv = 1e-4 + 0.1 * u(rng);
    auto [m, v] = exact_posterior_gauss(ImageTensor(1, 1, 1, u(rng)), ScenePrior::gauss(u(rng), s2),
                                        ImageTensor(1, 1, 1, nv));
    CHECK(v[0] < std::min(s2, nv) + 1e-15);
    CHECK(v[0] > 0.0);
  }
}

TEST_CASE("exact posterior agrees with direct joint sampling") {
  // Draw x from the prior and y | x, then average x over draws whose y lands in
  // a narrow bin; compare against the conjugate mean at the bin centre.
  std::mt19937_64 rng(5);
  const double m = 0.4, s2 = 0.01, nv = 0.02, y0 = 0.55, half = 0.002;
  std::normal_distribution<double> px(m, std::sqrt(s2)), pn(0.0, std::sqrt(nv));
  double sum = 0, sum2 = 0;
  int n = 0;
  for (int i = 0; i < 4000000; ++i) {
    const double x = px(rng);
    const double y = x + pn(rng);
    if (std::abs(y - y0) < half) {
      sum += x;
      sum2 += x * x;
      ++n;
    }
  }
  REQUIRE(n > 1000);
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  auto [em, ev] = exact_posterior_gauss(ImageTensor(1, 1, 1, y0), ScenePrior::gauss(m, s2), ImageTensor(1, 1, 1, nv));
  // Bin width adds a bias of order (s2/(s2+nv)) * half^2 / 3, far below se.
  CHECK(std::abs(mean - em[0]) < 3 * se);
  CHECK(sum2 / n - mean * mean == doctest::Approx(ev[0]).epsilon(0.05));
}

TEST_CASE("denoiser-score identity on dense Gaussians") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  for (int dim : {4, 16}) {
    for (int t = 0; t < 20; ++t) {
      std::vector<double> m(dim), x(dim);
      for (int i = 0; i < dim; ++i) {
        m[i] = n(rng);
        x[i] = n(rng);
      }
      const auto P = random_spd(dim, rng), S = random_spd(dim, rng);
      const ScoreIdentityCheck r = verify_score_identity_dense(dim, m, P, S, x);
      CHECK(r.max_rel_discrepancy <= 1e-8);
      REQUIRE(r.rhs.size() == static_cast<std::size_t>(dim));
    }
  }
  // Diagonal case against the scalar formula.
  const int dim = 5;
  std::vector<double> P(dim * dim, 0.0), S(dim * dim, 0.0), m(dim), x(dim);
  for (int i = 0; i < dim; ++i) {
    P[i * dim + i] = 0.02 * (i + 1);
    S[i * dim + i] = 0.01;
    m[i] = 0.1 * i;
    x[i] = 0.3;
  }
  const ScoreIdentityCheck d = verify_score_identity_dense(dim, m, P, S, x);
  CHECK(d.max_rel_discrepancy <= 1e-10);
  for (int i = 0; i < dim; ++i) CHECK(d.lhs[i] == doctest::Approx(-(x[i] - m[i]) / (P[i * dim + i] + 0.01)).epsilon(1e-10));

  const ScoreIdentityCheck z = verify_score_identity_dense(dim, m, P, S, m);
  for (int i = 0; i < dim; ++i) {
    CHECK(z.lhs[i] == 0.0);
    CHECK(z.rhs[i] == 0.0);
  }
  std::vector<double> bad = P;
  bad[0] = -1.0;
  CHECK_THROWS_AS(verify_score_identity_dense(dim, m, bad, S, x), ArgumentError);
  std::vector<double> asym = P;
  asym[1] = 0.001;
  CHECK_THROWS_AS(verify_score_identity_dense(dim, m, asym, S, x), ArgumentError);
}

TEST_CASE("expected log prior by Monte Carlo") {
  std::mt19937_64 rng(7);
  const ImageTensor mu(1, 1, 1, 0.6), s2(1, 1, 1, 0.01);
  const McEstimate g = mc_expected_logp(mu, s2, ScenePrior::gauss(0.4, 0.03), 1000000, rng);
  const double closed = -0.5 * std::log(2 * M_PI * 0.04) - (0.04 + 0.01) / (2 * 0.04);
  CHECK(expected_logp_gauss(0.6, 0.01, 0.4, 0.03) == doctest::Approx(closed).epsilon(1e-14));
  CHECK(std::abs(g.mean - closed) < 3 * g.std_error);

  const ImageTensor tiny(1, 1, 1, 1e-12);
  const McEstimate dl = mc_expected_logp(mu, tiny, ScenePrior::gauss(0.4, 0.03), 100000, rng);
  const double logp = normal_logpdf(0.6, 0.4, 0.03);
  CHECK(std::abs(dl.mean - logp) < std::max(3 * dl.std_error, 1e-9));

  const GmmPrior gmm{{0.3, 0.7}, {0.2, 0.7}, {0.004, 0.01}};
  const McEstimate gm = mc_expected_logp(mu, s2, ScenePrior::mixture(gmm), 1000000, rng);
  // Midpoint quadrature of N(x; mu, s2) log p_s(x) with p_s the mixture widened by s2.
  double q = 0;
  const int n = 100000;
  const double lo = 0.6 - 12 * 0.1, h = 24 * 0.1 / n;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * h;
    const double ps = 0.3 * std::exp(normal_logpdf(x, 0.2, 0.014)) + 0.7 * std::exp(normal_logpdf(x, 0.7, 0.02));
    q += std::exp(normal_logpdf(x, 0.6, 0.01)) * std::log(ps) * h;
  }
  CHECK(std::abs(gm.mean - q) < 3 * gm.std_error);
}

TEST_CASE("synthesis is seeded and writes a parseable sidecar") {
  SynthRequest req;
  req.scene = SceneKind::kSmoothRandom;
  req.height = 32;
  req.width = 40;
  req.noise = NoiseModel::box_correlated(0.05, 3);
  req.prior_s2 = 0.01;
  req.seed = 17;
  const SynthOutput a = synthesize(req), b = synthesize(req);
  CHECK(a.noisy.raw() == b.noisy.raw());
  CHECK(a.clean.raw() == b.clean.raw());
  CHECK(a.clean.raw() != a.scene.raw());
  req.seed = 18;
  CHECK(synthesize(req).noisy.raw() != a.noisy.raw());

  const Sidecar sc = parse_sidecar(a.sidecar);
  REQUIRE(sc.noise.has_value());
  CHECK(sc.noise->kind == NoiseKind::kCorrelated);
  CHECK(sc.noise->sigma == 0.05);
  CHECK(sc.noise->kernel_size == 3);
  CHECK(sc.lines.count("scene") == 1);
  CHECK(sc.lines.at("size").find("32x40") != std::string::npos);
  CHECK(sc.lines.at("prior").find("s2=0.01") != std::string::npos);
}

TEST_CASE("mixture fit recovers well separated components") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> a(0.2, 0.02), b(0.7, 0.05);
  std::bernoulli_distribution pick(0.3);
  std::vector<double> v(50000);
  for (double& x : v) x = pick(rng) ? a(rng) : b(rng);
  const GmmPrior g = fit_gmm(v, 2);
  REQUIRE(g.weights.size() == 2);
  const int lo = g.means[0] < g.means[1] ? 0 : 1;
  CHECK(g.means[lo] == doctest::Approx(0.2).epsilon(0.02));
  CHECK(g.means[1 - lo] == doctest::Approx(0.7).epsilon(0.02));
  CHECK(g.weights[lo] == doctest::Approx(0.3).epsilon(0.05));
  CHECK(std::sqrt(g.vars[1 - lo]) == doctest::Approx(0.05).epsilon(0.05));
  CHECK(fit_gmm(v, 2).means == g.means);
  CHECK_THROWS_AS(fit_gmm({}, 2), ArgumentError);
}
