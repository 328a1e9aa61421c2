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

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "denoiser.hpp"
#include "errors.hpp"
#include "external_denoiser.hpp"
#include "test_util.hpp"

using namespace sdvi;
using sdvi_test::TempDir;

namespace {

ImageTensor filled(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return ImageTensor(1, 1, n, std::move(v));
}

double normal_logpdf(double x, double m, double v) {
  return -0.5 * std::log(2 * M_PI * v) - 0.5 * (x - m) * (x - m) / v;
}

// Posterior mean of x given x_noisy by midpoint quadrature over a wide grid.
double gmm_posterior_mean_quadrature(const GmmPrior& g, double noisy, double nv) {
  double lo = noisy - 12 * std::sqrt(nv), hi = noisy + 12 * std::sqrt(nv);
  for (std::size_t j = 0; j < g.means.size(); ++j) {
    lo = std::min(lo, g.means[j] - 12 * std::sqrt(g.vars[j]));
    hi = std::max(hi, g.means[j] + 12 * std::sqrt(g.vars[j]));
  }
  const int n = 100000;
  const double h = (hi - lo) / n;
  double z = 0, m1 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * h;
    double prior = 0;
    for (std::size_t j = 0; j < g.means.size(); ++j)
      prior += g.weights[j] * std::exp(normal_logpdf(x, g.means[j], g.vars[j]));
    const double p = prior * std::exp(normal_logpdf(noisy, x, nv));
    z += p;
    m1 += x * p;
  }
  return m1 / z;
}

double gmm_smoothed_log_density(const GmmPrior& g, double x, double nv) {
  double p = 0;
  for (std::size_t j = 0; j < g.means.size(); ++j)
    p += g.weights[j] * std::exp(normal_logpdf(x, g.means[j], g.vars[j] + nv));
  return std::log(p);
}

GmmPrior random_gmm(std::mt19937_64& rng, int J) {
  std::uniform_real_distribution<double> u(0, 1);
  GmmPrior g;
  double s = 0;
  for (int j = 0; j < J; ++j) {
    g.weights.push_back(0.1 + u(rng));
    s += g.weights.back();
    g.means.push_back(u(rng));
    g.vars.push_back(0.001 + 0.02 * u(rng));
  }
  for (double& w : g.weights) w /= s;
  return g;
}

// Records the variance it is called with and returns the input unchanged.
class RecordingOracle final : public DenoiserOracle {
 public:
  explicit RecordingOracle(ValidityRange r) : range_(r) {}
  ImageTensor denoise(const ImageTensor& noisy, const ImageTensor& nv) const override {
    seen = nv;
    ImageTensor out = noisy;
    for (auto& v : out.raw()) v += 1.0;
    return out;
  }
  std::optional<ValidityRange> validity_range() const override { return range_; }
  std::string describe() const override { return "recording"; }
  mutable ImageTensor seen;

 private:
  ValidityRange range_;
};

}  // namespace

TEST_CASE("gauss prior denoiser examples") {
  const GaussPriorOracle o(0.5, 0.01);
  const ImageTensor x = filled({0.7, 0.1, 0.9});
  const ImageTensor zero = ImageTensor(1, 1, 3, 0.0);
  CHECK(o.denoise(x, zero).raw() == x.raw());
  CHECK(o.denoise(filled({0.7}), filled({0.01}))[0] == doctest::Approx(0.6).epsilon(1e-14));
  const GaussPriorOracle flat(0.5, 1e9);
  const ImageTensor out = flat.denoise(x, ImageTensor(1, 1, 3, 0.01));
  for (int i = 0; i < 3; ++i) CHECK(std::abs(out[i] - x[i]) < 1e-6);
  CHECK_THROWS_AS(o.denoise(x, filled({0.1})), ArgumentError);
  CHECK_THROWS_AS(GaussPriorOracle(0.5, 0.0), DomainError);
}

TEST_CASE("gauss prior score matches the smoothed-prior closed form") {
  const GaussPriorOracle o(0.5, 0.01);
  CHECK(score_from_denoiser(filled({0.7}), filled({0.01}), o)[0] == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(score_from_denoiser(filled({0.5}), filled({0.03}), o)[0] == 0.0);
  CHECK_THROWS_AS(score_from_denoiser(filled({0.5}), filled({0.0}), o), DomainError);

  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 500; ++t) {
    const double m = u(rng), s2 = 1e-4 + 0.1 * u(rng), nv = 1e-4 + 0.1 * u(rng), x = 2 * u(rng) - 0.5;
    const GaussPriorOracle g(m, s2);
    const double s = score_from_denoiser(filled({x}), filled({nv}), g)[0];
    CHECK(s == doctest::Approx(-(x - m) / (s2 + nv)).epsilon(1e-10));
    const double d = g.denoise(filled({x}), filled({nv}))[0];
    CHECK(std::abs(d - m) <= std::abs(x - m) + 1e-15);
  }
}

TEST_CASE("per-pixel gauss prior maps") {
  const GaussPriorOracle o(filled({0.0, 1.0}), filled({1.0, 3.0}));
  const ImageTensor out = o.denoise(filled({1.0, 0.0}), filled({1.0, 1.0}));
  CHECK(out[0] == doctest::Approx(0.5));
  CHECK(out[1] == doctest::Approx(0.25));
}

TEST_CASE("gmm denoiser reduces to gauss with one component and is symmetric") {
  const GmmPriorOracle one(GmmPrior{{1.0}, {0.4}, {0.02}});
  const GaussPriorOracle g(0.4, 0.02);
  const ImageTensor x = filled({0.0, 0.3, 0.9});
  const ImageTensor nv = filled({0.01, 0.002, 0.05});
  const ImageTensor a = one.denoise(x, nv), b = g.denoise(x, nv);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));

  const GmmPriorOracle sym(GmmPrior{{0.5, 0.5}, {-0.3, 0.3}, {0.01, 0.01}});
  CHECK(std::abs(sym.denoise(filled({0.0}), filled({0.02}))[0]) < 1e-15);
}

TEST_CASE("gmm posterior mean agrees with quadrature") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    const GmmPrior g = random_gmm(rng, 1 + t % 4);
    const GmmPriorOracle o(g);
    const double x = 1.4 * u(rng) - 0.2, nv = 1e-4 + 0.03 * u(rng);
    CHECK(std::abs(o.denoise(filled({x}), filled({nv}))[0] - gmm_posterior_mean_quadrature(g, x, nv)) < 1e-6);
  }
}

TEST_CASE("gmm score agrees with a finite difference of the smoothed log density") {
  std::mt19937_64 rng(23);
  const GmmPrior g = random_gmm(rng, 3);
  const GmmPriorOracle o(g);
  const double nv = 0.004;
  for (int i = 0; i <= 40; ++i) {
    const double x = -0.2 + 1.4 * i / 40.0;
    const double h = 1e-5;
    const double fd = (gmm_smoothed_log_density(g, x + h, nv) - gmm_smoothed_log_density(g, x - h, nv)) / (2 * h);
    const double s = score_from_denoiser(filled({x}), filled({nv}), o)[0];
    CHECK(std::abs(s - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("gmm evaluation survives far tails") {
  const GmmPriorOracle o(GmmPrior{{0.3, 0.7}, {0.0, 1.0}, {1e-6, 1e-6}});
  const ImageTensor out = o.denoise(filled({50.0, -50.0}), filled({1e-6, 1e-6}));
  CHECK(std::isfinite(out[0]));
  CHECK(std::isfinite(out[1]));
  CHECK(out[0] == doctest::Approx(25.5).epsilon(1e-9));
  CHECK_THROWS_AS(GmmPriorOracle(GmmPrior{{0.5, 0.6}, {0, 1}, {1, 1}}), DomainError);
  CHECK_THROWS_AS(GmmPriorOracle(GmmPrior{{1.0}, {0}, {0}}), DomainError);
}

TEST_CASE("identity oracle contributes zero score") {
  const IdentityOracle id;
  const ImageTensor s = score_from_denoiser(filled({0.1, 0.9}), filled({0.01, 0.02}), id);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 0.0);
}

TEST_CASE("score clamps the noise level into the declared validity range") {
  const RecordingOracle o({0.1, 0.2});
  const ImageTensor s = score_from_denoiser(filled({0.0, 0.0, 0.0}), filled({1e-4, 0.0225, 1.0}), o);
  CHECK(o.seen[0] == doctest::Approx(0.01));
  CHECK(o.seen[1] == doctest::Approx(0.0225));
  CHECK(o.seen[2] == doctest::Approx(0.04));
  // Division uses the clamped variance as well.
  CHECK(s[0] == doctest::Approx(100.0));
  CHECK(s[2] == doctest::Approx(25.0));
}

TEST_CASE("external denoiser protocol") {
  const ImageTensor x = filled({0.25, 0.5, 0.75});
  const ImageTensor nv = filled({0.01, 0.01, 0.01});
  const ImageTensor same = external_denoise(x, nv, "cp {in} {out}");
  for (int i = 0; i < 3; ++i) CHECK(same[i] == static_cast<double>(static_cast<float>(x[i])));

  TempDir dir;
  const std::string script = dir.file("gauss.py");
  sdvi_test::write_text(script,
                        "import struct, sys\n"
                        "def rd(p):\n"
                        "    b = open(p, 'rb').read()\n"
                        "    n = struct.unpack_from('<I', b, 5)[0]\n"
                        "    dims = struct.unpack_from('<%dI' % n, b, 9)\n"
                        "    cnt = 1\n"
                        "    for d in dims: cnt *= d\n"
                        "    return dims, struct.unpack_from('<%df' % cnt, b, 9 + 4 * n)\n"
                        "dims, x = rd(sys.argv[1])\n"
                        "_, v = rd(sys.argv[2])\n"
                        "m, s2 = 0.5, 0.01\n"
                        "y = [(s2 * a + b * m) / (s2 + b) for a, b in zip(x, v)]\n"
                        "out = b'SDVI1' + struct.pack('<I', len(dims)) + struct.pack('<%dI' % len(dims), *dims)\n"
                        "out += struct.pack('<%df' % len(y), *y)\n"
                        "open(sys.argv[3], 'wb').write(out)\n");
  const ImageTensor ext = external_denoise(x, nv, "python3 " + script + " {in} {nv} {out}");
  const ImageTensor ref = GaussPriorOracle(0.5, 0.01).denoise(x, nv);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(ext[i] - ref[i]) < 1e-6);
}

TEST_CASE("external denoiser failures become oracle errors") {
  const ImageTensor x = filled({0.5});
  const ImageTensor nv = filled({0.01});
  try {
    external_denoise(x, nv, "echo boom >&2; exit 1 # {in} {out}");
    FAIL("expected an oracle error");
  } catch (const OracleError& e) {
    CHECK(std::string(e.what()).find("status 1") != std::string::npos);
  }
  CHECK_THROWS_AS(external_denoise(x, nv, "echo junk > {out} # {in}"), OracleError);
  CHECK_THROWS_AS(external_denoise(x, nv, "true {in} {out}"), OracleError);
  CHECK_THROWS_AS(external_denoise(x, nv, "cp in out"), ArgumentError);
  const auto t0 = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(external_denoise(x, nv, "sleep 10 # {in} {out}", std::chrono::milliseconds(300)), OracleError);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));

  // Wrong output shape is rejected.
  TempDir dir;
  sdvi_test::write_bytes(dir.file("two.sdvi"), {'S', 'D', 'V', 'I', '1', 3, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0,
                                               0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(external_denoise(x, nv, "cp " + dir.file("two.sdvi") + " {out} # {in}"), OracleError);
}

TEST_CASE("external oracle defaults") {
  const ExternalOracle o("cp {in} {out}");
  REQUIRE(o.validity_range().has_value());
  CHECK(o.validity_range()->sigma_min == doctest::Approx(1.0 / 255.0));
  CHECK(o.validity_range()->sigma_max == doctest::Approx(100.0 / 255.0));
  CHECK_FALSE(o.concurrent_safe());
}
