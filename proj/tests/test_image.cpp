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

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include <png.h>

#include "errors.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "pd.hpp"
#include "tensor.hpp"
#include "test_util.hpp"

using namespace sdvi;
using sdvi_test::TempDir;

namespace {

ImageTensor random_image(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageTensor t(c, h, w);
  for (auto& v : t.raw()) v = u(rng);
  return t;
}

ImageTensor checkerboard(int h, int w, int period) {
  ImageTensor t(1, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) t.at(0, y, x) = ((y / (period / 2) + x / (period / 2)) % 2) ? 1.0 : 0.0;
  return t;
}

}  // namespace

TEST_CASE("tensor construction checks dimensions and data length") {
  CHECK_THROWS_AS(ImageTensor(0, 2, 2), ArgumentError);
  CHECK_THROWS_AS(ImageTensor(1, 2, 2, std::vector<double>(3)), ArgumentError);
  ImageTensor t(2, 3, 4, 0.25);
  CHECK(t.size() == 24);
  t.at(1, 2, 3) = 7.0;
  CHECK(t[23] == 7.0);
  CHECK(t.shape_string() == "2x3x4");
}

TEST_CASE("load scales 8-bit values to the unit interval") {
  TempDir dir;
  sdvi_test::write_pgm(dir.file("ones.pgm"), 2, 2, {255, 255, 255, 255});
  const ImageTensor ones = load_image(dir.file("ones.pgm"));
  REQUIRE(ones.channels() == 1);
  REQUIRE(ones.height() == 2);
  for (double v : ones.values()) CHECK(v == 1.0);

  sdvi_test::write_pgm(dir.file("mixed.pgm"), 1, 2, {0, 51});
  const ImageTensor m = load_image(dir.file("mixed.pgm"));
  CHECK(m[0] == 0.0);
  CHECK(std::abs(m[1] - 0.2) < 1e-6);
}

TEST_CASE("load reports missing files and unsupported depth") {
  TempDir dir;
  CHECK_THROWS_AS(load_image(dir.file("absent.png")), IoError);

  const std::string deep = "P5\n2 1\n65535\n";
  std::vector<unsigned char> b(deep.begin(), deep.end());
  b.insert(b.end(), {0, 1, 0, 2});
  sdvi_test::write_bytes(dir.file("deep.pgm"), b);
  CHECK_THROWS_AS(load_image(dir.file("deep.pgm")), FormatError);

  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = 2;
  img.height = 2;
  img.format = PNG_FORMAT_LINEAR_Y;
  const std::uint16_t px[4] = {0, 1000, 30000, 65535};
  REQUIRE(png_image_write_to_file(&img, dir.file("deep.png").c_str(), 0, px, 0, nullptr));
  CHECK_THROWS_AS(load_image(dir.file("deep.png")), FormatError);

  sdvi_test::write_text(dir.file("junk.png"), "not an image");
  CHECK_THROWS_AS(load_image(dir.file("junk.png")), FormatError);
}

TEST_CASE("save clamps and rounds to bytes") {
  TempDir dir;
  ImageTensor t(1, 1, 3, std::vector<double>{0.5, 1.2, -0.1});
  save_image(t, dir.file("q.pgm"));
  const auto bytes = sdvi_test::read_bytes(dir.file("q.pgm"));
  REQUIRE(bytes.size() >= 3);
  CHECK(bytes[bytes.size() - 3] == 128);
  CHECK(bytes[bytes.size() - 2] == 255);
  CHECK(bytes[bytes.size() - 1] == 0);
  const ImageTensor back = load_image(dir.file("q.pgm"));
  CHECK(back[0] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));

  ImageTensor bad(1, 1, 1, std::vector<double>{std::nan("")});
  CHECK_THROWS_AS(save_image(bad, dir.file("bad.png")), ArgumentError);
  CHECK_THROWS_AS(save_image(t, dir.file("t.bmp")), ArgumentError);
  CHECK_THROWS_AS(save_image(t, dir.file("no_such_dir/t.png")), IoError);
}

TEST_CASE("png and pgm round trips stay within half a quantization step") {
  TempDir dir;
  for (const char* ext : {".png", ".pgm"}) {
    const ImageTensor x = random_image(1, 17, 23, 5);
    const std::string p = dir.file(std::string("rt") + ext);
    save_image(x, p);
    const ImageTensor y = load_image(p);
    REQUIRE(y.same_shape(x));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) <= 1.0 / 510.0 + 1e-12);
  }
  const ImageTensor rgb = random_image(3, 9, 6, 6);
  for (const char* ext : {".png", ".ppm"}) {
    const std::string p = dir.file(std::string("rgb") + ext);
    save_image(rgb, p);
    const ImageTensor y = load_image(p);
    REQUIRE(y.same_shape(rgb));
    for (std::size_t i = 0; i < rgb.size(); ++i) CHECK(std::abs(y[i] - rgb[i]) <= 1.0 / 510.0 + 1e-12);
  }
}

TEST_CASE("SDVI1 byte layout") {
  ImageTensor t(1, 1, 2, std::vector<double>{1.0, -2.5});
  std::ostringstream os;
  const std::uint32_t dims[] = {1, 1, 2};
  write_sdvi(os, dims, t.values());
  const std::string s = os.str();
  REQUIRE(s.size() == 5 + 4 + 12 + 8);
  CHECK(s.substr(0, 5) == "SDVI1");
  CHECK(static_cast<unsigned char>(s[5]) == 3);
  CHECK(s[6] == 0);
  CHECK(static_cast<unsigned char>(s[17]) == 2);
  // 1.0f is 0x3f800000, little endian.
  CHECK(static_cast<unsigned char>(s[21]) == 0x00);
  CHECK(static_cast<unsigned char>(s[23]) == 0x80);
  CHECK(static_cast<unsigned char>(s[24]) == 0x3f);

  std::istringstream is(s);
  const RawTensor r = read_sdvi(is);
  CHECK(r.dims == std::vector<std::uint32_t>{1, 1, 2});
  CHECK(r.data[1] == -2.5f);

  std::istringstream bad("SDVJ1xxxx");
  CHECK_THROWS_AS(read_sdvi(bad), FormatError);
  std::istringstream cut(s.substr(0, s.size() - 2));
  CHECK_THROWS_AS(read_sdvi(cut), FormatError);

  TempDir dir;
  const ImageTensor x = random_image(2, 4, 5, 9);
  write_tensor(dir.file("x.sdvi"), x);
  const ImageTensor y = read_tensor(dir.file("x.sdvi"));
  REQUIRE(y.same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == static_cast<double>(static_cast<float>(x[i])));
}

TEST_CASE("pd_down examples") {
  const ImageTensor x = random_image(1, 6, 7, 1);
  const SubImageGrid g1 = pd_down(x, 1);
  REQUIRE(g1.subs.size() == 1);
  CHECK(g1.subs[0].raw() == x.raw());

  const SubImageGrid g2 = pd_down(checkerboard(4, 4, 2), 2);
  REQUIRE(g2.subs.size() == 4);
  for (const auto& s : g2.subs) {
    CHECK(s.height() == 2);
    CHECK(s.min() == s.max());
  }
  CHECK(g2.subs[0][0] == 0.0);
  CHECK(g2.subs[1][0] == 1.0);

  ImageTensor ramp(1, 5, 5);
  for (int i = 0; i < 25; ++i) ramp[i] = i;
  const SubImageGrid g = pd_down(ramp, 2);
  REQUIRE(g.subs.size() == 4);
  CHECK(g.subs[0].raw() == std::vector<double>{0, 2, 10, 12});
  CHECK(g.subs[1].raw() == std::vector<double>{1, 3, 11, 13});
  CHECK(g.subs[2].raw() == std::vector<double>{5, 7, 15, 17});
  CHECK(g.subs[3].raw() == std::vector<double>{6, 8, 16, 18});

  CHECK_THROWS_AS(pd_down(ramp, 6), ArgumentError);
  CHECK_THROWS_AS(pd_down(ramp, 0), ArgumentError);
}

TEST_CASE("pd reassembly restores the divisible crop for strides 1..8") {
  for (int s = 1; s <= 8; ++s) {
    const ImageTensor x = random_image(2, 19 + s, 13 + 2 * s, 100 + s);
    const ImageTensor back = pd_up(pd_down(x, s));
    const int h = x.height() / s * s;
    const int w = x.width() / s * s;
    REQUIRE(back.height() == h);
    REQUIRE(back.width() == w);
    for (int c = 0; c < 2; ++c)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) REQUIRE(back.at(c, y, xx) == x.at(c, y, xx));
  }
}

TEST_CASE("psnr examples") {
  const ImageTensor a = random_image(1, 8, 8, 2);
  CHECK(psnr(a, a) == kPsnrCapDb);
  ImageTensor b = a;
  for (auto& v : b.raw()) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  ImageTensor c = a;
  for (auto& v : c.raw()) v -= 0.01;
  CHECK(psnr(a, c) == doctest::Approx(40.0).epsilon(1e-12));
  const ImageTensor d = random_image(1, 8, 8, 3);
  CHECK(psnr(a, d) == psnr(d, a));
  CHECK_THROWS_AS(psnr(a, random_image(1, 8, 9, 1)), ArgumentError);
}

TEST_CASE("ssim examples") {
  const ImageTensor a = random_image(1, 24, 20, 4);
  CHECK(std::abs(ssim(a, a) - 1.0) < 1e-9);

  const ImageTensor cb = checkerboard(16, 16, 2);
  ImageTensor inv = cb;
  for (auto& v : inv.raw()) v = 1.0 - v;
  CHECK(ssim(cb, inv) < 0.0);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1e-4);
  ImageTensor noisy = a;
  for (auto& v : noisy.raw()) v += n(rng);
  CHECK(ssim(a, noisy) > 0.999);

  const ImageTensor b = random_image(1, 24, 20, 5);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
  CHECK_THROWS_AS(ssim(random_image(1, 10, 20, 1), random_image(1, 10, 20, 2)), ArgumentError);
}

TEST_CASE("ssim of two flat images reduces to the luminance term") {
  // Zero variance leaves (2 m1 m2 + C1) / (m1^2 + m2^2 + C1).
  const double m1 = 0.3, m2 = 0.7, c1 = 1e-4;
  const double expected = (2 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
  CHECK(ssim(ImageTensor(1, 12, 12, m1), ImageTensor(1, 12, 12, m2)) ==
        doctest::Approx(expected).epsilon(1e-12));
}
