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

#include "image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include "errors.hpp"

namespace sdvi {
namespace {

constexpr std::array<char, 5> kMagic = {'S', 'D', 'V', 'I', '1'};
constexpr std::uint32_t kMaxDims = 8;

std::string lower_extension(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageTensor from_interleaved(const unsigned char* px, int channels, int height, int width) {
  ImageTensor img(channels, height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(c, y, x) = px[(static_cast<std::size_t>(y) * width + x) * channels + c] / 255.0;
  return img;
}

std::vector<unsigned char> to_interleaved(const ImageTensor& img) {
  const int C = img.channels(), H = img.height(), W = img.width();
  std::vector<unsigned char> px(static_cast<std::size_t>(C) * H * W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c)
        px[(static_cast<std::size_t>(y) * W + x) * C + c] = quantize_byte(img.at(c, y, x));
  return px;
}

ImageTensor load_png(const std::string& path, const std::vector<unsigned char>& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError("'" + path + "': " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw FormatError("'" + path + "': only 8-bit PNG is supported");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<unsigned char> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("'" + path + "': " + msg);
  }
  return from_interleaved(px.data(), channels, static_cast<int>(image.height),
                          static_cast<int>(image.width));
}

void save_png(const ImageTensor& img, const std::string& path) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ArgumentError("PNG output needs 1 or 3 channels, got " + img.shape_string());
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto px = to_interleaved(img);
  if (!png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr)) {
    throw IoError("cannot write '" + path + "': " + image.message);
  }
}

// Netpbm header token reader; skips whitespace and '#' comments.
bool next_token(const std::vector<unsigned char>& b, std::size_t& pos, std::string& tok) {
  tok.clear();
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(static_cast<char>(b[pos++]));
  return !tok.empty();
}

ImageTensor load_pnm(const std::string& path, const std::vector<unsigned char>& b) {
  std::size_t pos = 0;
  std::string magic, ws, hs, ms;
  if (!next_token(b, pos, magic) || !next_token(b, pos, ws) || !next_token(b, pos, hs) ||
      !next_token(b, pos, ms)) {
    throw FormatError("'" + path + "': truncated netpbm header");
  }
  const int channels = magic == "P6" ? 3 : 1;
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(ws);
    h = std::stoi(hs);
    maxval = std::stoi(ms);
  } catch (const std::exception&) {
    throw FormatError("'" + path + "': malformed netpbm header");
  }
  if (w <= 0 || h <= 0) throw FormatError("'" + path + "': bad netpbm dimensions");
  if (maxval != 255) {
    throw FormatError("'" + path + "': unsupported maxval " + ms + " (8-bit only)");
  }
  ++pos;  // single whitespace byte after maxval
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (b.size() < pos + need) throw FormatError("'" + path + "': truncated pixel data");
  return from_interleaved(b.data() + pos, channels, h, w);
}

void save_pnm(const ImageTensor& img, const std::string& path, bool color) {
  if (img.channels() != (color ? 3 : 1)) {
    throw ArgumentError(std::string(color ? "PPM" : "PGM") + " output channel mismatch for " +
                        img.shape_string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (color ? "P6\n" : "P5\n") << img.width() << ' ' << img.height() << "\n255\n";
  const auto px = to_interleaved(img);
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

void write_sdvi(std::ostream& os, std::span<const std::uint32_t> dims, std::span<const double> data) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  if (n != data.size()) throw ArgumentError("SDVI1 write: dims do not match data length");
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32(os, d);
  for (double v : data) put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

RawTensor read_sdvi(std::istream& is) {
  std::array<char, 5> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not an SDVI1 tensor (bad magic)");
  }
  RawTensor t;
  std::uint32_t ndim = 0;
  if (!get_u32(is, ndim) || ndim == 0 || ndim > kMaxDims) throw FormatError("SDVI1: bad ndim");
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    std::uint32_t d = 0;
    if (!get_u32(is, d) || d == 0) throw FormatError("SDVI1: bad dimension");
    t.dims.push_back(d);
    n *= d;
    if (n > (std::size_t{1} << 31)) throw FormatError("SDVI1: tensor too large");
  }
  t.data.resize(n);
  for (auto& v : t.data) {
    std::uint32_t bits = 0;
    if (!get_u32(is, bits)) throw FormatError("SDVI1: truncated data");
    v = std::bit_cast<float>(bits);
  }
  return t;
}

void write_tensor(const std::string& path, const ImageTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::array<std::uint32_t, 3> dims = {static_cast<std::uint32_t>(t.channels()),
                                             static_cast<std::uint32_t>(t.height()),
                                             static_cast<std::uint32_t>(t.width())};
  write_sdvi(out, dims, t.values());
  if (!out) throw IoError("write failed for '" + path + "'");
}

ImageTensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  RawTensor raw;
  try {
    raw = read_sdvi(in);
  } catch (const FormatError& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  int c = 1, h = 0, w = 0;
  if (raw.dims.size() == 2) {
    h = static_cast<int>(raw.dims[0]);
    w = static_cast<int>(raw.dims[1]);
  } else if (raw.dims.size() == 3) {
    c = static_cast<int>(raw.dims[0]);
    h = static_cast<int>(raw.dims[1]);
    w = static_cast<int>(raw.dims[2]);
  } else {
    throw FormatError("'" + path + "': expected a 2-D or 3-D tensor");
  }
  return ImageTensor(c, h, w, std::vector<double>(raw.data.begin(), raw.data.end()));
}

ImageTensor load_image(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return load_png(path, bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return load_pnm(path, bytes);
  }
  if (bytes.size() >= 5 && std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    return read_tensor(path);
  }
  throw FormatError("'" + path + "': unsupported image format");
}

void save_image(const ImageTensor& img, const std::string& path) {
  if (!img.all_finite()) throw ArgumentError("save_image: non-finite pixel values");
  const std::string ext = lower_extension(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".pgm") return save_pnm(img, path, false);
  if (ext == ".ppm") return save_pnm(img, path, true);
  if (ext == ".sdvi") return write_tensor(path, img);
  throw ArgumentError("save_image: unknown extension for '" + path + "'");
}

}  // namespace sdvi
