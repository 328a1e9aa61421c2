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

#include "adam.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"

namespace sdvi {

namespace {

// Checkpoint blocks keep full double precision (SDVI1 is float32):
// u32 LE ndim, ndim u32 LE dims, then f64 LE values.
void write_block(std::ostream& os, const nn::Parameter& p) {
  auto put_u32 = [&](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(static_cast<std::uint32_t>(p.dims.size()));
  for (std::uint32_t d : p.dims) put_u32(d);
  for (double v : p.value) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
}

std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char b[8] = {};
  if (!is.read(reinterpret_cast<char*>(b), bytes)) throw FormatError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void AdamState::step(const std::vector<nn::Parameter*>& params) {
  if (m_.empty()) {
    for (const nn::Parameter* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  if (params.size() != m_.size()) throw ArgumentError("adam_step: parameter count changed");
  for (std::size_t j = 0; j < params.size(); ++j) {
    if (params[j]->value.size() != m_[j].size() || params[j]->grad.size() != m_[j].size()) {
      throw ArgumentError("adam_step: shape mismatch for " + params[j]->name);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t j = 0; j < params.size(); ++j) {
    auto& val = params[j]->value;
    const auto& g = params[j]->grad;
    auto& m = m_[j];
    auto& v = v_[j];
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      val[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

void save_checkpoint(const std::string& path, const std::vector<nn::Parameter*>& params) {
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint '" + path + "' for writing");
  std::ostringstream manifest;
  for (const nn::Parameter* p : params) {
    const auto offset = static_cast<long long>(bin.tellp());
    write_block(bin, *p);
    manifest << p->name << ' ';
    for (std::size_t d = 0; d < p->dims.size(); ++d) manifest << (d ? "x" : "") << p->dims[d];
    manifest << ' ' << offset << '\n';
  }
  if (!bin) throw IoError("write failed for checkpoint '" + path + "'");
  std::ofstream mf(path + ".manifest");
  if (!mf) throw IoError("cannot write manifest for '" + path + "'");
  mf << manifest.str();
}

void load_checkpoint(const std::string& path, const std::vector<nn::Parameter*>& params) {
  std::ifstream mf(path + ".manifest");
  if (!mf) throw IoError("cannot open manifest '" + path + ".manifest'");
  std::map<std::string, long long> offsets;
  std::string line;
  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, shape;
    long long off = -1;
    if (!(ls >> name >> shape >> off) || off < 0) throw FormatError("malformed manifest line: " + line);
    offsets[name] = off;
  }
  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint '" + path + "'");
  for (nn::Parameter* p : params) {
    const auto it = offsets.find(p->name);
    if (it == offsets.end()) throw FormatError("checkpoint lacks parameter " + p->name);
    bin.seekg(it->second);
    const auto ndim = get_le(bin, 4);
    if (ndim != p->dims.size()) throw FormatError("checkpoint shape mismatch for " + p->name);
    for (std::uint32_t d : p->dims) {
      if (get_le(bin, 4) != d) throw FormatError("checkpoint shape mismatch for " + p->name);
    }
    for (double& v : p->value) {
      const std::uint64_t bits = get_le(bin, 8);
      std::memcpy(&v, &bits, 8);
    }
  }
}

}  // namespace sdvi
