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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "denoiser.hpp"
#include "elbo.hpp"
#include "synth.hpp"

namespace sdvi {

// Everything a denoise run needs besides the input pixels. Text form is
// "key = value" lines with '#' comments; see apply_setting for the keys.
struct RunSpec {
  ElboConfig elbo;
  std::string oracle;                      // broadcast spec
  std::map<int, std::string> oracle_by_k;  // "oracle.k" (1-based)
  std::string in;
  std::string out;
  std::string variance_out;
  std::string log;
  std::string checkpoint;
  int checkpoint_every = 0;
  std::string init_checkpoint;

  // One spec per component, or a single broadcast spec.
  std::vector<std::string> oracle_specs() const;
  void validate() const;
};

// Keys that must appear in a config file.
inline const std::vector<std::string> kRequiredConfigKeys = {"K", "M", "T", "oracle"};

// Throws ConfigError for unknown keys or malformed values.
void apply_setting(RunSpec& spec, const std::string& key, const std::string& value);
// Current value of a key as text (same spelling apply_setting accepts).
std::string get_setting(const RunSpec& spec, const std::string& key);

// Parses "key = value" text. Every key in kRequiredConfigKeys must be present
// ("oracle.1" satisfies "oracle").
RunSpec parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunSpec load_config_file(const std::string& path);

// noisy=0.02, medium=0.01, low=0.005, or a positive number.
double parse_beta(const std::string& value);

// Oracle specs:
//   identity
//   gauss:m=<num|tensor path>,s2=<num|tensor path>
//   gmm:w=a/b/...,m=a/b/...,s2=a/b/...
//   gmm:fit=<image path>,J=<count>
//   external:<command template with {in} {out} {nv}>
OraclePtr build_oracle(const std::string& spec);
std::vector<OraclePtr> build_oracles(const RunSpec& spec);

// Noise specs for synthesis:
//   awgn:sigma=s | correlated:sigma=s,ksize=n | signal:a=a,b=b | nonuniform:lo=a,hi=b
// (nonuniform draws a horizontal variance ramp from lo to hi.)
NoiseModel parse_noise_spec(const std::string& spec, int height, int width);

}  // namespace sdvi
