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

#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "external_denoiser.hpp"
#include "image_io.hpp"

namespace sdvi {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> try_number(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  std::size_t used = 0;
  try {
    const double v = std::stod(t, &used);
    if (used == t.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

double number(const std::string& key, const std::string& value) {
  const auto v = try_number(value);
  if (!v) throw ConfigError("key '" + key + "': expected a number, got '" + value + "'");
  return *v;
}

long long integer(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  long long v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + value + "'");
  }
  return v;
}

int small_int(const std::string& key, const std::string& value) {
  const long long v = integer(key, value);
  if (v < -1000000000LL || v > 1000000000LL) throw ConfigError("key '" + key + "': value out of range");
  return static_cast<int>(v);
}

std::uint64_t seed_value(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size()) {
    throw ConfigError("key '" + key + "': expected an unsigned 64-bit integer, got '" + value + "'");
  }
  return v;
}

bool boolean(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<double> list(const std::string& key, const std::string& value, char sep) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(number(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// "a=1,b=2" -> map. Values may not contain commas.
std::map<std::string, std::string> parse_params(const std::string& body, const std::string& what) {
  std::map<std::string, std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError(what + ": expected key=value, got '" + item + "'");
    out[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  return out;
}

const std::string& require_param(const std::map<std::string, std::string>& p, const std::string& key,
                                 const std::string& what) {
  const auto it = p.find(key);
  if (it == p.end()) throw ConfigError(what + ": missing parameter '" + key + "'");
  return it->second;
}

ImageTensor number_or_tensor(const std::string& value) {
  if (const auto v = try_number(value)) return ImageTensor(1, 1, 1, *v);
  return load_image(value);
}

std::vector<double> pixel_values(const ImageTensor& img) { return img.raw(); }

}  // namespace

std::vector<std::string> RunSpec::oracle_specs() const {
  if (oracle_by_k.empty()) {
    if (oracle.empty()) throw ConfigError("missing required key 'oracle'");
    return {oracle};
  }
  std::vector<std::string> out;
  for (int k = 1; k <= elbo.K; ++k) {
    const auto it = oracle_by_k.find(k);
    if (it != oracle_by_k.end()) {
      out.push_back(it->second);
    } else if (!oracle.empty()) {
      out.push_back(oracle);
    } else {
      throw ConfigError("missing oracle for component " + std::to_string(k) + " (key 'oracle." +
                        std::to_string(k) + "')");
    }
  }
  for (const auto& [k, s] : oracle_by_k)
    if (k < 1 || k > elbo.K) throw ConfigError("oracle." + std::to_string(k) + " is outside 1..K");
  return out;
}

void RunSpec::validate() const {
  elbo.validate();
  oracle_specs();
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint.empty()) throw ConfigError("checkpoint_every needs a checkpoint path");
}

double parse_beta(const std::string& value) {
  const std::string t = trim(value);
  if (t == "noisy") return 0.02;
  if (t == "medium") return 0.01;
  if (t == "low") return 0.005;
  const double v = number("beta", t);
  if (!(v > 0.0)) throw ConfigError("key 'beta': must be > 0");
  return v;
}

void apply_setting(RunSpec& s, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in), value = trim(value_in);
  ElboConfig& e = s.elbo;
  if (key == "K") {
    e.K = small_int(key, value);
  } else if (key == "M") {
    e.M = small_int(key, value);
  } else if (key == "T") {
    e.T = small_int(key, value);
  } else if (key == "lr") {
    e.lr = number(key, value);
  } else if (key == "alpha") {
    e.alpha = number(key, value);
  } else if (key == "beta") {
    e.beta = parse_beta(value);
  } else if (key == "d") {
    // Either separator: "1/2" matches the gmm lists, "1,2" reads naturally.
    std::string v = value;
    std::replace(v.begin(), v.end(), '/', ',');
    e.d = v.empty() ? std::vector<double>{} : list(key, v, ',');
  } else if (key == "l1") {
    e.l1 = number(key, value);
  } else if (key == "l2") {
    e.l2 = number(key, value);
  } else if (key == "gamma") {
    e.gamma = number(key, value);
  } else if (key == "sigma2_grad") {
    if (value == "chain") {
      e.sigma2_mode = Sigma2GradMode::kChainCorrected;
    } else if (value == "sigma") {
      e.sigma2_mode = Sigma2GradMode::kPerSigma;
    } else {
      throw ConfigError("key 'sigma2_grad': expected chain or sigma, got '" + value + "'");
    }
  } else if (key == "seed") {
    e.seed = seed_value(key, value);
  } else if (key == "backend") {
    if (value == "direct") {
      e.backend = BackendKind::kDirect;
    } else if (value == "conv") {
      e.backend = BackendKind::kConv;
    } else {
      throw ConfigError("key 'backend': expected direct or conv, got '" + value + "'");
    }
  } else if (key == "conv_width") {
    e.conv_width = small_int(key, value);
  } else if (key == "init") {
    if (value == "informed") {
      e.init = InitPolicy::kInformed;
    } else if (value == "zero") {
      e.init = InitPolicy::kZero;
    } else {
      throw ConfigError("key 'init': expected informed or zero, got '" + value + "'");
    }
  } else if (key == "delta") {
    if (value.empty() || value == "auto") {
      e.delta_override.reset();
    } else {
      e.delta_override = number(key, value);
    }
  } else if (key == "parallel_oracles") {
    e.parallel_oracles = boolean(key, value);
  } else if (key == "oracle") {
    s.oracle = value;
  } else if (key.rfind("oracle.", 0) == 0) {
    const int k = small_int(key, key.substr(7));
    if (k < 1) throw ConfigError("key '" + key + "': component index starts at 1");
    s.oracle_by_k[k] = value;
  } else if (key == "in") {
    s.in = value;
  } else if (key == "out") {
    s.out = value;
  } else if (key == "variance_out") {
    s.variance_out = value;
  } else if (key == "log") {
    s.log = value;
  } else if (key == "checkpoint") {
    s.checkpoint = value;
  } else if (key == "checkpoint_every") {
    s.checkpoint_every = small_int(key, value);
  } else if (key == "init_checkpoint") {
    s.init_checkpoint = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::string get_setting(const RunSpec& s, const std::string& key) {
  const ElboConfig& e = s.elbo;
  if (key == "K") return std::to_string(e.K);
  if (key == "M") return std::to_string(e.M);
  if (key == "T") return std::to_string(e.T);
  if (key == "lr") return fmt(e.lr);
  if (key == "alpha") return fmt(e.alpha);
  if (key == "beta") return fmt(e.beta);
  if (key == "d") {
    std::string out;
    for (std::size_t i = 0; i < e.d.size(); ++i) out += (i ? "," : "") + fmt(e.d[i]);
    return out;
  }
  if (key == "l1") return fmt(e.l1);
  if (key == "l2") return fmt(e.l2);
  if (key == "gamma") return fmt(e.gamma);
  if (key == "sigma2_grad") return e.sigma2_mode == Sigma2GradMode::kChainCorrected ? "chain" : "sigma";
  if (key == "seed") return std::to_string(e.seed);
  if (key == "backend") return e.backend == BackendKind::kDirect ? "direct" : "conv";
  if (key == "conv_width") return std::to_string(e.conv_width);
  if (key == "init") return e.init == InitPolicy::kInformed ? "informed" : "zero";
  if (key == "delta") return e.delta_override ? fmt(*e.delta_override) : "auto";
  if (key == "parallel_oracles") return e.parallel_oracles ? "true" : "false";
  if (key == "oracle") return s.oracle;
  if (key.rfind("oracle.", 0) == 0) {
    const auto it = s.oracle_by_k.find(small_int(key, key.substr(7)));
    return it == s.oracle_by_k.end() ? "" : it->second;
  }
  if (key == "in") return s.in;
  if (key == "out") return s.out;
  if (key == "variance_out") return s.variance_out;
  if (key == "log") return s.log;
  if (key == "checkpoint") return s.checkpoint;
  if (key == "checkpoint_every") return std::to_string(s.checkpoint_every);
  if (key == "init_checkpoint") return s.init_checkpoint;
  throw ConfigError("unknown config key '" + key + "'");
}

RunSpec parse_config_text(const std::string& text, const std::string& origin) {
  RunSpec spec;
  std::vector<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_setting(spec, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
    seen.push_back(key.rfind("oracle.", 0) == 0 ? "oracle" : key);
  }
  for (const auto& req : kRequiredConfigKeys) {
    if (std::find(seen.begin(), seen.end(), req) == seen.end()) {
      throw ConfigError(origin + ": missing required key '" + req + "'");
    }
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return spec;
}

RunSpec load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

namespace {

OraclePtr build_oracle_unchecked(const std::string& spec_in) {
  const std::string spec = trim(spec_in);
  const auto colon = spec.find(':');
  const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  const std::string body = colon == std::string::npos ? "" : spec.substr(colon + 1);
  const std::string what = "oracle '" + spec + "'";
  if (kind == "identity") return std::make_shared<IdentityOracle>();
  if (kind == "external") {
    if (trim(body).empty()) throw ConfigError(what + ": empty command template");
    return std::make_shared<ExternalOracle>(trim(body));
  }
  const auto p = parse_params(body, what);
  if (kind == "gauss") {
    return std::make_shared<GaussPriorOracle>(number_or_tensor(require_param(p, "m", what)),
                                              number_or_tensor(require_param(p, "s2", what)));
  }
  if (kind == "gmm") {
    if (p.count("fit")) {
      const int J = p.count("J") ? small_int("J", p.at("J")) : 3;
      return std::make_shared<GmmPriorOracle>(fit_gmm(pixel_values(load_image(p.at("fit"))), J));
    }
    GmmPrior g;
    g.weights = list("w", require_param(p, "w", what), '/');
    g.means = list("m", require_param(p, "m", what), '/');
    g.vars = list("s2", require_param(p, "s2", what), '/');
    return std::make_shared<GmmPriorOracle>(std::move(g));
  }
  throw ConfigError(what + ": unknown kind '" + kind + "' (expected identity, gauss, gmm or external)");
}

}  // namespace

OraclePtr build_oracle(const std::string& spec) {
  try {
    return build_oracle_unchecked(spec);
  } catch (const ArgumentError& e) {
    throw ConfigError("oracle '" + trim(spec) + "': " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError("oracle '" + trim(spec) + "': " + e.what());
  }
}

std::vector<OraclePtr> build_oracles(const RunSpec& spec) {
  std::vector<OraclePtr> out;
  for (const auto& s : spec.oracle_specs()) out.push_back(build_oracle(s));
  return out;
}

NoiseModel parse_noise_spec(const std::string& spec_in, int height, int width) {
  const std::string spec = trim(spec_in);
  const auto colon = spec.find(':');
  const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  const auto p = parse_params(colon == std::string::npos ? "" : spec.substr(colon + 1), "noise '" + spec + "'");
  const std::string what = "noise '" + spec + "'";
  NoiseModel m;
  if (kind == "awgn") {
    m = NoiseModel::awgn(number("sigma", require_param(p, "sigma", what)));
  } else if (kind == "correlated") {
    const int ks = p.count("ksize") ? small_int("ksize", p.at("ksize")) : 3;
    if (ks < 1 || ks % 2 == 0) throw ConfigError(what + ": ksize must be odd and positive");
    m = NoiseModel::box_correlated(number("sigma", require_param(p, "sigma", what)), ks);
  } else if (kind == "signal") {
    m = NoiseModel::signal_dependent(number("a", require_param(p, "a", what)),
                                     number("b", require_param(p, "b", what)));
  } else if (kind == "nonuniform") {
    const double lo = number("lo", require_param(p, "lo", what)), hi = number("hi", require_param(p, "hi", what));
    ImageTensor map(1, height, width);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) map.at(0, y, x) = lo + (hi - lo) * x / std::max(1, width - 1);
    m = NoiseModel::non_iid(std::move(map));
  } else {
    throw ConfigError(what + ": unknown kind '" + kind + "'");
  }
  m.validate();
  return m;
}

}  // namespace sdvi
