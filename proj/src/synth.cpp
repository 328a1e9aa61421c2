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

#include "synth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace sdvi {
namespace {

constexpr double kKernelSumTol = 1e-9;

double at_or_broadcast(const ImageTensor& t, std::size_t i) { return t.size() == 1 ? t[0] : t[i]; }

std::vector<double> parse_list(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw FormatError("bad number '" + item + "'");
    }
    if (used != item.size()) throw FormatError("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string join(const std::vector<double>& v, char sep) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << sep;
    os << v[i];
  }
  return os.str();
}

Eigen::MatrixXd to_matrix(int dim, const std::vector<double>& v, const char* what) {
  if (v.size() != static_cast<std::size_t>(dim) * dim) {
    throw ArgumentError(std::string("verify_score_identity_dense: ") + what + " must be dim x dim");
  }
  Eigen::MatrixXd M(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) M(r, c) = v[static_cast<std::size_t>(r) * dim + c];
  return M;
}

void require_spd(const Eigen::MatrixXd& M, const char* what) {
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ArgumentError(std::string("verify_score_identity_dense: ") + what + " is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw ArgumentError(std::string("verify_score_identity_dense: ") + what + " is not positive definite");
  }
}

}  // namespace

NoiseModel NoiseModel::awgn(double sigma) {
  NoiseModel m;
  m.kind = NoiseKind::kAwgn;
  m.sigma = sigma;
  return m;
}

NoiseModel NoiseModel::non_iid(ImageTensor variance_map) {
  NoiseModel m;
  m.kind = NoiseKind::kNonIid;
  m.variance_map = std::move(variance_map);
  return m;
}

NoiseModel NoiseModel::correlated(double sigma, std::vector<double> kernel, int kernel_size) {
  NoiseModel m;
  m.kind = NoiseKind::kCorrelated;
  m.sigma = sigma;
  m.kernel = std::move(kernel);
  m.kernel_size = kernel_size;
  return m;
}

NoiseModel NoiseModel::box_correlated(double sigma, int kernel_size) {
  const std::size_t n = static_cast<std::size_t>(kernel_size) * kernel_size;
  return correlated(sigma, std::vector<double>(n, 1.0 / static_cast<double>(n)), kernel_size);
}

NoiseModel NoiseModel::signal_dependent(double a, double b) {
  NoiseModel m;
  m.kind = NoiseKind::kSignalDependent;
  m.a = a;
  m.b = b;
  return m;
}

void NoiseModel::validate() const {
  switch (kind) {
    case NoiseKind::kAwgn:
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("awgn: sigma must be >= 0");
      break;
    case NoiseKind::kNonIid:
      if (variance_map.empty()) throw ArgumentError("non-iid: empty variance map");
      for (double v : variance_map.values())
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("non-iid: variance must be >= 0");
      break;
    case NoiseKind::kCorrelated: {
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("correlated: sigma must be >= 0");
      if (kernel_size < 1 || kernel_size % 2 == 0) throw ArgumentError("correlated: kernel side must be odd");
      if (kernel.size() != static_cast<std::size_t>(kernel_size) * kernel_size) {
        throw ArgumentError("correlated: kernel has wrong size");
      }
      double s = 0.0;
      for (double v : kernel) s += v;
      if (std::abs(s - 1.0) > kKernelSumTol) throw ArgumentError("correlated: kernel must sum to 1");
      break;
    }
    case NoiseKind::kSignalDependent:
      if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("signal-dependent: non-finite a or b");
      break;
  }
}

std::string NoiseModel::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case NoiseKind::kAwgn:
      os << "noise=awgn sigma=" << sigma;
      break;
    case NoiseKind::kNonIid:
      os << "noise=non-iid map=" << variance_map.shape_string();
      break;
    case NoiseKind::kCorrelated:
      os << "noise=correlated sigma=" << sigma << " ksize=" << kernel_size << " kernel=" << join(kernel, ',');
      break;
    case NoiseKind::kSignalDependent:
      os << "noise=signal-dependent a=" << a << " b=" << b;
      break;
  }
  return os.str();
}

NoiseModel NoiseModel::parse(const std::string& text) {
  std::istringstream is(text);
  std::string tok, kind;
  double sigma = 0.0, a = 0.0, b = 0.0;
  int ksize = 0;
  std::vector<double> kernel;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("noise model: expected key=value, got '" + tok + "'");
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "noise") {
      kind = val;
    } else if (key == "sigma") {
      sigma = parse_list(val, ',').at(0);
    } else if (key == "a") {
      a = parse_list(val, ',').at(0);
    } else if (key == "b") {
      b = parse_list(val, ',').at(0);
    } else if (key == "ksize") {
      ksize = static_cast<int>(parse_list(val, ',').at(0));
    } else if (key == "kernel") {
      kernel = parse_list(val, ',');
    } else if (key == "map") {
      // shape only; the map itself is not serialized
    } else {
      throw FormatError("noise model: unknown key '" + key + "'");
    }
  }
  NoiseModel m;
  if (kind == "awgn") {
    m = awgn(sigma);
  } else if (kind == "correlated") {
    m = correlated(sigma, kernel, ksize);
  } else if (kind == "signal-dependent") {
    m = signal_dependent(a, b);
  } else if (kind == "non-iid") {
    throw FormatError("noise model: non-iid maps cannot be restored from text");
  } else {
    throw FormatError("noise model: unknown kind '" + kind + "'");
  }
  m.validate();
  return m;
}

void ScenePrior::validate() const {
  if (is_gmm()) {
    gmm.validate();
    return;
  }
  if (mean.empty() || var.empty()) throw ArgumentError("scene prior: empty mean or variance");
  for (double v : var.values())
    if (!(v > 0.0)) throw DomainError("scene prior: s2 must be > 0");
}

ScenePrior ScenePrior::gauss(ImageTensor mean, ImageTensor var) {
  ScenePrior p;
  p.mean = std::move(mean);
  p.var = std::move(var);
  p.validate();
  return p;
}

ScenePrior ScenePrior::gauss(double mean, double var) {
  return gauss(ImageTensor(1, 1, 1, mean), ImageTensor(1, 1, 1, var));
}

ScenePrior ScenePrior::mixture(GmmPrior gmm) {
  ScenePrior p;
  p.gmm = std::move(gmm);
  p.validate();
  return p;
}

std::string ScenePrior::to_string() const {
  std::ostringstream os;
  os.precision(17);
  if (is_gmm()) {
    os << "prior=gmm w=" << join(gmm.weights, '/') << " m=" << join(gmm.means, '/') << " s2=" << join(gmm.vars, '/');
  } else if (mean.size() == 1 && var.size() == 1) {
    os << "prior=gauss m=" << mean[0] << " s2=" << var[0];
  } else {
    os << "prior=gauss map=" << mean.shape_string();
  }
  return os.str();
}

SceneKind parse_scene_kind(const std::string& s) {
  if (s == "constant") return SceneKind::kConstant;
  if (s == "ramp") return SceneKind::kRamp;
  if (s == "checker") return SceneKind::kChecker;
  if (s == "smooth-random") return SceneKind::kSmoothRandom;
  throw ArgumentError("unknown scene kind '" + s + "'");
}

std::string scene_kind_name(SceneKind k) {
  switch (k) {
    case SceneKind::kConstant:
      return "constant";
    case SceneKind::kRamp:
      return "ramp";
    case SceneKind::kChecker:
      return "checker";
    case SceneKind::kSmoothRandom:
      return "smooth-random";
  }
  return "?";
}

ImageTensor gen_clean(SceneKind kind, int height, int width, std::mt19937_64& rng) {
  if (height < 8 || width < 8) throw ArgumentError("gen_clean: size must be at least 8x8");
  ImageTensor img(1, height, width);
  switch (kind) {
    case SceneKind::kConstant:
      img.fill(0.5);
      break;
    case SceneKind::kRamp:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) img.at(0, y, x) = static_cast<double>(x) / (width - 1);
      break;
    case SceneKind::kChecker:
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) img.at(0, y, x) = ((y / 8 + x / 8) % 2) ? 0.75 : 0.25;
      break;
    case SceneKind::kSmoothRandom: {
      constexpr int r = 3;
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      const int ph = height + 2 * r, pw = width + 2 * r;
      std::vector<double> noise(static_cast<std::size_t>(ph) * pw);
      for (double& v : noise) v = uni(rng);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          double s = 0.0;
          for (int dy = 0; dy <= 2 * r; ++dy)
            for (int dx = 0; dx <= 2 * r; ++dx) s += noise[static_cast<std::size_t>(y + dy) * pw + x + dx];
          img.at(0, y, x) = s / 49.0;
        }
      const double lo = img.min(), hi = img.max();
      const double span = hi > lo ? hi - lo : 1.0;
      for (double& v : img.raw()) v = 0.2 + 0.6 * (v - lo) / span;
      break;
    }
  }
  return img;
}

ImageTensor noise_variance(const ImageTensor& x, const NoiseModel& model) {
  model.validate();
  ImageTensor var(x.channels(), x.height(), x.width());
  switch (model.kind) {
    case NoiseKind::kAwgn:
    case NoiseKind::kCorrelated:
      var.fill(model.sigma * model.sigma);
      break;
    case NoiseKind::kNonIid:
      if (model.variance_map.size() != 1) require_same_shape(x, model.variance_map, "add_noise: variance map");
      for (std::size_t i = 0; i < x.size(); ++i) var[i] = at_or_broadcast(model.variance_map, i);
      break;
    case NoiseKind::kSignalDependent:
      for (std::size_t i = 0; i < x.size(); ++i) {
        var[i] = model.a * x[i] + model.b;
        if (!(var[i] >= 0.0)) throw DomainError("add_noise: negative signal-dependent variance");
      }
      break;
  }
  return var;
}

ImageTensor add_noise(const ImageTensor& x, const NoiseModel& model, std::mt19937_64& rng) {
  const ImageTensor var = noise_variance(x, model);
  std::normal_distribution<double> normal(0.0, 1.0);
  ImageTensor y = x;
  if (model.kind != NoiseKind::kCorrelated) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += std::sqrt(var[i]) * normal(rng);
    return y;
  }
  const int r = model.kernel_size / 2, ks = model.kernel_size;
  double energy = 0.0;
  for (double k : model.kernel) energy += k * k;
  const double gain = energy > 0.0 ? model.sigma / std::sqrt(energy) : 0.0;
  const int ph = x.height() + 2 * r, pw = x.width() + 2 * r;
  std::vector<double> field(static_cast<std::size_t>(ph) * pw);
  for (int c = 0; c < x.channels(); ++c) {
    for (double& v : field) v = normal(rng);
    for (int yy = 0; yy < x.height(); ++yy)
      for (int xx = 0; xx < x.width(); ++xx) {
        double s = 0.0;
        for (int dy = 0; dy < ks; ++dy)
          for (int dx = 0; dx < ks; ++dx)
            s += model.kernel[static_cast<std::size_t>(dy) * ks + dx] *
                 field[static_cast<std::size_t>(yy + dy) * pw + xx + dx];
        y.at(c, yy, xx) += gain * s;
      }
  }
  return y;
}

std::pair<ImageTensor, ImageTensor> exact_posterior_gauss(const ImageTensor& y, const ScenePrior& prior,
                                                          const ImageTensor& noise_var) {
  if (prior.is_gmm()) throw ArgumentError("exact_posterior_gauss: needs a Gaussian prior");
  prior.validate();
  ImageTensor mean(y.channels(), y.height(), y.width());
  ImageTensor var(y.channels(), y.height(), y.width());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = at_or_broadcast(prior.mean, i), s2 = at_or_broadcast(prior.var, i);
    const double n2 = at_or_broadcast(noise_var, i);
    if (!(n2 >= 0.0)) throw DomainError("exact_posterior_gauss: negative noise variance");
    mean[i] = y[i] + n2 / (s2 + n2) * (m - y[i]);  // exact y at zero noise
    var[i] = s2 * n2 / (s2 + n2);
  }
  return {std::move(mean), std::move(var)};
}

ScoreIdentityCheck verify_score_identity_dense(int dim, const std::vector<double>& m, const std::vector<double>& P,
                                    const std::vector<double>& Sigma, const std::vector<double>& x_noisy) {
  if (dim < 1 || dim > 64) throw ArgumentError("verify_score_identity_dense: dim must be in [1, 64]");
  if (m.size() != static_cast<std::size_t>(dim) || x_noisy.size() != static_cast<std::size_t>(dim)) {
    throw ArgumentError("verify_score_identity_dense: vectors must have dim entries");
  }
  const Eigen::MatrixXd Pm = to_matrix(dim, P, "P");
  const Eigen::MatrixXd Sm = to_matrix(dim, Sigma, "Sigma");
  require_spd(Pm, "P");
  require_spd(Sm, "Sigma");
  const Eigen::Map<const Eigen::VectorXd> mv(m.data(), dim), xv(x_noisy.data(), dim);

  const Eigen::LLT<Eigen::MatrixXd> sum_llt(Pm + Sm);
  const Eigen::VectorXd d = xv - mv;
  const Eigen::VectorXd posterior_mean = mv + Pm * sum_llt.solve(d);
  const Eigen::VectorXd lhs = Eigen::LLT<Eigen::MatrixXd>(Sm).solve(posterior_mean - xv);
  const Eigen::VectorXd rhs = -sum_llt.solve(d);

  ScoreIdentityCheck out;
  out.lhs.assign(lhs.data(), lhs.data() + dim);
  out.rhs.assign(rhs.data(), rhs.data() + dim);
  const double scale = rhs.cwiseAbs().maxCoeff();
  const double diff = (lhs - rhs).cwiseAbs().maxCoeff();
  out.max_rel_discrepancy = scale > 0.0 ? diff / scale : diff;
  return out;
}

std::vector<double> random_spd(int dim, std::mt19937_64& rng, double ridge) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd A(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) A(r, c) = normal(rng);
  Eigen::MatrixXd S = A * A.transpose() / dim;
  S += ridge * Eigen::MatrixXd::Identity(dim, dim);
  S = 0.5 * (S + S.transpose());
  std::vector<double> out(static_cast<std::size_t>(dim) * dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) out[static_cast<std::size_t>(r) * dim + c] = S(r, c);
  return out;
}

double expected_logp_gauss(double mu, double sigma2, double m, double s2) {
  const double v = s2 + sigma2;
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - ((mu - m) * (mu - m) + sigma2) / (2.0 * v);
}

McEstimate mc_expected_logp(const ImageTensor& mu, const ImageTensor& sigma2, const ScenePrior& prior,
                            int samples, std::mt19937_64& rng) {
  require_same_shape(mu, sigma2, "mc_expected_logp");
  if (samples < 2) throw ArgumentError("mc_expected_logp: need at least 2 samples");
  prior.validate();
  for (double v : sigma2.values())
    if (!(v > 0.0)) throw DomainError("mc_expected_logp: sigma2 must be > 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0, m2 = 0.0;
  for (int n = 0; n < samples; ++n) {
    double total = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double x = mu[i] + std::sqrt(sigma2[i]) * normal(rng);
      if (prior.is_gmm()) {
        total += prior.gmm.log_density(x, sigma2[i]);
      } else {
        const double m = at_or_broadcast(prior.mean, i);
        const double v = at_or_broadcast(prior.var, i) + sigma2[i];
        total += -0.5 * std::log(2.0 * std::numbers::pi * v) - (x - m) * (x - m) / (2.0 * v);
      }
    }
    const double delta = total - mean;
    mean += delta / (n + 1);
    m2 += delta * (total - mean);
  }
  return {mean, std::sqrt(m2 / (samples - 1) / samples)};
}

SynthOutput synthesize(const SynthRequest& req) {
  req.noise.validate();
  if (req.prior_s2 && !(*req.prior_s2 > 0.0)) throw DomainError("synthesize: prior s2 must be > 0");
  std::mt19937_64 rng(req.seed);
  SynthOutput out;
  out.scene = gen_clean(req.scene, req.height, req.width, rng);
  out.clean = out.scene;
  if (req.prior_s2) {
    std::normal_distribution<double> normal(0.0, std::sqrt(*req.prior_s2));
    for (double& v : out.clean.raw()) v += normal(rng);
  }
  out.noisy = add_noise(out.clean, req.noise, rng);
  std::ostringstream os;
  os.precision(17);
  os << "scene=" << scene_kind_name(req.scene) << "\n";
  os << "size=" << req.height << "x" << req.width << "\n";
  os << "seed=" << req.seed << "\n";
  os << req.noise.to_string() << "\n";
  if (req.prior_s2) {
    os << "prior=gauss m=scene s2=" << *req.prior_s2 << "\n";
  } else {
    os << "prior=none\n";
  }
  out.sidecar = os.str();
  return out;
}

Sidecar parse_sidecar(const std::string& text) {
  Sidecar sc;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("sidecar: expected key=value, got '" + line + "'");
    sc.lines[line.substr(0, eq)] = line;
  }
  const auto it = sc.lines.find("noise");
  if (it == sc.lines.end()) throw FormatError("sidecar: missing noise line");
  if (it->second.rfind("noise=non-iid", 0) != 0) sc.noise = NoiseModel::parse(it->second);
  return sc;
}

GmmPrior fit_gmm(const std::vector<double>& values, int J, int iterations, double var_floor) {
  if (J < 1) throw ArgumentError("fit_gmm: J must be >= 1");
  if (values.size() < static_cast<std::size_t>(J)) throw ArgumentError("fit_gmm: fewer values than components");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = std::max(var / n, var_floor);

  GmmPrior g;
  g.weights.assign(J, 1.0 / J);
  g.vars.assign(J, var / (J * J));
  for (int j = 0; j < J; ++j) {
    const std::size_t idx = static_cast<std::size_t>((j + 0.5) / J * (n - 1));
    g.means.push_back(sorted[idx]);
  }
  for (double& v : g.vars) v = std::max(v, var_floor);

  std::vector<double> resp(J);
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> nk(J, 0.0), sx(J, 0.0), sxx(J, 0.0);
    for (double x : values) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < J; ++j) {
        const double d = x - g.means[j];
        resp[j] = std::log(g.weights[j]) - 0.5 * std::log(2.0 * std::numbers::pi * g.vars[j]) - d * d / (2.0 * g.vars[j]);
        mx = std::max(mx, resp[j]);
      }
      double s = 0.0;
      for (int j = 0; j < J; ++j) s += (resp[j] = std::exp(resp[j] - mx));
      for (int j = 0; j < J; ++j) {
        const double r = resp[j] / s;
        nk[j] += r;
        sx[j] += r * x;
        sxx[j] += r * x * x;
      }
    }
    for (int j = 0; j < J; ++j) {
      if (nk[j] < 1e-12) continue;  // empty component keeps its previous state
      g.weights[j] = nk[j] / n;
      g.means[j] = sx[j] / nk[j];
      g.vars[j] = std::max(sxx[j] / nk[j] - g.means[j] * g.means[j], var_floor);
    }
    double ws = 0.0;
    for (double w : g.weights) ws += w;
    for (double& w : g.weights) w /= ws;
  }
  g.validate();
  return g;
}

}  // namespace sdvi
