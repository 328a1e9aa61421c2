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

#include "scoredvi/scoredvi.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "adam.hpp"
#include "config.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "noise_estimator.hpp"
#include "selftest.hpp"
#include "synth.hpp"

struct sdvi_image {
  sdvi::ImageTensor t;
};

struct sdvi_config {
  sdvi::RunSpec spec;
};

struct sdvi_result {
  sdvi::RunResult r;
};

namespace {

thread_local std::string g_last_error;

sdvi_status status_of(sdvi::ErrorKind k) {
  switch (k) {
    case sdvi::ErrorKind::kArgument:
      return SDVI_ERR_ARGUMENT;
    case sdvi::ErrorKind::kDomain:
      return SDVI_ERR_DOMAIN;
    case sdvi::ErrorKind::kIo:
      return SDVI_ERR_IO;
    case sdvi::ErrorKind::kFormat:
      return SDVI_ERR_FORMAT;
    case sdvi::ErrorKind::kNumeric:
      return SDVI_ERR_NUMERIC;
    case sdvi::ErrorKind::kOracle:
      return SDVI_ERR_ORACLE;
    case sdvi::ErrorKind::kConfig:
      return SDVI_ERR_CONFIG;
  }
  return SDVI_ERR_INTERNAL;
}

sdvi_status fail(sdvi_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
sdvi_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return SDVI_OK;
  } catch (const sdvi::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SDVI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SDVI_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SDVI_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw sdvi::ArgumentError(std::string(what) + " is NULL");
}

void copy_out(const std::string& s, char* buf, size_t size, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && size > 0) {
    const size_t n = std::min(size - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

sdvi_breakdown to_c(const sdvi::ElboBreakdown& b) {
  return {b.iteration, b.L1, b.L2_entropy, b.L3, b.L4, b.L5, b.lambda, b.total};
}

sdvi_image* wrap(sdvi::ImageTensor t) { return new sdvi_image{std::move(t)}; }

}  // namespace

extern "C" {

const char* sdvi_last_error(void) { return g_last_error.c_str(); }

const char* sdvi_status_name(sdvi_status s) {
  switch (s) {
    case SDVI_OK:
      return "ok";
    case SDVI_ERR_ARGUMENT:
      return "argument error";
    case SDVI_ERR_DOMAIN:
      return "domain error";
    case SDVI_ERR_IO:
      return "i/o error";
    case SDVI_ERR_FORMAT:
      return "format error";
    case SDVI_ERR_NUMERIC:
      return "numeric error";
    case SDVI_ERR_ORACLE:
      return "oracle error";
    case SDVI_ERR_CONFIG:
      return "config error";
    case SDVI_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* sdvi_version(void) { return "0.1.0"; }

sdvi_status sdvi_image_create(int c, int h, int w, const double* data, sdvi_image** out) {
  return guarded([&] {
    require(out, "out");
    sdvi::ImageTensor t(c, h, w);
    if (data) std::copy(data, data + t.size(), t.raw().begin());
    *out = wrap(std::move(t));
  });
}

sdvi_status sdvi_image_load(const char* path, sdvi_image** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(sdvi::load_image(path));
  });
}

sdvi_status sdvi_image_save(const sdvi_image* img, const char* path) {
  return guarded([&] {
    require(img, "img");
    require(path, "path");
    sdvi::save_image(img->t, path);
  });
}

sdvi_status sdvi_tensor_save(const sdvi_image* img, const char* path) {
  return guarded([&] {
    require(img, "img");
    require(path, "path");
    sdvi::write_tensor(path, img->t);
  });
}

sdvi_status sdvi_image_shape(const sdvi_image* img, int* c, int* h, int* w) {
  return guarded([&] {
    require(img, "img");
    if (c) *c = img->t.channels();
    if (h) *h = img->t.height();
    if (w) *w = img->t.width();
  });
}

const double* sdvi_image_data(const sdvi_image* img) { return img ? img->t.raw().data() : nullptr; }

void sdvi_image_free(sdvi_image* img) { delete img; }

sdvi_status sdvi_psnr(const sdvi_image* a, const sdvi_image* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = sdvi::psnr(a->t, b->t);
  });
}

sdvi_status sdvi_ssim(const sdvi_image* a, const sdvi_image* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = sdvi::ssim(a->t, b->t);
  });
}

sdvi_status sdvi_estimate_noise(const sdvi_image* img, double* delta) {
  return guarded([&] {
    require(img, "img");
    require(delta, "delta");
    *delta = sdvi::estimate_delta(img->t).delta;
  });
}

double sdvi_lambda_weight(double delta, double l1, double l2, double gamma) {
  return sdvi::lambda_weight(delta, l1, l2, gamma);
}

sdvi_status sdvi_config_create(sdvi_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new sdvi_config{};
  });
}

sdvi_status sdvi_config_load(const char* path, sdvi_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new sdvi_config{sdvi::load_config_file(path)};
  });
}

sdvi_status sdvi_config_set(sdvi_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    sdvi::apply_setting(cfg->spec, key, value);
  });
}

sdvi_status sdvi_config_get(const sdvi_config* cfg, const char* key, char* buf, size_t size, size_t* needed) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    copy_out(sdvi::get_setting(cfg->spec, key), buf, size, needed);
  });
}

sdvi_status sdvi_config_validate(const sdvi_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->spec.validate();
  });
}

sdvi_status sdvi_config_clone(const sdvi_config* cfg, sdvi_config** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = new sdvi_config{cfg->spec};
  });
}

void sdvi_config_free(sdvi_config* cfg) { delete cfg; }

sdvi_status sdvi_denoise(const sdvi_config* cfg, const sdvi_image* noisy, sdvi_progress_fn progress, void* user,
                         sdvi_result** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(noisy, "noisy");
    require(out, "out");
    const sdvi::RunSpec& spec = cfg->spec;
    spec.validate();
    const auto oracles = sdvi::build_oracles(spec);
    sdvi::ElboConfig elbo = spec.elbo;
    elbo.delta_override = sdvi::resolve_delta(noisy->t, elbo);
    auto backend = sdvi::make_run_backend(noisy->t, elbo);
    if (!spec.init_checkpoint.empty()) sdvi::load_checkpoint(spec.init_checkpoint, backend->parameters());
    auto observer = [&](const sdvi::ElboBreakdown& b, sdvi::ParamBackend& be) {
      if (spec.checkpoint_every > 0 && (b.iteration + 1) % spec.checkpoint_every == 0) {
        sdvi::save_checkpoint(spec.checkpoint, be.parameters());
      }
      if (progress) {
        const sdvi_breakdown cb = to_c(b);
        if (!progress(&cb, user)) throw sdvi::ArgumentError("run aborted by progress callback");
      }
    };
    auto result = std::make_unique<sdvi_result>();
    result->r = sdvi::run(noisy->t, elbo, oracles, *backend, observer);
    *out = result.release();
  });
}

sdvi_status sdvi_result_mean(const sdvi_result* r, sdvi_image** out) {
  return guarded([&] {
    require(r, "r");
    require(out, "out");
    *out = wrap(r->r.mean);
  });
}

sdvi_status sdvi_result_variance(const sdvi_result* r, sdvi_image** out) {
  return guarded([&] {
    require(r, "r");
    require(out, "out");
    *out = wrap(r->r.variance);
  });
}

sdvi_status sdvi_result_pi(const sdvi_result* r, int k, sdvi_image** out) {
  return guarded([&] {
    require(r, "r");
    require(out, "out");
    if (k < 0 || k >= static_cast<int>(r->r.pi.size())) throw sdvi::ArgumentError("component index out of range");
    *out = wrap(r->r.pi[static_cast<size_t>(k)]);
  });
}

double sdvi_result_delta(const sdvi_result* r) { return r ? r->r.delta : 0.0; }

double sdvi_result_lambda(const sdvi_result* r) { return r ? r->r.lambda : 0.0; }

size_t sdvi_result_history_length(const sdvi_result* r) { return r ? r->r.history.size() : 0; }

sdvi_status sdvi_result_history(const sdvi_result* r, size_t i, sdvi_breakdown* out) {
  return guarded([&] {
    require(r, "r");
    require(out, "out");
    if (i >= r->r.history.size()) throw sdvi::ArgumentError("history index out of range");
    *out = to_c(r->r.history[i]);
  });
}

sdvi_status sdvi_result_write_log(const sdvi_result* r, const char* path) {
  return guarded([&] {
    require(r, "r");
    require(path, "path");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw sdvi::IoError(std::string("cannot open '") + path + "' for writing");
    sdvi::write_history_csv(f, r->r.history);
    if (!f) throw sdvi::IoError(std::string("write failed for '") + path + "'");
  });
}

void sdvi_result_free(sdvi_result* r) { delete r; }

sdvi_status sdvi_synth_write(const char* dir, const char* name, const char* scene, int height, int width,
                             const char* noise, double prior_s2, uint64_t seed) {
  return guarded([&] {
    require(dir, "dir");
    require(name, "name");
    require(scene, "scene");
    require(noise, "noise");
    sdvi::SynthRequest req;
    req.scene = sdvi::parse_scene_kind(scene);
    req.height = height;
    req.width = width;
    req.noise = sdvi::parse_noise_spec(noise, height, width);
    if (prior_s2 > 0.0) req.prior_s2 = prior_s2;
    req.seed = seed;
    const sdvi::SynthOutput s = sdvi::synthesize(req);
    const std::filesystem::path base = std::filesystem::path(dir) / name;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw sdvi::IoError("cannot create directory '" + std::string(dir) + "': " + ec.message());
    sdvi::save_image(s.clean, base.string() + "_clean.png");
    sdvi::save_image(s.noisy, base.string() + "_noisy.png");
    sdvi::write_tensor(base.string() + "_clean.sdvi", s.clean);
    sdvi::write_tensor(base.string() + "_noisy.sdvi", s.noisy);
    std::ofstream f(base.string() + ".txt", std::ios::binary);
    if (!f) throw sdvi::IoError("cannot write sidecar for '" + base.string() + "'");
    f << s.sidecar;
    if (!f) throw sdvi::IoError("write failed for sidecar of '" + base.string() + "'");
  });
}

sdvi_status sdvi_sidecar_noise(const char* path, char* buf, size_t size, size_t* needed) {
  return guarded([&] {
    require(path, "path");
    std::ifstream f(path, std::ios::binary);
    if (!f) throw sdvi::IoError(std::string("cannot open sidecar '") + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    const sdvi::Sidecar sc = sdvi::parse_sidecar(ss.str());
    copy_out(sc.noise ? sc.noise->to_string() : sc.lines.at("noise"), buf, size, needed);
  });
}

sdvi_status sdvi_selftest(const char* suite, int sigma2_per_sigma, sdvi_selftest_fn report, void* user,
                          int* all_passed) {
  return guarded([&] {
    sdvi::SelftestOptions opts;
    if (suite) opts.suite = suite;
    opts.sigma2_mode = sigma2_per_sigma ? sdvi::Sigma2GradMode::kPerSigma : sdvi::Sigma2GradMode::kChainCorrected;
    const bool ok = sdvi::run_selftest(opts, [&](const sdvi::SelftestCheck& c) {
      if (report) report(c.suite.c_str(), c.name.c_str(), c.passed ? 1 : 0, c.detail.c_str(), user);
    });
    if (all_passed) *all_passed = ok ? 1 : 0;
  });
}

}  // extern "C"
