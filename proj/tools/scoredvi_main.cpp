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

// Command-line front end. Talks to the library only through the C API.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "scoredvi/scoredvi.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  sdvi_status status;
  std::string message;
};

int exit_code(sdvi_status s) {
  switch (s) {
    case SDVI_OK:
      return kExitOk;
    case SDVI_ERR_NUMERIC:
    case SDVI_ERR_ORACLE:
    case SDVI_ERR_INTERNAL:
      return kExitFailure;
    default:
      return kExitUsage;
  }
}

void check(sdvi_status s, const std::string& context = "") {
  if (s != SDVI_OK) {
    std::string msg = sdvi_status_name(s);
    msg += ": ";
    if (!context.empty()) msg += context + ": ";
    msg += sdvi_last_error();
    throw Failure{s, msg};
  }
}

struct ImageDeleter {
  void operator()(sdvi_image* p) const { sdvi_image_free(p); }
};
struct ConfigDeleter {
  void operator()(sdvi_config* p) const { sdvi_config_free(p); }
};
struct ResultDeleter {
  void operator()(sdvi_result* p) const { sdvi_result_free(p); }
};
using Image = std::unique_ptr<sdvi_image, ImageDeleter>;
using Config = std::unique_ptr<sdvi_config, ConfigDeleter>;
using Result = std::unique_ptr<sdvi_result, ResultDeleter>;

Image load(const std::string& path) {
  sdvi_image* p = nullptr;
  check(sdvi_image_load(path.c_str(), &p), path);
  return Image(p);
}

std::string config_get(const sdvi_config* cfg, const std::string& key) {
  size_t needed = 0;
  check(sdvi_config_get(cfg, key.c_str(), nullptr, 0, &needed), key);
  std::string buf(needed, '\0');
  check(sdvi_config_get(cfg, key.c_str(), buf.data(), buf.size(), nullptr), key);
  buf.resize(needed - 1);
  return buf;
}

void config_set(sdvi_config* cfg, const std::string& key, const std::string& value) {
  check(sdvi_config_set(cfg, key.c_str(), value.c_str()), "--" + key);
}

// Run options shared by denoise and bench.
struct RunFlags {
  std::string config;
  std::optional<std::string> seed, iters, K, M, gamma, beta, oracle, backend, sigma2_grad;
  std::vector<std::string> sets;

  void add_to(CLI::App* app) {
    app->add_option("--config", config, "key = value config file");
    app->add_option("--seed", seed, "RNG seed (overrides SCOREDVI_SEED and the config)");
    app->add_option("--iters", iters, "iterations T");
    app->add_option("--K", K, "mixture components");
    app->add_option("--M", M, "Monte Carlo samples per iteration");
    app->add_option("--gamma", gamma, "prior-weight coefficient");
    app->add_option("--beta", beta, "Gamma hyperprior rate or preset (noisy, medium, low)");
    app->add_option("--oracle", oracle, "oracle spec broadcast to every component");
    app->add_option("--backend", backend, "direct or conv")->check(CLI::IsMember({"direct", "conv"}));
    app->add_option("--sigma2-grad", sigma2_grad, "sigma2 score-gradient form")
        ->check(CLI::IsMember({"chain", "sigma"}));
    app->add_option("--set", sets, "extra config entry key=value (repeatable)");
  }

  Config build() const {
    sdvi_config* raw = nullptr;
    if (!config.empty()) {
      check(sdvi_config_load(config.c_str(), &raw));
    } else {
      check(sdvi_config_create(&raw));
    }
    Config cfg(raw);
    if (const char* env = std::getenv("SCOREDVI_SEED"); env && *env) {
      check(sdvi_config_set(cfg.get(), "seed", env), "SCOREDVI_SEED");
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Failure{SDVI_ERR_ARGUMENT, "--set expects key=value, got '" + s + "'"};
      config_set(cfg.get(), s.substr(0, eq), s.substr(eq + 1));
    }
    const std::pair<const char*, const std::optional<std::string>*> flags[] = {
        {"K", &K},         {"M", &M},           {"T", &iters},          {"gamma", &gamma},
        {"beta", &beta},   {"oracle", &oracle}, {"backend", &backend}, {"sigma2_grad", &sigma2_grad},
        {"seed", &seed}};
    for (const auto& [key, val] : flags)
      if (*val) config_set(cfg.get(), key, **val);
    check(sdvi_config_validate(cfg.get()));
    return cfg;
  }
};

std::string stem_of(const std::string& path) {
  const fs::path p(path);
  return (p.parent_path() / p.stem()).string();
}

void print_breakdown(const sdvi_breakdown& b) {
  std::cout << std::setprecision(10) << "final iter=" << b.iteration << " L1=" << b.L1 << " L2ent=" << b.L2_entropy
            << " L3=" << b.L3 << " L4=" << b.L4 << " L5=" << b.L5 << " lambda=" << b.lambda << " total=" << b.total
            << "\n";
}

int cmd_denoise(const RunFlags& flags, std::string in, std::string out, std::string log, std::string var_out) {
  Config cfg = flags.build();
  if (in.empty()) in = config_get(cfg.get(), "in");
  if (out.empty()) out = config_get(cfg.get(), "out");
  if (log.empty()) log = config_get(cfg.get(), "log");
  if (var_out.empty()) var_out = config_get(cfg.get(), "variance_out");
  if (in.empty()) throw Failure{SDVI_ERR_ARGUMENT, "no input image (--in or key 'in')"};
  if (out.empty()) throw Failure{SDVI_ERR_ARGUMENT, "no output path (--out or key 'out')"};
  if (log.empty()) log = stem_of(out) + "_loss.csv";
  if (var_out.empty()) var_out = stem_of(out) + "_var.sdvi";

  Image noisy = load(in);
  sdvi_result* raw = nullptr;
  check(sdvi_denoise(cfg.get(), noisy.get(), nullptr, nullptr, &raw), "denoise");
  Result res(raw);
  sdvi_image* mean = nullptr;
  sdvi_image* var = nullptr;
  check(sdvi_result_mean(res.get(), &mean));
  Image mean_img(mean);
  check(sdvi_result_variance(res.get(), &var));
  Image var_img(var);
  check(sdvi_image_save(mean_img.get(), out.c_str()), out);
  check(sdvi_tensor_save(var_img.get(), var_out.c_str()), var_out);
  check(sdvi_result_write_log(res.get(), log.c_str()), log);

  std::cout << std::setprecision(10) << "delta=" << sdvi_result_delta(res.get())
            << " lambda=" << sdvi_result_lambda(res.get()) << "\n";
  const size_t n = sdvi_result_history_length(res.get());
  if (n > 0) {
    sdvi_breakdown b{};
    check(sdvi_result_history(res.get(), n - 1, &b));
    print_breakdown(b);
  }
  std::cout << "wrote " << out << ", " << var_out << ", " << log << "\n";
  return kExitOk;
}

int cmd_estimate_noise(const std::string& in, double l1, double l2, double gamma) {
  Image img = load(in);
  double delta = 0.0;
  check(sdvi_estimate_noise(img.get(), &delta), in);
  std::cout << std::setprecision(10) << "delta=" << delta << " lambda=" << sdvi_lambda_weight(delta, l1, l2, gamma)
            << "\n";
  return kExitOk;
}

int cmd_synth(const std::string& dir, const std::string& name, const std::string& scene, int height, int width,
              const std::string& noise, double prior_s2, std::optional<unsigned long long> seed_flag) {
  unsigned long long seed = 0;
  if (const char* env = std::getenv("SCOREDVI_SEED"); env && *env) {
    try {
      seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Failure{SDVI_ERR_ARGUMENT, std::string("SCOREDVI_SEED is not an integer: ") + env};
    }
  }
  if (seed_flag) seed = *seed_flag;
  check(sdvi_synth_write(dir.c_str(), name.c_str(), scene.c_str(), height, width, noise.c_str(), prior_s2, seed),
        "synth");
  std::cout << "wrote " << (fs::path(dir) / name).string() << "_{clean,noisy}.{png,sdvi} and " << name << ".txt\n";
  return kExitOk;
}

void selftest_row(const char* suite, const char* name, int passed, const char* detail, void*) {
  std::cout << std::left << std::setw(10) << suite << std::setw(34) << name << std::setw(6)
            << (passed ? "PASS" : "FAIL") << detail << "\n";
}

int cmd_selftest(const std::string& suite, const std::string& mode) {
  int all = 0;
  std::cout << std::left << std::setw(10) << "suite" << std::setw(34) << "check" << std::setw(6) << "result"
            << "detail\n";
  check(sdvi_selftest(suite.empty() ? nullptr : suite.c_str(), mode == "sigma", selftest_row, nullptr, &all),
        "selftest");
  std::cout << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all ? kExitOk : kExitFailure;
}

struct BenchItem {
  std::string name;
  fs::path noisy, clean;
  std::string noise;
  double psnr_in = 0, psnr_out = 0, ssim_in = 0, ssim_out = 0;
  std::optional<Failure> error;
};

fs::path pick(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".sdvi", ".png", ".pgm", ".ppm"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return {};
}

void bench_one(BenchItem& item, const sdvi_config* cfg, const std::string& out_dir) {
  try {
    Image noisy = load(item.noisy.string());
    Image clean = load(item.clean.string());
    sdvi_result* raw = nullptr;
    check(sdvi_denoise(cfg, noisy.get(), nullptr, nullptr, &raw), item.name);
    Result res(raw);
    sdvi_image* mean = nullptr;
    check(sdvi_result_mean(res.get(), &mean));
    Image mean_img(mean);
    check(sdvi_psnr(noisy.get(), clean.get(), &item.psnr_in));
    check(sdvi_psnr(mean_img.get(), clean.get(), &item.psnr_out));
    check(sdvi_ssim(noisy.get(), clean.get(), &item.ssim_in));
    check(sdvi_ssim(mean_img.get(), clean.get(), &item.ssim_out));
    if (!out_dir.empty()) {
      const std::string base = (fs::path(out_dir) / item.name).string();
      check(sdvi_image_save(mean_img.get(), (base + "_denoised.png").c_str()));
      check(sdvi_tensor_save(mean_img.get(), (base + "_denoised.sdvi").c_str()));
      sdvi_image* var = nullptr;
      check(sdvi_result_variance(res.get(), &var));
      Image var_img(var);
      check(sdvi_tensor_save(var_img.get(), (base + "_var.sdvi").c_str()));
    }
  } catch (const Failure& f) {
    item.error = f;
  }
}

int cmd_bench(const RunFlags& flags, const std::string& dir, int workers, const std::string& out_dir) {
  if (!fs::is_directory(dir)) throw Failure{SDVI_ERR_IO, "not a directory: " + dir};
  std::vector<BenchItem> items;
  std::vector<fs::path> sidecars;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") sidecars.push_back(e.path());
  std::sort(sidecars.begin(), sidecars.end());
  for (const auto& sc : sidecars) {
    BenchItem item;
    item.name = sc.stem().string();
    item.noisy = pick(sc.parent_path(), item.name + "_noisy");
    item.clean = pick(sc.parent_path(), item.name + "_clean");
    if (item.noisy.empty() || item.clean.empty()) continue;
    size_t needed = 0;
    check(sdvi_sidecar_noise(sc.c_str(), nullptr, 0, &needed), sc.string());
    std::string buf(needed, '\0');
    check(sdvi_sidecar_noise(sc.c_str(), buf.data(), buf.size(), nullptr), sc.string());
    buf.resize(needed - 1);
    item.noise = buf;
    items.push_back(std::move(item));
  }
  if (items.empty()) throw Failure{SDVI_ERR_ARGUMENT, "no image pairs (<name>.txt + _noisy/_clean) in " + dir};
  if (!out_dir.empty()) fs::create_directories(out_dir);

  Config cfg = flags.build();
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < items.size(); i = next++) bench_one(items[i], cfg.get(), out_dir);
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(items.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::cout << std::left << std::setw(20) << "image" << std::right << std::setw(10) << "psnr_in" << std::setw(10)
            << "psnr_out" << std::setw(9) << "gain" << std::setw(9) << "ssim_in" << std::setw(9) << "ssim_out"
            << "  noise\n";
  double sums[5] = {0, 0, 0, 0, 0};
  int failed = 0;
  std::cout << std::fixed;
  for (const auto& it : items) {
    if (it.error) {
      ++failed;
      std::cout << std::left << std::setw(20) << it.name << "  FAILED: " << it.error->message << "\n";
      continue;
    }
    const double gain = it.psnr_out - it.psnr_in;
    std::cout << std::left << std::setw(20) << it.name << std::right << std::setprecision(3) << std::setw(10)
              << it.psnr_in << std::setw(10) << it.psnr_out << std::setw(9) << gain << std::setprecision(4)
              << std::setw(9) << it.ssim_in << std::setw(9) << it.ssim_out << "  " << it.noise << "\n";
    sums[0] += it.psnr_in;
    sums[1] += it.psnr_out;
    sums[2] += gain;
    sums[3] += it.ssim_in;
    sums[4] += it.ssim_out;
  }
  const int ok = static_cast<int>(items.size()) - failed;
  if (ok > 0) {
    std::cout << std::left << std::setw(20) << "mean" << std::right << std::setprecision(3) << std::setw(10)
              << sums[0] / ok << std::setw(10) << sums[1] / ok << std::setw(9) << sums[2] / ok
              << std::setprecision(4) << std::setw(9) << sums[3] / ok << std::setw(9) << sums[4] / ok << "\n";
  }
  if (failed > 0) {
    for (const auto& it : items)
      if (it.error) return exit_code(it.error->status);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-image denoising by variational inference with denoiser score priors"};
  app.require_subcommand(1);

  RunFlags denoise_flags;
  std::string in, out, log, var_out;
  auto* denoise = app.add_subcommand("denoise", "denoise one image");
  denoise->add_option("--in", in, "noisy input image");
  denoise->add_option("--out", out, "denoised mean image (.png/.pgm/.ppm/.sdvi)");
  denoise->add_option("--log", log, "loss history CSV (default <out>_loss.csv)");
  denoise->add_option("--variance-out", var_out, "fused variance SDVI1 tensor (default <out>_var.sdvi)");
  denoise_flags.add_to(denoise);

  std::string est_in;
  double l1 = 10.0, l2 = 25.0, est_gamma = 2.0;
  auto* estimate = app.add_subcommand("estimate-noise", "estimate the noise level and prior weight");
  estimate->add_option("--in", est_in, "input image")->required();
  estimate->add_option("--l1", l1, "lower threshold");
  estimate->add_option("--l2", l2, "upper threshold");
  estimate->add_option("--gamma", est_gamma, "prior-weight coefficient");

  std::string synth_dir = ".", synth_name = "synth", scene = "smooth-random", noise = "awgn:sigma=0.1";
  int height = 64, width = 64;
  double prior_s2 = 0.0;
  std::optional<unsigned long long> synth_seed;
  auto* synth = app.add_subcommand("synth", "write a synthetic clean/noisy pair with a sidecar");
  synth->add_option("--out-dir", synth_dir, "output directory");
  synth->add_option("--name", synth_name, "file name stem");
  synth->add_option("--scene", scene, "constant, ramp, checker or smooth-random")
      ->check(CLI::IsMember({"constant", "ramp", "checker", "smooth-random"}));
  synth->add_option("--height", height, "rows");
  synth->add_option("--width", width, "columns");
  synth->add_option("--noise", noise, "awgn:sigma=s | correlated:sigma=s,ksize=n | signal:a=a,b=b | nonuniform:lo=v,hi=v");
  synth->add_option("--prior-s2", prior_s2, "draw clean = scene + N(0, s2) when > 0");
  synth->add_option("--seed", synth_seed, "RNG seed");

  std::string suite, st_mode = "chain";
  auto* selftest = app.add_subcommand("selftest", "run the built-in verification suites");
  selftest->add_option("--suite", suite, "score-identity, fd or kl (default: all)");
  selftest->add_option("--sigma2-grad", st_mode, "sigma2 score-gradient form")
      ->check(CLI::IsMember({"chain", "sigma"}));

  RunFlags bench_flags;
  std::string bench_dir, bench_out;
  int workers = 1;
  auto* bench = app.add_subcommand("bench", "denoise every synthetic pair in a directory");
  bench->add_option("--dir", bench_dir, "directory with <name>.txt, <name>_noisy.*, <name>_clean.*")->required();
  bench->add_option("--workers", workers, "concurrent images")->check(CLI::PositiveNumber);
  bench->add_option("--out-dir", bench_out, "write denoised outputs here");
  bench_flags.add_to(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*denoise) return cmd_denoise(denoise_flags, in, out, log, var_out);
    if (*estimate) return cmd_estimate_noise(est_in, l1, l2, est_gamma);
    if (*synth) return cmd_synth(synth_dir, synth_name, scene, height, width, noise, prior_s2, synth_seed);
    if (*selftest) return cmd_selftest(suite, st_mode);
    if (*bench) return cmd_bench(bench_flags, bench_dir, workers, bench_out);
  } catch (const Failure& f) {
    std::cerr << "scoredvi: " << f.message << "\n";
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "scoredvi: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
