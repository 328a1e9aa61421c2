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

#include <array>
#include <cstdio>
#include <string>

#include <sys/wait.h>

#include "test_util.hpp"

using sdvi_test::TempDir;

namespace {

struct CmdResult {
  int code = -1;
  std::string output;
};

// Runs the CLI through the shell, merging stderr into the captured output.
CmdResult cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + std::string(SDVI_CLI_PATH) + "' " + args + " 2>&1";
  CmdResult r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const std::string& s) { return "'" + s + "'"; }

bool same_file(const std::string& a, const std::string& b) {
  const auto x = sdvi_test::read_bytes(a);
  return !x.empty() && x == sdvi_test::read_bytes(b);
}

const char* kConfig =
    "K = 2\n"
    "M = 2\n"
    "T = 15\n"
    "oracle = gauss:m=0.5,s2=0.01\n"
    "seed = 3\n";

}  // namespace

TEST_CASE("denoise is byte-identical across runs") {
  TempDir dir;
  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name a --height 32 --width 32 --seed 4").code == 0);
  sdvi_test::write_text(dir.file("c.cfg"), kConfig);
  for (const char* o : {"x1", "x2"}) {
    const CmdResult r = cli("denoise --in " + q(dir.file("a_noisy.png")) + " --out " + q(dir.file(std::string(o) + ".png")) +
                            " --config " + q(dir.file("c.cfg")) + " --seed 7");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("delta=") != std::string::npos);
    CHECK(r.output.find("final iter=14") != std::string::npos);
  }
  CHECK(same_file(dir.file("x1.png"), dir.file("x2.png")));
  CHECK(same_file(dir.file("x1_var.sdvi"), dir.file("x2_var.sdvi")));
  CHECK(same_file(dir.file("x1_loss.csv"), dir.file("x2_loss.csv")));
  CHECK(sdvi_test::read_text(dir.file("x1_loss.csv")).rfind("iter,L1,L2ent,L3,L4,L5,lambda,total\n", 0) == 0);
}

TEST_CASE("seed precedence: config, then environment, then flag") {
  TempDir dir;
  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name a --height 32 --width 32 --seed 4").code == 0);
  sdvi_test::write_text(dir.file("c.cfg"), kConfig);
  const std::string base = "denoise --in " + q(dir.file("a_noisy.png")) + " --config " + q(dir.file("c.cfg"));
  auto out = [&](const std::string& n) { return " --out " + q(dir.file(n + ".sdvi")); };
  REQUIRE(cli(base + out("cfg")).code == 0);
  REQUIRE(cli(base + out("cfg3") + " --seed 3").code == 0);
  REQUIRE(cli(base + out("env9"), "SCOREDVI_SEED=9").code == 0);
  REQUIRE(cli(base + out("flag9") + " --seed 9").code == 0);
  REQUIRE(cli(base + out("both") + " --seed 3", "SCOREDVI_SEED=9").code == 0);
  CHECK(same_file(dir.file("cfg.sdvi"), dir.file("cfg3.sdvi")));
  CHECK(same_file(dir.file("env9.sdvi"), dir.file("flag9.sdvi")));
  CHECK_FALSE(same_file(dir.file("cfg.sdvi"), dir.file("env9.sdvi")));
  CHECK(same_file(dir.file("both.sdvi"), dir.file("cfg.sdvi")));
}

TEST_CASE("validation errors exit with 2 and name the problem") {
  TempDir dir;
  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name a --height 32 --width 32").code == 0);
  sdvi_test::write_text(dir.file("c.cfg"), "M = 5\nT = 10\noracle = identity\n");
  const CmdResult r = cli("denoise --in " + q(dir.file("a_noisy.png")) + " --out " + q(dir.file("x.png")) +
                          " --config " + q(dir.file("c.cfg")));
  CHECK(r.code == 2);
  CHECK(r.output.find("'K'") != std::string::npos);

  CHECK(cli("denoise --in " + q(dir.file("none.png")) + " --out x.png --oracle identity").code == 2);
  CHECK(cli("denoise --bogus").code == 2);
  CHECK(cli("denoise --in " + q(dir.file("a_noisy.png")) + " --out " + q(dir.file("x.png")) +
            " --oracle identity --backend gpu")
            .code == 2);
  const CmdResult fail = cli("denoise --in " + q(dir.file("a_noisy.png")) + " --out " + q(dir.file("x.png")) +
                             " --oracle 'external:exit 4 # {in} {out}' --K 1 --iters 2");
  CHECK(fail.code == 1);
  CHECK(fail.output.find("status 4") != std::string::npos);
}

TEST_CASE("estimate-noise") {
  TempDir dir;
  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name c --scene constant --height 64 --width 64 "
              "--noise awgn:sigma=0")
              .code == 0);
  const CmdResult r = cli("estimate-noise --in " + q(dir.file("c_clean.png")));
  CHECK(r.code == 0);
  CHECK(r.output.find("delta=0 ") != std::string::npos);
  CHECK(r.output.find("lambda=0.5") != std::string::npos);

  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name n --scene constant --height 64 --width 64 "
              "--noise awgn:sigma=0.1568627 --seed 2")
              .code == 0);
  const CmdResult hi = cli("estimate-noise --in " + q(dir.file("n_noisy.sdvi")));
  CHECK(hi.code == 0);
  CHECK(hi.output.find("lambda=2") != std::string::npos);

  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name s --height 16 --width 16").code == 0);
  CHECK(cli("estimate-noise --in " + q(dir.file("s_noisy.png"))).code == 2);
}

TEST_CASE("synth sidecar round trip through bench") {
  TempDir dir;
  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name p --height 32 --width 32 "
              "--noise correlated:sigma=0.07,ksize=5 --seed 3")
              .code == 0);
  const std::string sidecar = sdvi_test::read_text(dir.file("p.txt"));
  CHECK(sidecar.find("sigma=0.07") != std::string::npos);
  const CmdResult r = cli("bench --dir " + q(dir.path()) + " --oracle identity --K 1 --iters 3");
  REQUIRE(r.code == 0);
  // The table echoes the noise parsed back from the sidecar.
  CHECK(r.output.find("sigma=0.07") != std::string::npos);
  CHECK(r.output.find("ksize=5") != std::string::npos);
}

TEST_CASE("bench: empty directory and smoke gain") {
  TempDir dir;
  CHECK(cli("bench --dir " + q(dir.path()) + " --oracle identity").code == 2);

  REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name flat --scene constant --height 32 --width 32 "
              "--noise awgn:sigma=0.05 --seed 1")
              .code == 0);
  const CmdResult r = cli("bench --dir " + q(dir.path()) + " --oracle identity --beta 0.005 --K 1 --iters 50");
  REQUIRE(r.code == 0);
  const auto pos = r.output.find("\nmean");
  REQUIRE(pos != std::string::npos);
  // Columns: psnr_in psnr_out gain ...
  double in = 0, out = 0, gain = 0;
  REQUIRE(std::sscanf(r.output.c_str() + pos + 5, "%lf %lf %lf", &in, &out, &gain) == 3);
  CHECK(gain >= 0.0);
}

TEST_CASE("bench outputs do not depend on the worker count") {
  TempDir dir;
  for (int i = 0; i < 4; ++i)
    REQUIRE(cli("synth --out-dir " + q(dir.path()) + " --name img" + std::to_string(i) +
                " --height 32 --width 32 --seed " + std::to_string(10 + i))
                .code == 0);
  const std::string args = "bench --dir " + q(dir.path()) + " --oracle gauss:m=0.5,s2=0.02 --K 2 --M 2 --iters 10";
  const CmdResult one = cli(args + " --workers 1 --out-dir " + q(dir.file("w1")));
  const CmdResult three = cli(args + " --workers 3 --out-dir " + q(dir.file("w3")));
  REQUIRE(one.code == 0);
  REQUIRE(three.code == 0);
  CHECK(one.output == three.output);
  for (int i = 0; i < 4; ++i) {
    const std::string n = "img" + std::to_string(i);
    for (const char* suffix : {"_denoised.png", "_denoised.sdvi", "_var.sdvi"})
      CHECK(same_file(dir.file("w1/" + n + suffix), dir.file("w3/" + n + suffix)));
  }
}

TEST_CASE("selftest filtering and the per-sigma sigma2 mode") {
  const CmdResult t = cli("selftest --suite score-identity");
  CHECK(t.code == 0);
  CHECK(t.output.find("all checks passed") != std::string::npos);
  CHECK(t.output.find("\nfd ") == std::string::npos);
  CHECK(t.output.find("\nkl ") == std::string::npos);

  const CmdResult p = cli("selftest --suite fd --sigma2-grad sigma");
  CHECK(p.output.find("2 sigma") != std::string::npos);
  CHECK(p.output.find("score-identity") == std::string::npos);

  CHECK(cli("selftest --suite nope").code == 2);
}
