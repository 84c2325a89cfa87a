// Copyright 2026 The PPT Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the ppt binary as a subprocess.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "ppt/scenario.hpp"

namespace {

namespace fs = std::filesystem;

struct Invocation {
  int status = -1;
  std::string out;
};

Invocation ppt(const std::string& args) {
  const std::string cmd = std::string(PPT_CLI_PATH) + " " + args + " 2>&1";
  Invocation r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path root() { return ppt::scenario::output_root() / "cli_test"; }

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(root());
  const fs::path p = root() / (name + ".ini");
  std::ofstream(p) << text;
  return p;
}

constexpr const char* kTiny = R"([scenario]
name = tiny
seed = 5
[topology]
n_potential = 30
edge_probability = 0.3
server_adjacent = 4
[keying]
pool_size = 150
ring_size = 20
suite = lightweight
[protocol]
n_target = 12
rounds = 2
[model]
dim = 2
)";

const std::string kDefault = std::string(PPT_SCENARIO_DIR) + "/paper_default.ini";

TEST(Cli, RunShippedScenario) {
  const fs::path out = root() / "default";
  fs::remove_all(out);
  const Invocation r = ppt("run " + kDefault + " --output " + out.string());
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("completed 5/5 rounds"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / "rounds.csv"));
  EXPECT_FALSE(fs::exists(out / "keys.txt"));
}

TEST(Cli, SeedOverrideChangesHash) {
  const fs::path cfg = write_config("tiny", kTiny);
  const Invocation a = ppt("run " + cfg.string() + " --output " + (root() / "a").string());
  const Invocation b = ppt("run " + cfg.string() + " --output " + (root() / "b").string());
  const Invocation c = ppt("run " + cfg.string() + " --seed 6 --output " + (root() / "c").string());
  ASSERT_EQ(a.status, 0) << a.out;
  auto hash = [](const std::string& out) {
    const auto at = out.find("scenario hash ");
    return at == std::string::npos ? std::string() : out.substr(at + 14, 64);
  };
  EXPECT_EQ(hash(a.out).size(), 64u);
  EXPECT_EQ(hash(a.out), hash(b.out));
  EXPECT_NE(hash(a.out), hash(c.out));
}

TEST(Cli, DebugDumpKeys) {
  const fs::path cfg = write_config("tiny", kTiny);
  const fs::path out = root() / "keys";
  fs::remove_all(out);
  const Invocation r = ppt("run " + cfg.string() + " --debug-dump-keys --output " + out.string());
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_TRUE(fs::exists(out / "keys.txt"));
}

TEST(Cli, RelativeOutputUsesEnvRoot) {
  const fs::path cfg = write_config("tiny", kTiny);
  const fs::path env_root = root() / "envroot";
  fs::remove_all(env_root);
  const Invocation r = ppt("run " + cfg.string() + " --output rel");
  ASSERT_EQ(r.status, 0) << r.out;
  const std::string cmd = "PPT_OUTPUT_ROOT=" + env_root.string() + " " + PPT_CLI_PATH +
                          " run " + cfg.string() + " --output rel > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(env_root / "rel" / "summary.json"));
}

TEST(Cli, VerifyOracle) {
  const Invocation r = ppt("verify-oracle " + write_config("tiny", kTiny).string());
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("bit-identical"), std::string::npos);
}

TEST(Cli, ConfigErrorExitsTwo) {
  const Invocation bad = ppt("run " + write_config("bad", "[keying]\nring_size = 0\n").string());
  EXPECT_EQ(bad.status, 2);
  EXPECT_NE(bad.out.find("ring_size"), std::string::npos) << bad.out;
  EXPECT_EQ(ppt("verify-oracle " + write_config("bad2", "[bogus]\n").string()).status, 2);
}

TEST(Cli, UsageErrors) {
  EXPECT_NE(ppt("").status, 0);
  EXPECT_NE(ppt("run").status, 0);
  EXPECT_NE(ppt("run /nonexistent.ini").status, 0);
  EXPECT_NE(ppt("frobnicate").status, 0);
  EXPECT_EQ(ppt("--help").status, 0);
}

TEST(Cli, SweepDropoutBench) {
  const Invocation sweep = ppt("sweep-connectivity --pools 500 --rings 5,10 --n 40 --trials 200 "
                        "--graph-trials 2 --output " + (root() / "sweep").string());
  ASSERT_EQ(sweep.status, 0) << sweep.out;
  EXPECT_EQ(sweep.out.rfind(ppt::scenario::kSweepHeader, 0), 0u) << sweep.out;
  EXPECT_TRUE(fs::exists(root() / "sweep" / "connectivity.csv"));

  const Invocation drop = ppt("dropout-series " + write_config("tiny", kTiny).string() +
                       " --counts 0,2 --reps 2 --output " + (root() / "drop").string());
  ASSERT_EQ(drop.status, 0) << drop.out;
  EXPECT_EQ(drop.out.rfind(ppt::scenario::kDropoutHeader, 0), 0u) << drop.out;
  EXPECT_TRUE(fs::exists(root() / "drop" / "dropout_series.csv"));

  const Invocation bench = ppt("bench --dim 8 --iterations 3 --reps 2 --suite lightweight --output " +
                        (root() / "bench").string());
  ASSERT_EQ(bench.status, 0) << bench.out;
  EXPECT_EQ(bench.out.rfind(ppt::scenario::kBenchHeader, 0), 0u) << bench.out;
  EXPECT_TRUE(fs::exists(root() / "bench" / "bench.csv"));

  EXPECT_EQ(ppt("sweep-connectivity --pools 10 --rings 20 --output " +
                (root() / "sweep2").string()).status,
            2);
}

}  // namespace
