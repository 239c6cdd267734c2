#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sys/wait.h>
#include <sstream>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + TOKD_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Relative path -> contents for every regular file below root.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("gen-data is deterministic") {
  const auto dir = tokd::test::temp_dir("cli_gen");
  CHECK(run("gen-data --out " + (dir / "a").string() + " --scenes 8 --seed 1 --size 16", dir / "a.log") == 0);
  CHECK(run("gen-data --out " + (dir / "b").string() + " --scenes 8 --seed 1 --size 16", dir / "b.log") == 0);
  const auto a = tree(dir / "a"), b = tree(dir / "b");
  CHECK(a.size() == 8 * (8 + 2));
  CHECK(a == b);
}

TEST_CASE("usage errors exit nonzero") {
  const auto dir = tokd::test::temp_dir("cli_err");
  CHECK(run("gen-data --out " + dir.string() + " --frobnicate 3", dir / "flag.log") != 0);
  CHECK(slurp(dir / "flag.log").find("frobnicate") != std::string::npos);
  CHECK(run("", dir / "none.log") != 0);
  CHECK(run("eval --checkpoint " + (dir / "missing.tokd").string() + " --data " + dir.string(), dir / "missing.log") != 0);
  const auto msg = lines(slurp(dir / "missing.log"));
  REQUIRE(msg.size() == 1);
  CHECK(msg[0].starts_with("error: "));
}

TEST_CASE("train, eval and pca plumbing") {
  const auto dir = tokd::test::temp_dir("cli_train");
  const auto data = dir / "data", runs = dir / "run";
  REQUIRE(run("gen-data --out " + data.string() + " --scenes 3 --views 4 --size 16", dir / "gen.log") == 0);
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "model_preset=tiny\ntrain_preset=desk\ntotal_steps=6\nwarmup_steps=2\nbatch=1\nlog_every=3\n";
  }
  REQUIRE(run("train --data " + data.string() + " --out " + runs.string() + " --config " + (dir / "run.cfg").string() +
                  " --set variant=tokd-plus --quiet",
              dir / "train.log") == 0);
  const auto metrics = lines(slurp(runs / "metrics.csv"));
  REQUIRE(metrics.size() == 3);
  CHECK(metrics[0] == "step,lr,loss,psnr_raw,psnr_ema");
  CHECK(metrics[2].starts_with("6,"));

  REQUIRE(run("eval --checkpoint " + (runs / "checkpoint.tokd").string() + " --data " + data.string() + " --out " +
                  (dir / "eval.csv").string(),
              dir / "eval.log") == 0);
  const auto csv = lines(slurp(dir / "eval.csv"));
  REQUIRE(csv.size() == 5);
  CHECK(csv[0] == "scene,psnr,ssim,config_hash");
  CHECK(csv[1].starts_with("scene_0000,"));
  CHECK(csv[4].starts_with("mean,"));

  REQUIRE(run("pca --checkpoint " + (runs / "checkpoint.tokd").string() + " --data " + data.string() + " --out " +
                  (dir / "pca").string(),
              dir / "pca.log") == 0);
  CHECK(fs::exists(dir / "pca" / "layer_1_tgt.ppm"));

  // resuming a finished run is a no-op that still succeeds
  CHECK(run("train --data " + data.string() + " --out " + runs.string() + " --config " + (dir / "run.cfg").string() +
                " --set variant=tokd-plus --resume " + (runs / "checkpoint.tokd").string() + " --quiet",
            dir / "resume.log") == 0);
}

TEST_CASE("bench reports the three variants") {
  const auto dir = tokd::test::temp_dir("cli_bench");
  REQUIRE(run("bench --preset full", dir / "bench.log") == 0);
  const std::string out = slurp(dir / "bench.log");
  CHECK(out.find("plain") != std::string::npos);
  CHECK(out.find("tokd-plus") != std::string::npos);
}
