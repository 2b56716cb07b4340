#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const fs::path kWorkDir = fs::temp_directory_path() / "gstnet_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(GSTNET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("count hits the reported resnet50 totals") {
  fs::create_directories(kWorkDir);
  const fs::path out = kWorkDir / "count.csv";
  const int code = run("count --backbone resnet50 --block gst --alpha 0.25 --beta 0.5 "
                       "--classes 174 --format csv --output " + out.string());
  CHECK(code == 0);
  const std::string csv = slurp(out);
  const auto pos = csv.rfind("total,,");
  REQUIRE(pos != std::string::npos);
  const long long total = std::stoll(csv.substr(pos + 7));
  CHECK(std::abs(total - 21'000'000LL) <= 150'000LL);
}

TEST_CASE("flops reproduces the 8-frame gflops") {
  const fs::path out = kWorkDir / "flops.csv";
  const int code = run("flops --backbone resnet50 --block gst --alpha 1/4 --frames 8 --size 224 "
                       "--format csv --output " + out.string());
  CHECK(code == 0);
  const std::string csv = slurp(out);
  const auto pos = csv.rfind(",");
  REQUIRE(pos != std::string::npos);
  const double macs = std::stod(csv.substr(pos + 1));
  CHECK(macs > 29.5e9 * 0.97);
  CHECK(macs < 29.5e9 * 1.03);
}

TEST_CASE("identical flags give byte-identical outputs") {
  const fs::path a = kWorkDir / "a.json";
  const fs::path b = kWorkDir / "b.json";
  CHECK(run("count --backbone resnet18 --block p3d --classes 10 --output " + a.string()) == 0);
  CHECK(run("count --backbone resnet18 --block p3d --classes 10 --output " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
}

TEST_CASE("unknown flags are a usage error") {
  CHECK(run("count --no-such-flag") == 1);
  CHECK(run("definitely-not-a-subcommand") == 1);
  CHECK(run("analyze --checkpoint /nonexistent/path") == 1);
}

TEST_CASE("gradcheck passes for every block family") {
  CHECK(run("gradcheck --block p3d --seed 7 --samples 6 --width 8") == 0);
  CHECK(run("gradcheck --block gst --alpha 1/4 --seed 3 --samples 6 --width 8") == 0);
  CHECK(run("gradcheck --block c3dg --groups 2 --seed 5 --samples 6 --width 8") == 0);
}

TEST_CASE("compare emits one row per block kind") {
  const fs::path out = kWorkDir / "compare.csv";
  const int code = run("compare --backbone tiny --channels 1 --classes 4 --frames 4 --size 16 "
                       "--width 8 --blocks c2d,gst:1/2 --format csv --output " + out.string());
  CHECK(code == 0);
  const std::string csv = slurp(out);
  CHECK(csv.rfind("model,params,macs\n", 0) == 0);
  int lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 3);  // header + two rows
}

TEST_CASE("train then analyze round-trips through the checkpoint") {
  const fs::path run_dir = kWorkDir / "run";
  fs::remove_all(run_dir);
  const int code = run("train --block gst --alpha 1/4 --stages 1 --width 8 --size 16 "
                       "--clip-frames 4 --segments 4 --epochs 2 --clips 4 --eval-clips 2 "
                       "--train-seed 11 --out " + run_dir.string());
  CHECK(code == 0);
  CHECK(fs::exists(run_dir / "history.csv"));
  CHECK(fs::exists(run_dir / "checkpoint" / "manifest.json"));
  CHECK(fs::exists(run_dir / "checkpoint" / "weights.bin"));

  const std::string history = slurp(run_dir / "history.csv");
  CHECK(history.rfind("epoch,train_loss,train_acc,eval_acc\n", 0) == 0);

  const fs::path report = kWorkDir / "analysis.json";
  const fs::path hist_dir = kWorkDir / "hists";
  const int code2 = run("analyze --checkpoint " + (run_dir / "checkpoint").string() +
                        " --report all --trials 4 --hist-dir " + hist_dir.string() +
                        " --output " + report.string());
  CHECK(code2 == 0);
  const std::string json = slurp(report);
  CHECK(json.find("bn_attribution") != std::string::npos);
  CHECK(json.find("frame_trace") != std::string::npos);
  CHECK(json.find("shuffle_sensitivity") != std::string::npos);

  int hist_files = 0;
  for (const auto& entry : fs::directory_iterator(hist_dir)) {
    ++hist_files;
    const std::string csv = slurp(entry.path());
    CHECK(csv.rfind("bin_left,bin_right,spatial_count,temporal_count\n", 0) == 0);
  }
  CHECK(hist_files == 2);  // 1 stage x 1 block x 2 substituted convs
}

TEST_CASE("output directory env var anchors relative paths") {
  const fs::path env_dir = kWorkDir / "envout";
  fs::remove_all(env_dir);
  fs::create_directories(env_dir);
  const std::string cmd = "GSTNET_OUTPUT_DIR=" + env_dir.string() + " " + GSTNET_CLI_PATH +
                          " count --backbone tiny --channels 1 --classes 4 --width 8 "
                          "--output via_env.json > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(env_dir / "via_env.json"));
}
