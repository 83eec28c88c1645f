#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Result cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" STM_CLI_PATH "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("stm_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

const char* kSmallConfig = R"(synthetic: {scenario: leaf, mode_size: 8, samples_per_class: 5, seed: 2}
noise_levels: [0.01]
kernels: [subspace, wsek]
ranks: [2]
c_grid: [1, 4]
g_grid: [0.5, 1]
repeats: 2
folds: 2
record_timing: false
)";

}  // namespace

TEST_F(Cli, SynthExportsLoadableDataset) {
  const Result r = cli("synth --scenario core --mode-size 6 --samples-per-class 3 --seed 4 --out \"" +
                       (dir / "ds").string() + "\"");
  ASSERT_EQ(r.status, 0) << r.out;
  const std::string manifest = slurp(dir / "ds" / "manifest.csv");
  EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 6);
  EXPECT_NE(manifest.find(",-1\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "ds" / "sample_1.tnsr"));

  std::ofstream(dir / "cfg.yaml") << "source: directory\ndataset_dir: ds\nranks: [2]\nc_grid: [1]\n"
                                     "g_grid: [1]\nrepeats: 1\nfolds: 3\nkernels: [wsek]\n";
  const Result run = cli("run \"" + (dir / "cfg.yaml").string() + "\" --out \"" + (dir / "out").string() + "\"");
  ASSERT_EQ(run.status, 0) << run.out;
  EXPECT_NE(slurp(dir / "out" / "report.csv").find("wsek,2,,"), std::string::npos);
}

TEST_F(Cli, RunWritesReportAndReportRerenders) {
  std::ofstream(dir / "cfg.yaml") << kSmallConfig;
  const Result run = cli("run \"" + (dir / "cfg.yaml").string() + "\" --threads 2 --out \"" +
                         (dir / "out").string() + "\"");
  ASSERT_EQ(run.status, 0) << run.out;
  const std::string csv = slurp(dir / "out" / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "kernel,rank,noise,mean_acc,std,ci95,C,g,kernel_seconds,train_seconds");
  const Result rep = cli("report \"" + (dir / "out" / "summary.json").string() + "\"");
  ASSERT_EQ(rep.status, 0);
  EXPECT_EQ(rep.out, csv);
  const Result rep_file = cli("report \"" + (dir / "out" / "summary.json").string() + "\" --csv \"" +
                              (dir / "again.csv").string() + "\"");
  ASSERT_EQ(rep_file.status, 0);
  EXPECT_EQ(slurp(dir / "again.csv"), csv);
}

TEST_F(Cli, FailuresPrintMachineReadableErrorLine) {
  std::ofstream(dir / "bad.yaml") << "folds: 1\n";
  for (const std::string& args : {std::string("run \"") + (dir / "bad.yaml").string() + "\"",
                                  std::string("run /no/such/config.yaml"), std::string("frobnicate"),
                                  std::string("report \"") + (dir / "bad.yaml").string() + "\"",
                                  std::string("synth --out \"") + (dir / "x").string() + "\" --noise 0"}) {
    const Result r = cli(args);
    EXPECT_NE(r.status, 0) << args;
    const auto line = r.out.substr(0, r.out.find('\n'));
    const auto j = nlohmann::json::parse(line, nullptr, false);
    ASSERT_FALSE(j.is_discarded()) << r.out;
    EXPECT_TRUE(j.contains("error") && j.contains("message")) << line;
  }
}

TEST_F(Cli, ThreadsFlagValidated) {
  std::ofstream(dir / "cfg.yaml") << kSmallConfig;
  EXPECT_NE(cli("run \"" + (dir / "cfg.yaml").string() + "\" --threads 0").status, 0);
}

TEST_F(Cli, EnvironmentSelectsSimdAndThreads) {
  std::ofstream(dir / "cfg.yaml") << kSmallConfig;
  const Result r = cli("run \"" + (dir / "cfg.yaml").string() + "\" --out \"" + (dir / "out").string() + "\"",
                       "STM_SIMD=scalar STM_THREADS=2");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  EXPECT_EQ(j["simd"], "scalar");
}
