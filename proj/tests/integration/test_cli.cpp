#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + QUASIX_CLI_PATH + "\" " + args + " 2>/dev/null";
  Result r{-1, {}};
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Non-comment lines: CSV header plus rows.
std::string body(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) out += line + '\n';
  return out;
}

int row_count(const std::string& text) {
  const std::string b = body(text);
  return static_cast<int>(std::count(b.begin(), b.end(), '\n')) - 1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("quasix_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return "\"" + (dir_ / name).string() + "\""; }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SpectrumWritesCsvAndMetadata) {
  const auto r = run_cli("spectrum --sites 6 --params g=2 --out " + path("a.csv"));
  ASSERT_EQ(r.code, 0);
  const std::string csv = slurp(dir_ / "a.csv");
  EXPECT_EQ(row_count(csv), 64);
  EXPECT_EQ(body(csv).rfind("p_index,p,alpha,energy\n", 0), 0u);
  EXPECT_NE(csv.find("# config: "), std::string::npos);
  EXPECT_NE(slurp(dir_ / "a.json").find("\"config\""), std::string::npos);
}

TEST_F(Cli, StdoutMatchesFile) {
  const auto r = run_cli("spectrum --sites 5 --model heisenberg");
  ASSERT_EQ(r.code, 0);
  ASSERT_EQ(run_cli("spectrum --sites 5 --model heisenberg --out " + path("h.csv")).code, 0);
  EXPECT_EQ(body(r.out), body(slurp(dir_ / "h.csv")));
}

TEST_F(Cli, FilterRowsPerBlockSize) {
  const auto r = run_cli("filter --sites 6 --lmax 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(row_count(r.out), 3);
  EXPECT_EQ(row_count(run_cli("filter --sites 6").out), 5);
}

TEST_F(Cli, ReplayReproducesOutput) {
  ASSERT_EQ(run_cli("lrcheck --sites 6 --distances 1,2 --times 0.1,0.3 --out " + path("a.csv")).code, 0);
  ASSERT_EQ(run_cli("replay " + path("a.json") + " --out " + path("b.csv")).code, 0);
  ASSERT_EQ(run_cli("replay " + path("a.csv") + " --out " + path("c.csv")).code, 0);
  const std::string a = slurp(dir_ / "a.csv");
  EXPECT_EQ(slurp(dir_ / "b.csv"), a);
  EXPECT_EQ(slurp(dir_ / "c.csv"), a);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(dir_ / "c.toml") << "[spectrum]\nsites = 5\nmodel = \"tfim\"\n";
  EXPECT_EQ(row_count(run_cli("--config " + path("c.toml") + " spectrum").out), 32);
  EXPECT_EQ(row_count(run_cli("--config " + path("c.toml") + " spectrum --sites 4").out), 16);
}

TEST_F(Cli, BadInputExitsWithUsageError) {
  EXPECT_EQ(run_cli("spectrum --bogus").code, 1);
  EXPECT_EQ(run_cli("spectrum --model nope").code, 1);
  EXPECT_EQ(run_cli("spectrum --sites 2").code, 1);
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("replay " + path("missing.json")).code, 1);
}

TEST_F(Cli, Version) {
  const auto r = run_cli("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_FALSE(r.out.empty());
}
