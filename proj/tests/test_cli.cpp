#include "ngmca/bench.hpp"
#include "ngmca/matrix_io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ngmca;
namespace fs = std::filesystem;

namespace {

// Runs the CLI through the shell; returns its exit status.
int cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string("\"") + NGMCA_CLI_PATH + "\" " + args;
  cmd += stdout_file.empty() ? " > /dev/null" : " > \"" + stdout_file.string() + "\"";
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ngmca_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
  return p;
}

const char* kSmokeConfig = R"([data]
n = 256
m = 8
r = 3
min_spikes = 2
max_spikes = 8

[experiment]
algorithms = ngmca, ngmca-ana
sweep_param = snr_db
sweep_values = 10, 20
runs = 2
seed = 5
)";

}  // namespace

TEST(Cli, HelpAndVersion) {
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("--version"), 0);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
}

TEST(Cli, GenerateDefaultSizes) {
  const fs::path dir = fresh_dir("gen") / "nested" / "out";
  ASSERT_EQ(cli("generate --out \"" + dir.string() + "\""), 0);
  EXPECT_EQ(io::read_matrix(dir / "S.bin").rows(), 12);
  EXPECT_EQ(io::read_matrix(dir / "S.bin").cols(), 1024);
  const Matrix a = io::read_matrix(dir / "A.bin");
  EXPECT_EQ(a.rows(), 32);
  EXPECT_EQ(a.cols(), 12);
  const Matrix y = io::read_matrix(dir / "Y.bin");
  EXPECT_EQ(y.rows(), 32);
  EXPECT_EQ(y.cols(), 1024);
  EXPECT_EQ(io::read_matrix(dir / "Z.bin").rows(), 32);
  const std::string manifest = slurp(dir / "manifest.json");
  EXPECT_NE(manifest.find("\"seed\""), std::string::npos);
  EXPECT_NE(manifest.find("\"realized_snr_db\""), std::string::npos);
}

TEST(Cli, GenerateIsByteIdentical) {
  const fs::path base = fresh_dir("gen_repeat");
  ASSERT_EQ(cli("generate --seed 17 --format csv --out \"" + (base / "a").string() + "\""), 0);
  ASSERT_EQ(cli("generate --seed 17 --format csv --out \"" + (base / "b").string() + "\""), 0);
  for (const char* f : {"S.csv", "A.csv", "Z.csv", "Y.csv", "manifest.json"})
    EXPECT_EQ(slurp(base / "a" / f), slurp(base / "b" / f)) << f;
  ASSERT_EQ(cli("generate --seed 18 --format csv --out \"" + (base / "c").string() + "\""), 0);
  EXPECT_NE(slurp(base / "a" / "Y.csv"), slurp(base / "c" / "Y.csv"));
}

TEST(Cli, SmokeRunGrid) {
  const fs::path dir = fresh_dir("run");
  const fs::path cfg = write_file(dir / "smoke.ini", kSmokeConfig);
  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(cli("run --quiet --config \"" + cfg.string() + "\" --out \"" + (dir / "r1.csv").string() + "\""), 0);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(seconds, 60.0);
  std::ifstream is(dir / "r1.csv");
  const bench::CsvTable t = bench::read_table(is);
  EXPECT_EQ(t.rows.size(), 8u);
  EXPECT_EQ(t.header.size(), bench::kCsvColumns.size());

  // Same seed through stdout and two workers: identical apart from timing.
  ASSERT_EQ(cli("run --quiet --jobs 2 --config \"" + cfg.string() + "\"", dir / "r2.csv"), 0);
  EXPECT_EQ(bench::strip_timing(slurp(dir / "r1.csv")), bench::strip_timing(slurp(dir / "r2.csv")));
  ASSERT_EQ(cli("run --quiet --seed 6 --config \"" + cfg.string() + "\"", dir / "r3.csv"), 0);
  EXPECT_NE(bench::strip_timing(slurp(dir / "r1.csv")), bench::strip_timing(slurp(dir / "r3.csv")));

  ASSERT_EQ(cli("plot \"" + (dir / "r1.csv").string() + "\" --out \"" + (dir / "plot.svg").string() + "\""), 0);
  const std::string svg = slurp(dir / "plot.svg");
  EXPECT_NE(svg.find("data-algorithm=\"ngmca-ana\""), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path dir = fresh_dir("bad");
  const fs::path bad_alg = write_file(dir / "alg.ini", "[experiment]\nalgorithms = nmf\n");
  const fs::path bad_key = write_file(dir / "key.ini", "[data]\nwidth = 3\n");
  EXPECT_EQ(cli("run --config \"" + bad_alg.string() + "\""), 2);
  EXPECT_EQ(cli("run --config \"" + bad_key.string() + "\""), 2);
  EXPECT_EQ(cli("run --config \"" + (dir / "missing.ini").string() + "\""), 2);
  EXPECT_EQ(cli("run --jobs 0"), 2);
  EXPECT_EQ(cli("generate"), 2);
}

TEST(Cli, RuntimeErrorsExitOne) {
  const fs::path dir = fresh_dir("runtime");
  const fs::path empty = write_file(dir / "empty.csv", bench::kCsvColumns[0] + std::string(",x\n"));
  EXPECT_EQ(cli("plot \"" + empty.string() + "\" --out \"" + (dir / "p.svg").string() + "\""), 1);
  const fs::path junk = write_file(dir / "junk.bin", "not a matrix at all");
  EXPECT_EQ(cli("eval --estimate \"" + junk.string() + "\" --reference \"" + junk.string() + "\""), 1);
}

TEST(Cli, SeparateThenEval) {
  const fs::path dir = fresh_dir("sep");
  const fs::path cfg = write_file(dir / "small.ini", kSmokeConfig);
  ASSERT_EQ(cli("generate --config \"" + cfg.string() + "\" --out \"" + (dir / "data").string() + "\""), 0);
  ASSERT_EQ(cli("separate --data \"" + (dir / "data" / "Y.bin").string() + "\" -r 3 --algorithm ngmca-ana --config \"" +
                cfg.string() + "\" --out \"" + (dir / "est").string() + "\""),
            0);
  const Matrix s = io::read_matrix(dir / "est" / "S_est.bin");
  EXPECT_EQ(s.rows(), 3);
  EXPECT_EQ(s.cols(), 256);
  ASSERT_EQ(cli("eval --estimate \"" + (dir / "est" / "S_est.bin").string() + "\" --reference \"" +
                    (dir / "data" / "S.bin").string() + "\" --noise \"" + (dir / "data" / "Z.bin").string() + "\"",
                dir / "scores.csv"),
            0);
  std::ifstream is(dir / "scores.csv");
  const bench::CsvTable t = bench::read_table(is);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.header, (std::vector<std::string>{"source", "matched_estimate", "sdr", "sir", "snr", "sar"}));
  for (const auto& row : t.rows) EXPECT_GT(std::stod(row[2]), 0.0);
  EXPECT_EQ(cli("separate --data \"" + (dir / "data" / "Y.bin").string() + "\" -r 3 --algorithm nmf --out \"" +
                (dir / "x").string() + "\""),
            2);
}
