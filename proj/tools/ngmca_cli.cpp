// ngmca command-line harness: data generation, Monte-Carlo benchmark runs,
// result plots and standalone scoring of estimates.

#include "ngmca/bench.hpp"
#include "ngmca/matrix_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ngmca;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

bench::ExperimentConfig config_from(const std::string& path) {
  if (path.empty()) {
    bench::ExperimentConfig c;
    bench::validate(c);
    return c;
  }
  return bench::load_config(path);
}

std::string matrix_name(const std::string& stem, const std::string& format) {
  return stem + (format == "csv" ? ".csv" : ".bin");
}

int cmd_generate(const std::string& config_path, const fs::path& out_dir, std::optional<std::uint64_t> seed,
                 const std::string& format) {
  const bench::ExperimentConfig c = config_from(config_path);
  const std::uint64_t s = seed.value_or(c.seed);
  const Dataset d = bench::make_dataset(c.data, s);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io::IoError("cannot create " + out_dir.string() + ": " + ec.message());
  io::write_matrix(d.S, out_dir / matrix_name("S", format));
  io::write_matrix(d.A, out_dir / matrix_name("A", format));
  io::write_matrix(d.Z, out_dir / matrix_name("Z", format));
  io::write_matrix(d.Y, out_dir / matrix_name("Y", format));

  nlohmann::ordered_json manifest;
  manifest["seed"] = s;
  manifest["n"] = c.data.n;
  manifest["m"] = c.data.m;
  manifest["r"] = c.data.r;
  manifest["snr_db"] = c.data.snr_db;
  manifest["kernel"] = {{"shape", "laplacian"}, {"fwhm", c.data.kernel_fwhm}};
  manifest["spikes_per_source"] = {c.data.min_spikes, c.data.max_spikes};
  manifest["realized_snr_db"] = realized_snr_db(d.A * d.S, d.Z);
  manifest["files"] = {{"S", matrix_name("S", format)},
                       {"A", matrix_name("A", format)},
                       {"Z", matrix_name("Z", format)},
                       {"Y", matrix_name("Y", format)}};
  const fs::path manifest_path = out_dir / "manifest.json";
  std::ofstream os(manifest_path, std::ios::binary);
  if (!os) throw io::IoError("cannot open " + manifest_path.string() + " for writing");
  os << manifest.dump(2) << '\n';
  std::cerr << "wrote S " << d.S.rows() << 'x' << d.S.cols() << ", A " << d.A.rows() << 'x' << d.A.cols() << ", Y "
            << d.Y.rows() << 'x' << d.Y.cols() << " to " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed, int jobs,
            bool quiet) {
  bench::ExperimentConfig c = config_from(config_path);
  if (seed) c.seed = *seed;
  auto progress = [quiet](const bench::ResultRow& row, std::size_t done, std::size_t total) {
    if (quiet) return;
    std::cerr << '[' << done << '/' << total << "] " << row.algorithm << ' ' << row.sweep_param << '='
              << row.sweep_value << " run " << row.run << ": median SDR " << row.sdr_median << " dB\n";
  };
  const std::vector<bench::ResultRow> rows = bench::run_grid(c, jobs, progress);
  if (out.empty() || out == "-") {
    bench::write_csv(rows, std::cout);
    return kExitOk;
  }
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io::IoError("cannot open " + path.string() + " for writing");
  bench::write_csv(rows, os);
  if (!os) throw io::IoError("write failed for " + path.string());
  return kExitOk;
}

int cmd_plot(const fs::path& csv, const fs::path& out) {
  std::ifstream is(csv, std::ios::binary);
  if (!is) throw io::IoError("cannot open " + csv.string());
  const bench::CsvTable table = bench::read_table(is);
  const bench::PlotData data = bench::summarize(table);
  if (data.skipped_rows > 0)
    std::cerr << "warning: skipped " << data.skipped_rows << " row(s) with non-numeric SDR or sweep value\n";
  std::ofstream os(out, std::ios::binary);
  if (!os) throw io::IoError("cannot open " + out.string() + " for writing");
  os << bench::render_svg(data);
  return kExitOk;
}

int cmd_eval(const fs::path& estimate, const fs::path& reference, const fs::path& noise, const std::string& out) {
  const Matrix est = io::read_matrix(estimate);
  const Matrix ref = io::read_matrix(reference);
  const Matrix z = noise.empty() ? Matrix(0, ref.cols()) : io::read_matrix(noise);
  const EvalScores sc = evaluate(est, ref, z);
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty() && out != "-") {
    file.open(out, std::ios::binary);
    if (!file) throw io::IoError("cannot open " + out + " for writing");
    os = &file;
  }
  *os << "source,matched_estimate,sdr,sir,snr,sar\n";
  for (std::size_t i = 0; i < sc.sdr.size(); ++i)
    *os << i << ',' << sc.permutation[i] << ',' << bench::format_number(sc.sdr[i]) << ','
        << bench::format_number(sc.sir[i]) << ',' << bench::format_number(sc.snr[i]) << ','
        << bench::format_number(sc.sar[i]) << '\n';
  std::cerr << "median SDR " << sc.sdr_median << " dB, mean SDR " << sc.sdr_mean << " dB\n";
  return kExitOk;
}

int cmd_separate(const fs::path& data, Index r, const std::string& algorithm, const std::string& config_path,
                 const fs::path& out_dir, std::uint64_t seed) {
  const bench::ExperimentConfig c = config_from(config_path);
  const bench::Algorithm alg = bench::parse_algorithm(algorithm);
  const Matrix y = io::read_matrix(data);
  const bench::RunOutput res = bench::separate(y, r, alg, c.solver, seed);
  fs::create_directories(out_dir);
  io::write_matrix(res.A, out_dir / "A_est.bin");
  io::write_matrix(res.S, out_dir / "S_est.bin");
  std::cerr << algorithm << ": " << res.iterations << " iterations, estimates in " << out_dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse non-negative blind source separation benchmark harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ngmca 0.1.0");

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool quiet = false;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic data set (S, A, Z, Y and a manifest)");
  std::string format = "bin";
  gen->add_option("--config", config, "INI experiment configuration ([data] section is used)")->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory (created if missing)")->required();
  gen->add_option("--seed", seed, "Seed (default: experiment.seed)");
  gen->add_option("--format", format, "Matrix file format")->check(CLI::IsMember({"bin", "csv"}));

  auto* run = app.add_subcommand("run", "Run the benchmark grid and write the results CSV");
  run->add_option("--config", config, "INI experiment configuration")->check(CLI::ExistingFile);
  run->add_option("--out", out, "Results CSV (default: stdout)");
  run->add_option("--seed", seed, "Master seed (overrides experiment.seed)");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--quiet", quiet, "No progress on stderr");

  auto* plot = app.add_subcommand("plot", "Render mean SDR per algorithm against the swept parameter as SVG");
  std::string results;
  plot->add_option("results", results, "Results CSV written by 'run'")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", out, "Output SVG")->required();

  auto* eval = app.add_subcommand("eval", "Score estimated sources against the true ones");
  std::string estimate, reference, noise;
  eval->add_option("--estimate", estimate, "Estimated sources (r x n)")->required()->check(CLI::ExistingFile);
  eval->add_option("--reference", reference, "True sources (r x n)")->required()->check(CLI::ExistingFile);
  eval->add_option("--noise", noise, "Noise rows (m x n)")->check(CLI::ExistingFile);
  eval->add_option("--out", out, "Per-source scores CSV (default: stdout)");

  auto* sep = app.add_subcommand("separate", "Factorize a data matrix with one algorithm");
  std::string data_path, algorithm = "ngmca-ana";
  Index r = 0;
  sep->add_option("--data", data_path, "Data matrix Y (m x n)")->required()->check(CLI::ExistingFile);
  sep->add_option("-r,--sources", r, "Number of sources")->required()->check(CLI::PositiveNumber);
  sep->add_option("--algorithm", algorithm, "Algorithm name");
  sep->add_option("--config", config, "INI configuration ([ngmca] and [hals] sections are used)")
      ->check(CLI::ExistingFile);
  sep->add_option("--out", out, "Output directory")->required();
  sep->add_option("--seed", seed, "Initialization seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(config, out, seed, format);
    if (*run) return cmd_run(config, out, seed, jobs, quiet);
    if (*plot) return cmd_plot(results, out);
    if (*eval) return cmd_eval(estimate, reference, noise, out);
    if (*sep) return cmd_separate(data_path, r, algorithm, config, out, seed.value_or(0));
  } catch (const bench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
