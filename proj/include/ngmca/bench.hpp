#pragma once

// Monte-Carlo benchmark harness: experiment configuration (INI), the grid
// runner, the results CSV and an SVG line chart of mean SDR per algorithm.

#include "ngmca/core.hpp"
#include "ngmca/datagen.hpp"
#include "ngmca/evaluation.hpp"
#include "ngmca/separation.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace ngmca::bench {

/// Bad configuration (unknown keys, algorithm names, invalid values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Algorithm { ngmca, ngmca_ortho, ngmca_syn, ngmca_ana, ngmca_conv, ngmca_ana_rew, ngmca_syn_rew, hals };

inline constexpr std::array<Algorithm, 8> kAllAlgorithms = {
    Algorithm::ngmca,     Algorithm::ngmca_ortho,   Algorithm::ngmca_syn,     Algorithm::ngmca_ana,
    Algorithm::ngmca_conv, Algorithm::ngmca_ana_rew, Algorithm::ngmca_syn_rew, Algorithm::hals};

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::ngmca: return "ngmca";
    case Algorithm::ngmca_ortho: return "ngmca-ortho";
    case Algorithm::ngmca_syn: return "ngmca-syn";
    case Algorithm::ngmca_ana: return "ngmca-ana";
    case Algorithm::ngmca_conv: return "ngmca-conv";
    case Algorithm::ngmca_ana_rew: return "ngmca-ana-rew";
    case Algorithm::ngmca_syn_rew: return "ngmca-syn-rew";
    case Algorithm::hals: return "hals";
  }
  return "?";
}

inline std::string algorithm_list() {
  std::string out;
  for (const Algorithm a : kAllAlgorithms) out += (out.empty() ? "" : ", ") + algorithm_name(a);
  return out;
}

inline Algorithm parse_algorithm(const std::string& name) {
  for (const Algorithm a : kAllAlgorithms)
    if (algorithm_name(a) == name) return a;
  throw ConfigError("unknown algorithm '" + name + "' (valid: " + algorithm_list() + ")");
}

enum class SweepParam { snr_db, m, r, kernel_fwhm };

inline std::string sweep_name(SweepParam p) {
  switch (p) {
    case SweepParam::snr_db: return "snr_db";
    case SweepParam::m: return "m";
    case SweepParam::r: return "r";
    case SweepParam::kernel_fwhm: return "kernel_fwhm";
  }
  return "?";
}

inline SweepParam parse_sweep(const std::string& name) {
  for (const SweepParam p : {SweepParam::snr_db, SweepParam::m, SweepParam::r, SweepParam::kernel_fwhm})
    if (sweep_name(p) == name) return p;
  throw ConfigError("unknown sweep parameter '" + name + "' (valid: snr_db, m, r, kernel_fwhm)");
}

struct DataConfig {
  Index n = 1024;
  Index m = 32;
  Index r = 12;
  double snr_db = 20.0;
  double kernel_fwhm = 4.0;
  int min_spikes = 8;
  int max_spikes = 30;
};

struct SolverConfig {
  int iterations = 300;
  int refinement_iters = 50;
  int inner_iters = 80;
  int refinement_inner_iters = 250;
  std::string wavelet = "symmlet4";
  int levels = 3;
  /// Kernel of the convolutive variant; the data kernel may differ.
  double conv_fwhm = 4.0;
  /// 0 selects the noise-based default.
  double hals_lambda = 0.0;
  int hals_iters = 300;
};

struct ExperimentConfig {
  DataConfig data;
  SolverConfig solver;
  std::vector<Algorithm> algorithms = {Algorithm::ngmca, Algorithm::ngmca_ana};
  SweepParam sweep = SweepParam::snr_db;
  std::vector<double> sweep_values = {20.0};
  int runs = 1;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  }
}

inline long long parse_int(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e15) throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
  return static_cast<long long>(v);
}

}  // namespace detail

/// Validates ranges and cross-field constraints; throws ConfigError.
inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.algorithms.empty()) fail("experiment.algorithms is empty");
  if (c.sweep_values.empty()) fail("experiment.sweep_values is empty");
  if (!std::is_sorted(c.sweep_values.begin(), c.sweep_values.end()))
    fail("experiment.sweep_values must be sorted in increasing order");
  if (c.runs < 1) fail("experiment.runs must be at least 1");
  if (c.data.n < 2 || c.data.m < 1 || c.data.r < 1) fail("data: n >= 2, m >= 1 and r >= 1 are required");
  if (c.data.min_spikes < 0 || c.data.max_spikes < c.data.min_spikes) fail("data: invalid spike count range");
  if (!(c.data.kernel_fwhm > 0.0)) fail("data.kernel_fwhm must be positive");
  if (c.solver.iterations <= c.solver.refinement_iters || c.solver.refinement_iters < 0)
    fail("ngmca: need iterations > refinement_iters >= 0");
  if (c.solver.inner_iters < 1 || c.solver.refinement_inner_iters < 1) fail("ngmca: inner budgets must be positive");
  if (c.solver.levels < 1) fail("ngmca.levels must be at least 1");
  if (!(c.solver.conv_fwhm > 0.0)) fail("ngmca.conv_fwhm must be positive");
  if (c.solver.hals_lambda < 0.0 || c.solver.hals_iters < 1) fail("hals: lambda >= 0 and iterations >= 1 required");
  try {
    (void)WaveletFilter::by_name(c.solver.wavelet);
  } catch (const InvalidInput& e) {
    fail(std::string("ngmca.wavelet: ") + e.what());
  }
  for (const double v : c.sweep_values) {
    DataConfig d = c.data;
    switch (c.sweep) {
      case SweepParam::snr_db:
        if (std::isnan(v)) fail("snr_db sweep value is NaN");
        break;
      case SweepParam::m: d.m = static_cast<Index>(v); break;
      case SweepParam::r: d.r = static_cast<Index>(v); break;
      case SweepParam::kernel_fwhm:
        if (!(v > 0.0)) fail("kernel_fwhm sweep values must be positive");
        break;
    }
    if ((c.sweep == SweepParam::m || c.sweep == SweepParam::r) && (v != std::floor(v) || v < 1.0))
      fail(sweep_name(c.sweep) + " sweep values must be positive integers");
    if (d.r > d.m) fail("more sources than measurements for sweep value " + std::to_string(v));
    if (d.r > d.n) fail("more sources than samples");
  }
  if (std::ranges::any_of(c.algorithms, [](Algorithm a) { return a != Algorithm::ngmca && a != Algorithm::hals; }) &&
      c.data.n % (Index{1} << c.solver.levels) != 0)
    fail("data.n must be divisible by 2^levels for the wavelet variants");
}

/// Reads the INI configuration. Sections and keys (all optional):
///   [data]        n, m, r, snr_db, kernel_fwhm, min_spikes, max_spikes
///   [experiment]  algorithms, sweep_param, sweep_values, runs, seed
///   [ngmca]       iterations, refinement_iters, inner_iters,
///                 refinement_inner_iters, wavelet, levels, conv_fwhm
///   [hals]        lambda (number or "auto"), iterations
inline ExperimentConfig parse_config(std::istream& is, const std::string& origin = "<config>") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  static const std::map<std::string, std::vector<std::string>> known = {
      {"data", {"n", "m", "r", "snr_db", "kernel_fwhm", "min_spikes", "max_spikes"}},
      {"experiment", {"algorithms", "sweep_param", "sweep_values", "runs", "seed"}},
      {"ngmca", {"iterations", "refinement_iters", "inner_iters", "refinement_inner_iters", "wavelet", "levels",
                 "conv_fwhm"}},
      {"hals", {"lambda", "iterations"}}};
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw ConfigError(origin + ": unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError(origin + ": key '" + section + "' outside of any section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError(origin + ": unknown key '" + full + "'");
      const std::string text = value.data();
      if (section == "data") {
        if (key == "n") c.data.n = detail::parse_int(full, text);
        else if (key == "m") c.data.m = detail::parse_int(full, text);
        else if (key == "r") c.data.r = detail::parse_int(full, text);
        else if (key == "snr_db") c.data.snr_db = detail::parse_double(full, text);
        else if (key == "kernel_fwhm") c.data.kernel_fwhm = detail::parse_double(full, text);
        else if (key == "min_spikes") c.data.min_spikes = static_cast<int>(detail::parse_int(full, text));
        else if (key == "max_spikes") c.data.max_spikes = static_cast<int>(detail::parse_int(full, text));
      } else if (section == "experiment") {
        if (key == "algorithms") {
          c.algorithms.clear();
          for (const auto& name : detail::split_list(text)) c.algorithms.push_back(parse_algorithm(name));
        } else if (key == "sweep_param") {
          c.sweep = parse_sweep(text);
        } else if (key == "sweep_values") {
          c.sweep_values.clear();
          for (const auto& v : detail::split_list(text)) c.sweep_values.push_back(detail::parse_double(full, v));
        } else if (key == "runs") {
          c.runs = static_cast<int>(detail::parse_int(full, text));
        } else if (key == "seed") {
          const long long s = detail::parse_int(full, text);
          if (s < 0) throw ConfigError(origin + ": experiment.seed must be non-negative");
          c.seed = static_cast<std::uint64_t>(s);
        }
      } else if (section == "ngmca") {
        if (key == "iterations") c.solver.iterations = static_cast<int>(detail::parse_int(full, text));
        else if (key == "refinement_iters") c.solver.refinement_iters = static_cast<int>(detail::parse_int(full, text));
        else if (key == "inner_iters") c.solver.inner_iters = static_cast<int>(detail::parse_int(full, text));
        else if (key == "refinement_inner_iters")
          c.solver.refinement_inner_iters = static_cast<int>(detail::parse_int(full, text));
        else if (key == "wavelet") c.solver.wavelet = text;
        else if (key == "levels") c.solver.levels = static_cast<int>(detail::parse_int(full, text));
        else if (key == "conv_fwhm") c.solver.conv_fwhm = detail::parse_double(full, text);
      } else if (section == "hals") {
        if (key == "lambda") c.solver.hals_lambda = text == "auto" ? 0.0 : detail::parse_double(full, text);
        else if (key == "iterations") c.solver.hals_iters = static_cast<int>(detail::parse_int(full, text));
      }
    }
  }
  try {
    validate(c);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse_config(is, path.string());
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

// ---------------------------------------------------------------------------
// Single runs

/// Data parameters at one sweep point.
inline DataConfig data_at(const ExperimentConfig& c, double sweep_value) {
  DataConfig d = c.data;
  switch (c.sweep) {
    case SweepParam::snr_db: d.snr_db = sweep_value; break;
    case SweepParam::m: d.m = static_cast<Index>(sweep_value); break;
    case SweepParam::r: d.r = static_cast<Index>(sweep_value); break;
    case SweepParam::kernel_fwhm: d.kernel_fwhm = sweep_value; break;
  }
  return d;
}

inline Dataset make_dataset(const DataConfig& d, std::uint64_t seed) {
  NmrSourceSpec spec;
  spec.n = d.n;
  spec.min_spikes = d.min_spikes;
  spec.max_spikes = d.max_spikes;
  spec.kernel = ConvolutionKernel::laplacian(d.kernel_fwhm);
  MixtureSpec mix;
  mix.m = d.m;
  mix.r = d.r;
  mix.snr_db = d.snr_db;
  mix.seed = seed;
  return gen_dataset(spec, mix);
}

/// Noise level for the HALS baseline when none is configured: MAD of the
/// first differences of Y, which sparse peaks barely affect.
inline double default_hals_lambda(const Matrix& y) {
  if (y.cols() < 3) return 0.0;
  const Matrix diff = y.rightCols(y.cols() - 1) - y.leftCols(y.cols() - 1);
  std::vector<double> all(diff.data(), diff.data() + diff.size());
  return mad_sigma(all) / std::numbers::sqrt2;
}

struct RunOutput {
  Matrix A;
  Matrix S;
  int iterations = 0;
};

inline NgmcaConfig ngmca_config(const SolverConfig& s, Algorithm a, Index n, std::uint64_t seed) {
  Variant v = Variant::direct;
  switch (a) {
    case Algorithm::ngmca: v = Variant::direct; break;
    case Algorithm::ngmca_ortho: v = Variant::ortho; break;
    case Algorithm::ngmca_syn:
    case Algorithm::ngmca_syn_rew: v = Variant::synthesis; break;
    case Algorithm::ngmca_ana:
    case Algorithm::ngmca_ana_rew: v = Variant::analysis; break;
    case Algorithm::ngmca_conv: v = Variant::convolutive; break;
    case Algorithm::hals: throw InvalidInput("hals is not an nGMCA variant");
  }
  NgmcaConfig cfg = NgmcaConfig::defaults(v, n, seed);
  const WaveletFilter filter = WaveletFilter::by_name(s.wavelet);
  if (v == Variant::ortho) cfg.transform = LinearTransform::orthonormal_wavelet(n, filter, s.levels);
  if (v == Variant::synthesis || v == Variant::analysis)
    cfg.transform = LinearTransform::undecimated_wavelet(n, filter, s.levels);
  if (v == Variant::convolutive) cfg.transform = LinearTransform::convolution(n, ConvolutionKernel::laplacian(s.conv_fwhm));
  cfg.iterations = s.iterations;
  cfg.refinement_iters = s.refinement_iters;
  cfg.inner_iters = s.inner_iters;
  cfg.refinement_inner_iters = s.refinement_inner_iters;
  cfg.reweighted = a == Algorithm::ngmca_ana_rew || a == Algorithm::ngmca_syn_rew;
  return cfg;
}

inline RunOutput separate(const Matrix& y, Index r, Algorithm a, const SolverConfig& s, std::uint64_t seed) {
  RunOutput out;
  if (a == Algorithm::hals) {
    const double lambda = s.hals_lambda > 0.0 ? s.hals_lambda : default_hals_lambda(y);
    SeparationResult res = sparse_hals_baseline(y, r, lambda, s.hals_iters, seed);
    out.A = std::move(res.A);
    out.S = std::move(res.S);
    out.iterations = res.iterations;
    return out;
  }
  SeparationResult res = run_ngmca(Problem{y, r}, ngmca_config(s, a, y.cols(), seed));
  out.A = std::move(res.A);
  out.S = std::move(res.S);
  out.iterations = res.iterations;
  return out;
}

struct ResultRow {
  std::string algorithm;
  std::string sweep_param;
  double sweep_value = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
  double sdr_median = 0.0;
  double sdr_mean = 0.0;
  double sir = 0.0;
  double snr = 0.0;
  double sar = 0.0;
  double wall_ms = 0.0;
  int iters = 0;
};

/// Seed of Monte-Carlo run `run`: data and initialization of every algorithm
/// at every sweep point derive from it.
inline std::uint64_t run_seed(std::uint64_t master, int run) {
  return derive_seed(master, static_cast<std::uint64_t>(run));
}

inline ResultRow run_one(const ExperimentConfig& c, Algorithm a, double sweep_value, int run) {
  ResultRow row;
  row.algorithm = algorithm_name(a);
  row.sweep_param = sweep_name(c.sweep);
  row.sweep_value = sweep_value;
  row.run = run;
  row.seed = run_seed(c.seed, run);
  const Dataset d = make_dataset(data_at(c, sweep_value), row.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const RunOutput out = separate(d.Y, d.S.rows(), a, c.solver, derive_seed(row.seed, 100));
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const EvalScores sc = evaluate(out.S, d.S, d.Z);
  row.sdr_median = sc.sdr_median;
  row.sdr_mean = sc.sdr_mean;
  row.sir = sc.sir_median;
  row.snr = sc.snr_median;
  row.sar = sc.sar_median;
  row.iters = out.iterations;
  return row;
}

struct GridTask {
  Algorithm algorithm;
  double sweep_value;
  int run;
};

/// Output order: sweep value, then run, then algorithm as configured.
inline std::vector<GridTask> grid_tasks(const ExperimentConfig& c) {
  std::vector<GridTask> tasks;
  for (const double v : c.sweep_values)
    for (int run = 0; run < c.runs; ++run)
      for (const Algorithm a : c.algorithms) tasks.push_back({a, v, run});
  return tasks;
}

/// Runs the whole grid on `jobs` worker threads. Rows come back in
/// grid_tasks order whatever the completion order. `progress` (optional) is
/// called under a lock after each finished task.
inline std::vector<ResultRow> run_grid(const ExperimentConfig& c, int jobs = 1,
                                       const std::function<void(const ResultRow&, std::size_t, std::size_t)>& progress = {}) {
  validate(c);
  const std::vector<GridTask> tasks = grid_tasks(c);
  std::vector<ResultRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex lock;
  std::exception_ptr failure;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        rows[i] = run_one(c, tasks[i].algorithm, tasks[i].sweep_value, tasks[i].run);
      } catch (...) {
        const std::lock_guard<std::mutex> g(lock);
        if (!failure) failure = std::current_exception();
        next.store(tasks.size());
        return;
      }
      const std::lock_guard<std::mutex> g(lock);
      ++done;
      if (progress) progress(rows[i], done, tasks.size());
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::array<const char*, 12> kCsvColumns = {"algorithm", "sweep_param", "sweep_value", "run",
                                                            "seed",      "sdr_median",  "sdr_mean",    "sir",
                                                            "snr",       "sar",         "wall_ms",     "iters"};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) os << (i ? "," : "") << kCsvColumns[i];
  os << '\n';
  for (const ResultRow& r : rows) {
    os << r.algorithm << ',' << r.sweep_param << ',' << format_number(r.sweep_value) << ',' << r.run << ',' << r.seed
       << ',' << format_number(r.sdr_median) << ',' << format_number(r.sdr_mean) << ',' << format_number(r.sir) << ','
       << format_number(r.snr) << ',' << format_number(r.sar) << ',' << std::fixed << std::setprecision(3) << r.wall_ms
       << std::defaultfloat << ',' << r.iters << '\n';
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  Index column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidInput("CSV has no column '" + name + "'");
    return static_cast<Index>(it - header.begin());
  }
};

inline CsvTable read_table(std::istream& is) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw InvalidInput("CSV row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  return t;
}

/// The CSV with the timing column blanked, for reproducibility checks.
inline std::string strip_timing(const std::string& csv) {
  std::istringstream is(csv);
  const CsvTable t = read_table(is);
  const Index wall = t.column("wall_ms");
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os << ',';
      if (static_cast<Index>(i) != wall) os << fields[i];
    }
    os << '\n';
  };
  emit(t.header);
  for (const auto& r : t.rows) emit(r);
  return os.str();
}

// ---------------------------------------------------------------------------
// SVG

struct Series {
  std::string algorithm;
  /// (sweep value, mean SDR) sorted by sweep value.
  std::vector<std::pair<double, double>> points;
};

struct PlotData {
  std::string x_label;
  std::vector<Series> series;
  /// Rows dropped because their SDR or sweep value was not a number.
  std::size_t skipped_rows = 0;
};

/// Mean of sdr_mean per (algorithm, sweep value), algorithms in order of
/// first appearance.
inline PlotData summarize(const CsvTable& t) {
  if (t.rows.empty()) throw InvalidInput("results CSV has no data rows");
  const Index alg = t.column("algorithm");
  const Index param = t.column("sweep_param");
  const Index value = t.column("sweep_value");
  const Index sdr = t.column("sdr_mean");
  PlotData out;
  out.x_label = t.rows.front()[static_cast<std::size_t>(param)];
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (const auto& row : t.rows) {
    double x = std::numeric_limits<double>::quiet_NaN(), y = x;
    try {
      x = std::stod(row[static_cast<std::size_t>(value)]);
      y = std::stod(row[static_cast<std::size_t>(sdr)]);
    } catch (const std::exception&) {
    }
    if (!std::isfinite(x) || !std::isfinite(y)) {
      ++out.skipped_rows;
      continue;
    }
    const std::string& name = row[static_cast<std::size_t>(alg)];
    if (!acc.count(name)) order.push_back(name);
    auto& cell = acc[name][x];
    cell.first += y;
    cell.second += 1;
  }
  if (order.empty()) throw InvalidInput("results CSV has no usable rows");
  for (const auto& name : order) {
    Series s;
    s.algorithm = name;
    for (const auto& [x, cell] : acc[name]) s.points.emplace_back(x, cell.first / cell.second);
    out.series.push_back(std::move(s));
  }
  return out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

/// Line chart: one polyline per algorithm, mean SDR against the swept parameter.
inline std::string render_svg(const PlotData& data) {
  constexpr double width = 720, height = 480, left = 70, right = 170, top = 30, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : data.series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) {
    xmin -= 1;
    xmax += 1;
  }
  if (ymax == ymin) {
    ymin -= 1;
    ymax += 1;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * plot_h; };
  static const std::array<const char*, 8> colors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream os;
  os << std::setprecision(6);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\""
     << top + plot_h << "\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\"/>\n";
  os << "</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4.0;
    const double y = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << px(x) << "\" y=\"" << top + plot_h + 16 << "\" text-anchor=\"middle\">" << x << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
     << xml_escape(data.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << top + plot_h / 2 << ")\">mean SDR (dB)</text>\n";
  os << "</g>\n";
  for (std::size_t k = 0; k < data.series.size(); ++k) {
    const Series& s = data.series[k];
    os << "<polyline class=\"series\" data-algorithm=\"" << xml_escape(s.algorithm) << "\" fill=\"none\" stroke=\""
       << colors[k % colors.size()] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i)
      os << (i ? " " : "") << px(s.points[i].first) << ',' << py(s.points[i].second);
    os << "\"/>\n";
  }
  os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t k = 0; k < data.series.size(); ++k) {
    const double y = top + 10 + 18.0 * static_cast<double>(k);
    const double x = left + plot_w + 15;
    os << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 20 << "\" y2=\"" << y << "\" stroke=\""
       << colors[k % colors.size()] << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << x + 26 << "\" y=\"" << y + 4 << "\">" << xml_escape(data.series[k].algorithm)
       << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace ngmca::bench
