// Command-line front end: calibrate, build, query, benchmark.
//
//   mlsh probs --dim 32 --radius 0.4 --approx-c 2 --output cal.json
//   mlsh build --input base.fvecs --index base.mlsh --radius 0.4
//   mlsh query --index base.mlsh --input queries.fvecs --radius 0.4 --output out.jsonl
//   mlsh bench --n 10000 --dim 32 --radius 0.4 --mode adaptive --mode brute --output report.json
//   mlsh trend --sizes 1000,10000,100000 --mode adaptive --output trend.json
//
// Failures exit non-zero with {"error": {"kind": ..., "message": ...}} on stderr.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mlsh/bench.hpp"
#include "mlsh/calibration.hpp"
#include "mlsh/error.hpp"
#include "mlsh/index.hpp"
#include "mlsh/io.hpp"
#include "mlsh/query.hpp"

namespace {

struct CommonOptions {
  std::string format = "fvecs";
  double radius = 0.4;
  double approx_c = 2.0;
  std::optional<std::uint64_t> budget_L;
  std::string family = "cross_polytope";
  std::size_t trials = 20000;
  std::size_t max_probes = 16;
  std::uint64_t seed = 0;
  std::string cache_dir;
  std::string output;
};

void add_calibration_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--radius", o.radius, "Query radius r")->capture_default_str();
  cmd->add_option("--approx-c", o.approx_c, "Approximation factor c > 1")->capture_default_str();
  cmd->add_option("--family", o.family, "cross_polytope | spherical_cap")->capture_default_str();
  cmd->add_option("--trials", o.trials, "Monte-Carlo trials for calibration")->capture_default_str();
  cmd->add_option("--max-probes", o.max_probes, "Probe-success table width J_max")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
}

void add_build_flags(CLI::App* cmd, CommonOptions& o) {
  add_calibration_flags(cmd, o);
  cmd->add_option("--budget-L", o.budget_L, "Cap on repetitions (default: unbounded)");
  cmd->add_option("--cache-dir", o.cache_dir, "Directory for cached calibrations");
}

std::optional<std::filesystem::path> cache_path(const CommonOptions& o) {
  if (o.cache_dir.empty()) return std::nullopt;
  return std::filesystem::path(o.cache_dir);
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  if (path.empty() || path == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) mlsh::fail(mlsh::ErrorKind::Io, "cannot open " + path + " for writing");
  out << doc.dump(2) << '\n';
}

void print_warnings(const mlsh::FamilyCalibration& cal) {
  for (const auto& w : cal.warnings) std::cerr << "warning: " << w << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Multi-level spherical LSH: range search with adaptive multi-probe queries"};
  app.require_subcommand(1);
  CommonOptions o;

  // probs
  auto* probs = app.add_subcommand("probs", "Calibrate collision probabilities only");
  std::size_t probs_dim = 32;
  std::size_t probs_levels = 0;
  std::size_t probs_n = 0;
  add_calibration_flags(probs, o);
  probs->add_option("--dim", probs_dim, "Dimension")->capture_default_str();
  probs->add_option("--levels", probs_levels, "Rows K of the probe-success table");
  probs->add_option("--n", probs_n, "Dataset size; sets K = ceil(ln n / ln(1/p2))");
  probs->add_option("--output", o.output, "Calibration JSON (default: stdout)");

  // build
  auto* build = app.add_subcommand("build", "Build an index file from vectors");
  std::string input;
  std::string index_path;
  bool rebuildable = false;
  add_build_flags(build, o);
  build->add_option("--input", input, "Input vectors")->required();
  build->add_option("--format", o.format, "fvecs | csv")->capture_default_str();
  build->add_option("--index", index_path, "Index file to write")->required();
  build->add_flag("--rebuildable", rebuildable, "Store points only; recompute codes on load");

  // query
  auto* query = app.add_subcommand("query", "Run range queries against an index file");
  std::string mode_name = "adaptive";
  std::size_t level = 0;
  std::size_t probes = 1;
  query->add_option("--index", index_path, "Index file")->required();
  query->add_option("--input", input, "Query vectors")->required();
  query->add_option("--format", o.format, "fvecs | csv")->capture_default_str();
  query->add_option("--radius", o.radius, "Query radius r")->capture_default_str();
  query->add_option("--mode", mode_name, "adaptive | single | fixed | brute")->capture_default_str();
  query->add_option("--level", level, "Level for --mode fixed (default K)");
  query->add_option("--probes", probes, "Probe count for --mode fixed")->capture_default_str();
  query->add_option("--output", o.output, "JSON-lines results (default: stdout)");

  // bench and trend share the benchmark configuration
  mlsh::BenchConfig bench_cfg;
  std::vector<std::string> modes;
  bool timings = false;
  std::size_t trend_queries = 25;  // keeps t·queries below the smallest default size
  auto add_bench_flags = [&](CLI::App* cmd, std::size_t& queries) {
    add_build_flags(cmd, o);
    cmd->add_option("--n", bench_cfg.synthetic.n, "Synthetic dataset size")->capture_default_str();
    cmd->add_option("--dim", bench_cfg.synthetic.dim, "Synthetic dimension")->capture_default_str();
    cmd->add_option("--planted", bench_cfg.synthetic.planted, "Planted neighbors t per query")
        ->capture_default_str();
    cmd->add_option("--queries", queries, "Query count")->capture_default_str();
    cmd->add_option("--mode", modes, "Query modes to compare (repeatable)");
    cmd->add_option("--level", bench_cfg.fixed_level, "Level for the fixed mode (default K)");
    cmd->add_option("--probes", bench_cfg.fixed_probes, "Probe count for the fixed mode")
        ->capture_default_str();
    cmd->add_option("--output", o.output, "Report JSON (default: stdout)");
  };
  auto* bench = app.add_subcommand("bench", "Benchmark query modes against the exact oracle");
  add_bench_flags(bench, bench_cfg.query_count);
  bench->add_option("--input", input, "Vectors; the last --queries rows become queries");
  bench->add_option("--format", o.format, "fvecs | csv")->capture_default_str();
  bench->add_flag("--timings", timings, "Include per-query wall times in the records file");

  auto* trend = app.add_subcommand("trend", "Fit the work exponent over dataset sizes");
  std::vector<std::size_t> sizes{1000, 10000, 100000};
  add_bench_flags(trend, trend_queries);
  trend->add_option("--sizes", sizes, "Dataset sizes")->delimiter(',')->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  const auto family_kind = mlsh::family_kind_from_string(o.family);
  const std::uint64_t budget = o.budget_L.value_or(mlsh::kUnboundedBudget);

  if (*probs) {
    mlsh::CalibrationRequest req;
    req.family = mlsh::default_family(family_kind, probs_dim);
    req.r = o.radius;
    req.c = o.approx_c;
    req.max_probes = o.max_probes;
    req.trials = o.trials;
    req.seed = o.seed;
    mlsh::FamilyCalibration cal;
    if (probs_levels > 0) {
      req.levels = probs_levels;
      cal = mlsh::calibrate(req);
    } else {
      cal = mlsh::calibrate_for_size(req, probs_n > 0 ? probs_n : 1000);
    }
    print_warnings(cal);
    write_json(o.output, mlsh::to_json(cal));
    return 0;
  }

  if (*build) {
    const auto raw = mlsh::ingest(input, mlsh::input_format_from_string(o.format));
    auto normalized = mlsh::normalize_dataset(raw);
    if (!normalized.degenerate.empty()) {
      std::cerr << "warning: " << normalized.degenerate.size()
                << " vectors coincide with the centroid and were mapped to e_0\n";
    }
    mlsh::CalibrationRequest req;
    req.family = mlsh::default_family(family_kind, normalized.dataset.dim());
    req.r = o.radius;
    req.c = o.approx_c;
    req.max_probes = o.max_probes;
    req.trials = o.trials;
    req.seed = o.seed;
    const auto cal = mlsh::calibrate_for_size(req, normalized.dataset.size(), cache_path(o));
    print_warnings(cal);
    mlsh::BuildParams params{budget, req.family, cal, o.seed};
    const auto index = mlsh::MultiLevelIndex::build(std::move(normalized.dataset), params);
    index.save(index_path, rebuildable);
    std::cout << nlohmann::json{{"index", index_path},
                                {"n", index.dataset().size()},
                                {"dim", index.dataset().dim()},
                                {"K", index.levels()},
                                {"R", index.repetitions()},
                                {"p1", cal.p1},
                                {"p2", cal.p2},
                                {"rho", cal.rho}}
                     .dump()
              << '\n';
    return 0;
  }

  if (*query) {
    const auto index = mlsh::MultiLevelIndex::load(index_path);
    const auto raw = mlsh::ingest(input, mlsh::input_format_from_string(o.format));
    const auto mode = mlsh::query_mode_from_string(mode_name);
    std::ofstream file;
    if (!o.output.empty() && o.output != "-") {
      file.open(o.output, std::ios::trunc);
      if (!file) mlsh::fail(mlsh::ErrorKind::Io, "cannot open " + o.output + " for writing");
    }
    std::ostream& out = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto q = index.dataset().map_query(raw[i], i);
      mlsh::QueryReport report;
      switch (mode) {
        case mlsh::QueryMode::Adaptive:
          report = mlsh::adaptive_multiprobe(index, q, o.radius);
          break;
        case mlsh::QueryMode::SingleProbe:
          report = mlsh::single_probe_adaptive(index, q, o.radius);
          break;
        case mlsh::QueryMode::FixedLevel:
          report = mlsh::fixed_level_query(index, q, o.radius, level == 0 ? index.levels() : level,
                                           probes);
          break;
        case mlsh::QueryMode::BruteForce:
          report = mlsh::brute_force_query(index.dataset(), q, o.radius);
          break;
      }
      auto doc = mlsh::to_json(report);
      doc["query"] = i;
      out << doc.dump() << '\n';
    }
    return 0;
  }

  bench_cfg.radius = o.radius;
  bench_cfg.approx_c = o.approx_c;
  bench_cfg.budget_L = budget;
  bench_cfg.family = family_kind;
  bench_cfg.trials = o.trials;
  bench_cfg.max_probes = o.max_probes;
  bench_cfg.seed = o.seed;
  bench_cfg.cache_dir = cache_path(o);
  if (!modes.empty()) {
    bench_cfg.modes.clear();
    for (const auto& m : modes) bench_cfg.modes.push_back(mlsh::query_mode_from_string(m));
  }

  if (*bench) {
    if (!input.empty()) {
      bench_cfg.input = input;
      bench_cfg.format = mlsh::input_format_from_string(o.format);
    }
    const auto report = mlsh::run_benchmark(bench_cfg);
    print_warnings(report.calibration);
    write_json(o.output, mlsh::to_json(report));
    if (!o.output.empty() && o.output != "-") {
      std::filesystem::path records(o.output);
      records.replace_extension(".records.jsonl");
      mlsh::write_records_jsonl(records, report.records, timings);
    }
    return 0;
  }

  if (*trend) {
    bench_cfg.query_count = trend_queries;
    const auto fits = mlsh::scaling_trend(sizes, bench_cfg);
    auto doc = nlohmann::json::array();
    for (const auto& f : fits) doc.push_back(mlsh::to_json(f));
    write_json(o.output, nlohmann::json{{"format", "mlsh-trend"}, {"version", 1}, {"fits", doc}});
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mlsh::Error& e) {
    std::cerr << nlohmann::json{{"error", {{"kind", std::string(mlsh::to_string(e.kind()))}, {"message", e.what()}}}}.dump()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"kind", "internal"}, {"message", e.what()}}}}.dump() << '\n';
    return 3;
  }
}
