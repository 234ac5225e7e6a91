#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlsh/calibration.hpp"
#include "mlsh/index.hpp"
#include "mlsh/io.hpp"
#include "mlsh/query.hpp"

namespace mlsh {

struct SyntheticSource {
  std::size_t n = 10000;
  std::size_t dim = 32;
  std::size_t planted = 10;  // t per query
};

struct BenchConfig {
  // File input when set: the last `query_count` rows are held out as
  // queries. Otherwise a planted instance is generated.
  std::optional<std::filesystem::path> input;
  InputFormat format = InputFormat::Fvecs;
  SyntheticSource synthetic;

  std::size_t query_count = 100;
  double radius = 0.4;
  double approx_c = 2.0;
  std::uint64_t budget_L = kUnboundedBudget;
  FamilyKind family = FamilyKind::CrossPolytope;
  std::size_t trials = 20000;
  std::size_t max_probes = 16;
  std::uint64_t seed = 0;
  std::vector<QueryMode> modes{QueryMode::Adaptive, QueryMode::SingleProbe, QueryMode::BruteForce};
  std::size_t fixed_level = 0;  // 0: the index's K
  std::size_t fixed_probes = 1;
  std::optional<std::filesystem::path> cache_dir;
};

nlohmann::json to_json(const BenchConfig& config);

// Hash family with its defaults for a given kind and dimension.
FamilyParams default_family(FamilyKind kind, std::size_t dim);

// Calibrates with K = compute_k(n, p2): p2 is measured first with exactly
// the stream calibrate() uses, so the table covers the index's levels.
// With a cache directory, results are reused across runs keyed by a content
// hash of every input.
FamilyCalibration calibrate_for_size(CalibrationRequest request, std::size_t n,
                                     const std::optional<std::filesystem::path>& cache_dir = {});

std::string calibration_cache_key(const CalibrationRequest& request);

struct QueryRecord {
  QueryMode mode = QueryMode::Adaptive;
  std::size_t query = 0;
  std::size_t truth_size = 0;
  std::size_t hits = 0;
  double recall = 0.0;
  std::size_t t_reported = 0;
  std::uint64_t work_examined = 0;
  std::uint64_t buckets_probed = 0;
  std::uint64_t size_lookups = 0;
  std::uint64_t pairs_examined = 0;
  std::size_t k_best = 0;
  std::size_t j_best = 1;
  std::uint64_t w_best = 0;
  bool fallback = false;
  double wall_time_seconds = 0.0;
};

// Timing is excluded by default so fixed-seed runs are byte-identical.
nlohmann::json to_json(const QueryRecord& record, bool include_timing = false);

// |returned ∩ truth|. Both lists ascending.
std::size_t count_hits(const std::vector<Neighbor>& returned, const std::vector<std::size_t>& truth);

// |returned ∩ truth| / max(1, |truth|).
double recall(const std::vector<Neighbor>& returned, const std::vector<std::size_t>& truth);

struct ModeSummary {
  QueryMode mode = QueryMode::Adaptive;
  std::size_t queries = 0;
  double mean_recall = 0.0;
  double median_recall = 0.0;
  double mean_work_examined = 0.0;
  double mean_buckets_probed = 0.0;
  double mean_t_reported = 0.0;
  double mean_w_best = 0.0;
  std::size_t fallbacks = 0;
  double total_wall_seconds = 0.0;
};

// Aggregates the records of one mode.
ModeSummary summarize(QueryMode mode, const std::vector<QueryRecord>& records);

struct BenchReport {
  nlohmann::json config;
  nlohmann::json environment;
  FamilyCalibration calibration;
  std::size_t n = 0;
  std::size_t dim = 0;
  std::size_t levels = 0;
  std::size_t repetitions = 0;
  double build_seconds = 0.0;
  std::vector<ModeSummary> summaries;
  std::vector<QueryRecord> records;  // ordered by mode, then query id
};

BenchReport run_benchmark(const BenchConfig& config);

nlohmann::json to_json(const BenchReport& report);
void write_records_jsonl(const std::filesystem::path& path, const std::vector<QueryRecord>& records,
                         bool include_timing = false);

struct TrendFit {
  QueryMode mode = QueryMode::Adaptive;
  std::vector<std::size_t> sizes;
  std::vector<double> mean_work;
  std::vector<double> mean_t;
  double exponent = 0.0;   // slope of ln(mean work - mean t) against ln n
  double intercept = 0.0;
  std::vector<double> residuals;
  bool output_dominated = false;  // t is at least half the work somewhere
};

// Runs the planted benchmark at every size and fits one exponent per mode
// in config.modes. Needs >= 3 sizes.
std::vector<TrendFit> scaling_trend(const std::vector<std::size_t>& sizes, const BenchConfig& config);

nlohmann::json to_json(const TrendFit& fit);

}  // namespace mlsh
