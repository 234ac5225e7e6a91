#include "mlsh/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <thread>

#include "mlsh/error.hpp"
#include "mlsh/random.hpp"

namespace mlsh {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json environment_json() {
  nlohmann::json env;
#if defined(__clang__)
  env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = std::string("gcc ") + __VERSION__;
#else
  env["compiler"] = "unknown";
#endif
  env["cxx_standard"] = __cplusplus;
  env["hardware_threads"] = std::thread::hardware_concurrency();
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  env["timestamp"] = stamp;
  return env;
}

}  // namespace

FamilyParams default_family(FamilyKind kind, std::size_t dim) {
  return kind == FamilyKind::SphericalCap ? FamilyParams::spherical_cap(dim)
                                          : FamilyParams::cross_polytope(dim);
}

nlohmann::json to_json(const BenchConfig& config) {
  nlohmann::json j;
  if (config.input) {
    j["input"] = config.input->string();
    j["format"] = to_string(config.format);
  } else {
    j["synthetic"] = {{"n", config.synthetic.n},
                      {"dim", config.synthetic.dim},
                      {"planted", config.synthetic.planted}};
  }
  j["query_count"] = config.query_count;
  j["radius"] = config.radius;
  j["approx_c"] = config.approx_c;
  if (config.budget_L == kUnboundedBudget) {
    j["budget_L"] = nullptr;
  } else {
    j["budget_L"] = config.budget_L;
  }
  j["family"] = to_string(config.family);
  j["trials"] = config.trials;
  j["max_probes"] = config.max_probes;
  j["seed"] = config.seed;
  std::vector<std::string> modes;
  for (auto m : config.modes) modes.emplace_back(to_string(m));
  j["modes"] = modes;
  j["fixed_level"] = config.fixed_level;
  j["fixed_probes"] = config.fixed_probes;
  return j;
}

std::string calibration_cache_key(const CalibrationRequest& req) {
  nlohmann::json j;
  j["family"] = to_json(req.family);
  j["r"] = req.r;
  j["c"] = req.c;
  j["levels"] = req.levels;
  j["max_probes"] = req.max_probes;
  j["trials"] = req.trials;
  j["seed"] = req.seed;
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return hex;
}

FamilyCalibration calibrate_for_size(CalibrationRequest request, std::size_t n,
                                     const std::optional<std::filesystem::path>& cache_dir) {
  validate(request);
  // Same stream as calibrate()'s far estimate.
  const auto far = estimate_collision_prob(request.family, request.c * request.r, request.trials,
                                           derive_seed(request.seed, 2));
  const double p2 = far.probability > 0.0 ? far.probability
                                          : 1.0 / static_cast<double>(request.trials);
  request.levels = p2 < 1.0 ? compute_k(n, p2) : 1;

  std::filesystem::path cached;
  if (cache_dir) {
    cached = *cache_dir / ("calibration-" + calibration_cache_key(request) + ".json");
    std::ifstream in(cached);
    if (in) {
      try {
        return calibration_from_json(nlohmann::json::parse(in));
      } catch (const std::exception&) {
        // Unreadable cache entries are recomputed and overwritten.
      }
    }
  }
  auto cal = calibrate(request);
  if (cache_dir) {
    std::filesystem::create_directories(*cache_dir);
    std::ofstream out(cached, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write calibration cache " + cached.string());
    out << to_json(cal).dump(2) << '\n';
  }
  return cal;
}

nlohmann::json to_json(const QueryRecord& r, bool include_timing) {
  nlohmann::json j;
  j["mode"] = to_string(r.mode);
  j["query"] = r.query;
  j["truth_size"] = r.truth_size;
  j["hits"] = r.hits;
  j["recall"] = r.recall;
  j["t_reported"] = r.t_reported;
  j["work_examined"] = r.work_examined;
  j["buckets_probed"] = r.buckets_probed;
  j["size_lookups"] = r.size_lookups;
  j["pairs_examined"] = r.pairs_examined;
  j["k_best"] = r.k_best;
  j["j_best"] = r.j_best;
  j["w_best"] = r.w_best;
  j["fallback"] = r.fallback;
  if (include_timing) j["wall_time_seconds"] = r.wall_time_seconds;
  return j;
}

std::size_t count_hits(const std::vector<Neighbor>& returned, const std::vector<std::size_t>& truth) {
  std::size_t hits = 0;
  auto it = truth.begin();
  for (const auto& nb : returned) {
    it = std::lower_bound(it, truth.end(), static_cast<std::size_t>(nb.id));
    if (it != truth.end() && *it == nb.id) ++hits;
  }
  return hits;
}

double recall(const std::vector<Neighbor>& returned, const std::vector<std::size_t>& truth) {
  return static_cast<double>(count_hits(returned, truth)) / static_cast<double>(std::max<std::size_t>(1, truth.size()));
}

ModeSummary summarize(QueryMode mode, const std::vector<QueryRecord>& records) {
  ModeSummary s;
  s.mode = mode;
  std::vector<double> recalls;
  for (const auto& r : records) {
    if (r.mode != mode) continue;
    ++s.queries;
    recalls.push_back(r.recall);
    s.mean_recall += r.recall;
    s.mean_work_examined += static_cast<double>(r.work_examined);
    s.mean_buckets_probed += static_cast<double>(r.buckets_probed);
    s.mean_t_reported += static_cast<double>(r.t_reported);
    s.mean_w_best += static_cast<double>(r.w_best);
    s.fallbacks += r.fallback ? 1 : 0;
    s.total_wall_seconds += r.wall_time_seconds;
  }
  if (s.queries == 0) return s;
  const double q = static_cast<double>(s.queries);
  s.mean_recall /= q;
  s.mean_work_examined /= q;
  s.mean_buckets_probed /= q;
  s.mean_t_reported /= q;
  s.mean_w_best /= q;
  std::sort(recalls.begin(), recalls.end());
  const std::size_t mid = recalls.size() / 2;
  s.median_recall = recalls.size() % 2 ? recalls[mid] : 0.5 * (recalls[mid - 1] + recalls[mid]);
  return s;
}

namespace {

struct Workload {
  Dataset dataset;
  std::vector<UnitPoint> queries;
  std::vector<std::vector<std::size_t>> truth;
};

Workload load_workload(const BenchConfig& config) {
  if (!config.input) {
    PlantedSpec spec;
    spec.n = config.synthetic.n;
    spec.dim = config.synthetic.dim;
    spec.radius = config.radius;
    spec.planted = config.synthetic.planted;
    spec.queries = config.query_count;
    spec.seed = config.seed;
    auto inst = generate_planted_instance(spec);
    return Workload{std::move(inst.dataset), std::move(inst.queries), std::move(inst.ground_truth)};
  }
  auto raw = ingest(*config.input, config.format);
  if (raw.size() <= config.query_count) {
    fail(ErrorKind::InvalidArgument, "input has " + std::to_string(raw.size()) +
                                         " vectors; need more than query_count=" +
                                         std::to_string(config.query_count));
  }
  std::vector<std::vector<double>> held_out(raw.end() - static_cast<std::ptrdiff_t>(config.query_count),
                                            raw.end());
  raw.resize(raw.size() - config.query_count);
  auto normalized = normalize_dataset(raw);
  Workload w{std::move(normalized.dataset), {}, {}};
  for (std::size_t q = 0; q < held_out.size(); ++q) {
    w.queries.push_back(w.dataset.map_query(held_out[q], q));
    w.truth.push_back(brute_force_range(w.dataset, w.queries.back(), config.radius));
  }
  return w;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& config) {
  if (config.modes.empty()) fail(ErrorKind::InvalidArgument, "benchmark needs at least one mode");
  if (!(config.radius > 0.0 && config.radius < 2.0)) {
    fail(ErrorKind::InvalidArgument, "radius must lie in (0, 2)");
  }
  auto workload = load_workload(config);

  BenchReport report;
  report.config = to_json(config);
  report.environment = environment_json();
  report.n = workload.dataset.size();
  report.dim = workload.dataset.dim();

  CalibrationRequest req;
  req.family = default_family(config.family, workload.dataset.dim());
  req.r = config.radius;
  req.c = config.approx_c;
  req.max_probes = config.max_probes;
  req.trials = config.trials;
  req.seed = derive_seed(config.seed, 0x63616cULL);
  report.calibration = calibrate_for_size(req, workload.dataset.size(), config.cache_dir);

  BuildParams params;
  params.space_budget = config.budget_L;
  params.family = req.family;
  params.calibration = report.calibration;
  params.seed = derive_seed(config.seed, 0x6275696cULL);
  const auto build_start = std::chrono::steady_clock::now();
  const auto index = MultiLevelIndex::build(workload.dataset, params);
  report.build_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - build_start).count();
  report.levels = index.levels();
  report.repetitions = index.repetitions();

  const std::size_t fixed_level = config.fixed_level == 0 ? index.levels() : config.fixed_level;
  for (QueryMode mode : config.modes) {
    for (std::size_t q = 0; q < workload.queries.size(); ++q) {
      const auto& query = workload.queries[q];
      QueryReport qr;
      switch (mode) {
        case QueryMode::Adaptive:
          qr = adaptive_multiprobe(index, query, config.radius);
          break;
        case QueryMode::SingleProbe:
          qr = single_probe_adaptive(index, query, config.radius);
          break;
        case QueryMode::FixedLevel:
          qr = fixed_level_query(index, query, config.radius, fixed_level, config.fixed_probes);
          break;
        case QueryMode::BruteForce:
          qr = brute_force_query(index.dataset(), query, config.radius);
          break;
      }
      QueryRecord rec;
      rec.mode = mode;
      rec.query = q;
      rec.truth_size = workload.truth[q].size();
      rec.hits = count_hits(qr.result, workload.truth[q]);
      rec.recall = recall(qr.result, workload.truth[q]);
      rec.t_reported = qr.t_reported;
      rec.work_examined = qr.work_examined;
      rec.buckets_probed = qr.buckets_probed;
      rec.size_lookups = qr.size_lookups;
      rec.pairs_examined = qr.pairs_examined;
      rec.k_best = qr.k_best;
      rec.j_best = qr.j_best;
      rec.w_best = qr.w_best;
      rec.fallback = qr.fallback;
      rec.wall_time_seconds = qr.wall_time_seconds;
      report.records.push_back(rec);
    }
    report.summaries.push_back(summarize(mode, report.records));
  }
  return report;
}

nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json j;
  j["format"] = "mlsh-bench-report";
  j["version"] = 1;
  j["config"] = report.config;
  j["environment"] = report.environment;
  j["calibration"] = {{"p1", report.calibration.p1},
                      {"p2", report.calibration.p2},
                      {"rho", report.calibration.rho},
                      {"trials", report.calibration.trials},
                      {"levels", report.calibration.levels},
                      {"warnings", report.calibration.warnings}};
  j["index"] = {{"n", report.n},
                {"dim", report.dim},
                {"K", report.levels},
                {"R", report.repetitions},
                {"build_seconds", report.build_seconds}};
  auto modes = nlohmann::json::array();
  for (const auto& s : report.summaries) {
    modes.push_back({{"mode", to_string(s.mode)},
                     {"queries", s.queries},
                     {"mean_recall", s.mean_recall},
                     {"median_recall", s.median_recall},
                     {"mean_work_examined", s.mean_work_examined},
                     {"mean_buckets_probed", s.mean_buckets_probed},
                     {"mean_t_reported", s.mean_t_reported},
                     {"mean_w_best", s.mean_w_best},
                     {"fallbacks", s.fallbacks},
                     {"total_wall_seconds", s.total_wall_seconds},
                     {"mean_wall_seconds",
                      s.queries ? s.total_wall_seconds / static_cast<double>(s.queries) : 0.0}});
  }
  j["modes"] = std::move(modes);
  return j;
}

void write_records_jsonl(const std::filesystem::path& path, const std::vector<QueryRecord>& records,
                         bool include_timing) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  for (const auto& r : records) out << to_json(r, include_timing).dump() << '\n';
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<TrendFit> scaling_trend(const std::vector<std::size_t>& sizes, const BenchConfig& config) {
  if (sizes.size() < 3) fail(ErrorKind::InvalidArgument, "scaling trend needs at least 3 sizes");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) fail(ErrorKind::InvalidArgument, "sizes must be increasing");
  }
  if (config.input) fail(ErrorKind::InvalidArgument, "scaling trend runs on synthetic data only");

  std::vector<TrendFit> fits(config.modes.size());
  for (std::size_t m = 0; m < config.modes.size(); ++m) fits[m].mode = config.modes[m];
  for (std::size_t n : sizes) {
    BenchConfig cfg = config;
    cfg.synthetic.n = n;
    const auto report = run_benchmark(cfg);
    for (std::size_t m = 0; m < fits.size(); ++m) {
      const auto& s = report.summaries[m];
      fits[m].sizes.push_back(n);
      fits[m].mean_work.push_back(s.mean_work_examined);
      fits[m].mean_t.push_back(s.mean_t_reported);
    }
  }

  for (auto& fit : fits) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < fit.sizes.size(); ++i) {
      const double residual_work = fit.mean_work[i] - fit.mean_t[i];
      if (!(residual_work > 0.0)) {
        fail(ErrorKind::InvalidArgument, "degenerate trend fit: mean work does not exceed t at n=" +
                                             std::to_string(fit.sizes[i]));
      }
      if (fit.mean_t[i] >= 0.5 * fit.mean_work[i]) fit.output_dominated = true;
      xs.push_back(std::log(static_cast<double>(fit.sizes[i])));
      ys.push_back(std::log(residual_work));
    }
    const double count = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= count;
    my /= count;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    fit.exponent = sxy / sxx;
    fit.intercept = my - fit.exponent * mx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      fit.residuals.push_back(ys[i] - (fit.intercept + fit.exponent * xs[i]));
    }
  }
  return fits;
}

nlohmann::json to_json(const TrendFit& fit) {
  return {{"mode", to_string(fit.mode)},     {"sizes", fit.sizes},
          {"mean_work", fit.mean_work},      {"mean_t", fit.mean_t},
          {"exponent", fit.exponent},        {"intercept", fit.intercept},
          {"residuals", fit.residuals},      {"output_dominated", fit.output_dominated}};
}

}  // namespace mlsh
