#include "mlsh/query.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>

#include "mlsh/error.hpp"

namespace mlsh {

std::string_view to_string(QueryMode mode) {
  switch (mode) {
    case QueryMode::Adaptive:
      return "adaptive";
    case QueryMode::SingleProbe:
      return "single";
    case QueryMode::FixedLevel:
      return "fixed";
    case QueryMode::BruteForce:
      return "brute";
  }
  return "unknown";
}

QueryMode query_mode_from_string(std::string_view name) {
  if (name == "adaptive") return QueryMode::Adaptive;
  if (name == "single") return QueryMode::SingleProbe;
  if (name == "fixed") return QueryMode::FixedLevel;
  if (name == "brute") return QueryMode::BruteForce;
  fail(ErrorKind::InvalidArgument, "unknown query mode '" + std::string(name) + "'");
}

nlohmann::json to_json(const QueryReport& report, bool include_timing) {
  nlohmann::json j;
  std::vector<std::uint32_t> ids;
  std::vector<double> distances;
  for (const auto& nb : report.result) {
    ids.push_back(nb.id);
    distances.push_back(nb.distance);
  }
  j["ids"] = ids;
  j["distances"] = distances;
  j["t_reported"] = report.t_reported;
  j["work_examined"] = report.work_examined;
  j["buckets_probed"] = report.buckets_probed;
  j["size_lookups"] = report.size_lookups;
  j["pairs_examined"] = report.pairs_examined;
  j["k_best"] = report.k_best;
  j["j_best"] = report.j_best;
  j["w_best"] = report.w_best;
  j["fallback"] = report.fallback;
  if (include_timing) j["wall_time_seconds"] = report.wall_time_seconds;
  return j;
}

std::uint64_t cost(std::size_t k, std::size_t j, const FamilyCalibration& calibration,
                   std::uint64_t max_reps) {
  const double p = calibration.probe_probability(k, j);
  const std::uint64_t r = p > 0.0 ? std::min(reps(k, j, p), max_reps) : max_reps;
  return static_cast<std::uint64_t>(j) * std::max<std::uint64_t>(1, r);
}

std::uint64_t query_reps(const MultiLevelIndex& index, std::size_t k, std::size_t j) {
  const double p = index.calibration().probe_probability(k, j);
  const std::uint64_t R = index.repetitions();
  if (!(p > 0.0)) return R;
  return std::clamp<std::uint64_t>(reps(k, j, p), 1, R);
}

// ---------------------------------------------------------------------------

ProbeContext::ProbeContext(const MultiLevelIndex& index, const UnitPoint& q)
    : index_(index), query_(q) {
  if (q.dim() != index.dataset().dim()) {
    fail(ErrorKind::DimensionMismatch, "query has dimension " + std::to_string(q.dim()) +
                                           ", index has " + std::to_string(index.dataset().dim()));
  }
  rankings_.resize(index.repetitions());
  levels_.resize(index.repetitions() * index.levels());
  const std::size_t U = index.params().family.bucket_universe();
  std::size_t u = 1;
  for (std::size_t k = 1; k <= index.levels(); ++k) {
    u = u > std::numeric_limits<std::size_t>::max() / U ? std::numeric_limits<std::size_t>::max()
                                                         : u * U;
    universe_.push_back(u);
  }
}

ProbeContext::Level& ProbeContext::level(std::size_t k, std::size_t rep) {
  if (k < 1 || k > index_.levels() || rep >= index_.repetitions()) {
    fail(ErrorKind::InvalidArgument, "probe (level, repetition) out of range");
  }
  Level& lv = levels_[rep * index_.levels() + (k - 1)];
  if (!lv.sequence) {
    auto& ranks = rankings_[rep];
    if (ranks.empty()) {
      for (const auto& h : index_.hash_slots(rep)) ranks.push_back(h.ranked_buckets(query_.view()));
    }
    lv.sequence = std::make_unique<MultiProbeSequence>(
        std::vector<std::vector<ProbeEntry>>(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(k)));
  }
  return lv;
}

std::span<const std::uint32_t> ProbeContext::bucket(std::size_t k, std::size_t rep, std::size_t j) {
  if (j < 1) fail(ErrorKind::InvalidArgument, "probe index is 1-based");
  const auto code = level(k, rep).sequence->at(j - 1);
  if (code.empty()) return {};
  return index_.bucket(rep, code);
}

std::uint64_t ProbeContext::work(std::size_t k, std::size_t rep, std::size_t j) {
  Level& lv = level(k, rep);
  while (lv.cumulative.size() < j) {
    const auto code = lv.sequence->at(lv.cumulative.size());
    if (code.empty()) break;
    const std::uint64_t size = index_.bucket(rep, code).size();
    ++size_lookups_;
    const std::uint64_t prev = lv.cumulative.empty() ? 0 : lv.cumulative.back();
    lv.cumulative.push_back(prev + 1 + size);
  }
  if (lv.cumulative.empty() || j == 0) return 0;
  return lv.cumulative[std::min(j, lv.cumulative.size()) - 1];
}

namespace {

std::uint64_t estimate(ProbeContext& ctx, const MultiLevelIndex& index, std::size_t k,
                       std::size_t j) {
  const std::uint64_t r = query_reps(index, k, j);
  std::uint64_t w = 0;
  for (std::uint64_t i = 0; i < r; ++i) w += ctx.work(k, static_cast<std::size_t>(i), j);
  return w;
}

void check_query(const MultiLevelIndex& index, const UnitPoint& q, double r) {
  if (q.dim() != index.dataset().dim()) {
    fail(ErrorKind::DimensionMismatch, "query has dimension " + std::to_string(q.dim()) +
                                           ", index has " + std::to_string(index.dataset().dim()));
  }
  if (!(r >= 0.0)) fail(ErrorKind::InvalidArgument, "radius must be non-negative");
}

// Scans reps(k, j) repetitions × j probes, de-duplicating candidates before
// the distance test. Work counts raw bucket sizes.
void scan(ProbeContext& ctx, const MultiLevelIndex& index, const UnitPoint& q, double r,
          std::size_t k, std::size_t j, QueryReport& report) {
  const std::uint64_t reps_used = query_reps(index, k, j);
  std::vector<std::uint32_t> candidates;
  for (std::uint64_t i = 0; i < reps_used; ++i) {
    for (std::size_t jj = 1; jj <= j; ++jj) {
      if (jj > ctx.level_universe(k)) break;
      const auto ids = ctx.bucket(k, static_cast<std::size_t>(i), jj);
      report.work_examined += 1 + ids.size();
      ++report.buckets_probed;
      candidates.insert(candidates.end(), ids.begin(), ids.end());
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  const auto& data = index.dataset();
  for (std::uint32_t id : candidates) {
    const double d = distance(data[id], q);
    if (d <= r) report.result.push_back({id, d});
  }
  report.t_reported = report.result.size();
}

void scan_all(const Dataset& data, const UnitPoint& q, double r, QueryReport& report) {
  for (const auto& p : data.points()) {
    const double d = distance(p, q);
    if (d <= r) report.result.push_back({static_cast<std::uint32_t>(p.id), d});
  }
  report.work_examined += data.size();
  report.t_reported = report.result.size();
}

struct FrontierEntry {
  std::uint64_t key;
  std::size_t k;
  std::size_t j;
};

struct FrontierOrder {
  bool operator()(const FrontierEntry& a, const FrontierEntry& b) const {
    if (a.key != b.key) return a.key > b.key;
    if (a.k != b.k) return a.k > b.k;
    return a.j > b.j;
  }
};

QueryReport adaptive_search(const MultiLevelIndex& index, const UnitPoint& q, double r,
                            bool multi_probe, QueryTrace* trace) {
  check_query(index, q, r);
  const auto start = std::chrono::steady_clock::now();
  const auto& cal = index.calibration();
  const std::size_t K = index.levels();
  const std::uint64_t R = index.repetitions();
  const std::uint64_t n = index.dataset().size();

  ProbeContext ctx(index, q);
  QueryReport report;
  std::uint64_t w_best = n;
  std::size_t k_best = 0;
  std::size_t j_best = 1;

  // A pair's key is the largest cost on its path from (1, 1) in the probing
  // lattice, so extracted keys never decrease even where raising j lowers
  // reps(k, j) enough to make cost(k, j + 1) < cost(k, j).
  std::priority_queue<FrontierEntry, std::vector<FrontierEntry>, FrontierOrder> frontier;
  frontier.push({cost(1, 1, cal, R), 1, 1});
  const std::uint64_t iteration_bound = static_cast<std::uint64_t>(K) * (n + 1);
  std::uint64_t iterations = 0;

  while (!frontier.empty() && frontier.top().key < w_best) {
    const FrontierEntry e = frontier.top();
    frontier.pop();
    if (++iterations > iteration_bound) {
      throw std::logic_error("adaptive query exceeded its K(n+1) iteration bound");
    }
    if (e.k < K && e.j == 1) {
      frontier.push({std::max(e.key, cost(e.k + 1, 1, cal, R)), e.k + 1, 1});
    }
    if (multi_probe && e.j < ctx.level_universe(e.k)) {
      frontier.push({std::max(e.key, cost(e.k, e.j + 1, cal, R)), e.k, e.j + 1});
    }
    const std::uint64_t w = estimate(ctx, index, e.k, e.j);
    if (trace) trace->visits.push_back({e.k, e.j, e.key, cost(e.k, e.j, cal, R), w});
    if (w < w_best) {
      k_best = e.k;
      j_best = e.j;
      w_best = w;
    }
  }

  report.pairs_examined = iterations;
  report.size_lookups = ctx.size_lookups();
  report.k_best = k_best;
  report.j_best = j_best;
  report.w_best = w_best;
  if (k_best == 0) {
    report.fallback = true;
    scan_all(index.dataset(), q, r, report);
  } else {
    scan(ctx, index, q, r, k_best, j_best, report);
  }
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

std::uint64_t work_estimate(const MultiLevelIndex& index, const UnitPoint& q, std::size_t k,
                            std::size_t j) {
  if (k < 1 || k > index.levels()) fail(ErrorKind::InvalidArgument, "level out of range");
  if (j < 1) fail(ErrorKind::InvalidArgument, "probe count must be at least 1");
  ProbeContext ctx(index, q);
  return estimate(ctx, index, k, j);
}

QueryReport adaptive_multiprobe(const MultiLevelIndex& index, const UnitPoint& q, double r,
                                QueryTrace* trace) {
  return adaptive_search(index, q, r, true, trace);
}

QueryReport single_probe_adaptive(const MultiLevelIndex& index, const UnitPoint& q, double r,
                                  QueryTrace* trace) {
  return adaptive_search(index, q, r, false, trace);
}

QueryReport fixed_level_query(const MultiLevelIndex& index, const UnitPoint& q, double r,
                              std::size_t k, std::size_t j) {
  check_query(index, q, r);
  if (k < 1 || k > index.levels()) {
    fail(ErrorKind::InvalidArgument, "fixed level " + std::to_string(k) + " outside 1.." +
                                         std::to_string(index.levels()));
  }
  if (j < 1) fail(ErrorKind::InvalidArgument, "probe count must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  ProbeContext ctx(index, q);
  QueryReport report;
  report.k_best = k;
  report.j_best = j;
  scan(ctx, index, q, r, k, j, report);
  report.w_best = report.work_examined;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<std::size_t> brute_force_range(const Dataset& dataset, const UnitPoint& q, double r) {
  if (q.dim() != dataset.dim()) {
    fail(ErrorKind::DimensionMismatch, "query dimension does not match dataset");
  }
  std::vector<std::size_t> ids;
  for (const auto& p : dataset.points()) {
    if (distance(p, q) <= r) ids.push_back(p.id);
  }
  return ids;
}

QueryReport brute_force_query(const Dataset& dataset, const UnitPoint& q, double r) {
  if (q.dim() != dataset.dim()) {
    fail(ErrorKind::DimensionMismatch, "query dimension does not match dataset");
  }
  const auto start = std::chrono::steady_clock::now();
  QueryReport report;
  report.fallback = true;
  scan_all(dataset, q, r, report);
  report.w_best = report.work_examined;
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace mlsh
