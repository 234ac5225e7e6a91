// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mlsh/bench.hpp"
#include "mlsh/calibration.hpp"
#include "mlsh/error.hpp"
#include "mlsh/geometry.hpp"
#include "mlsh/index.hpp"
#include "mlsh/query.hpp"
#include "mlsh/random.hpp"
#include "oracles.hpp"

using namespace mlsh;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++count_;
  }
  std::size_t violations() const { return count_; }
  std::string summary() const {
    std::string s;
    for (const auto& f : failures_) s += "; " + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

FamilyCalibration calibration_for(FamilyKind kind, std::size_t dim, std::size_t n, double r,
                                  std::size_t trials, std::uint64_t seed) {
  CalibrationRequest req;
  req.family = default_family(kind, dim);
  req.r = r;
  req.c = 2.0;
  req.trials = trials;
  req.seed = seed;
  return calibrate_for_size(req, n);
}

MultiLevelIndex build(const Dataset& data, const FamilyCalibration& cal, std::uint64_t budget,
                      std::uint64_t seed) {
  BuildParams bp;
  bp.space_budget = budget;
  bp.family = cal.family;
  bp.calibration = cal;
  bp.seed = seed;
  return MultiLevelIndex::build(data, bp);
}

std::vector<std::size_t> ids_of(const QueryReport& rep) {
  std::vector<std::size_t> ids;
  for (const auto& nb : rep.result) ids.push_back(nb.id);
  return ids;
}

// 1 -------------------------------------------------------------------------

Outcome soundness() {
  Check check;
  std::size_t queries = 0;
  std::size_t results = 0;
  for (std::uint64_t inst = 0; inst < 12; ++inst) {
    PlantedSpec spec;
    spec.n = 1500;
    spec.dim = inst % 3 == 0 ? 8 : 24;
    spec.radius = 0.3 + 0.05 * static_cast<double>(inst % 4);
    spec.planted = inst % 2 == 0 ? 0 : 6;  // even instances: purely random
    spec.queries = 90;
    spec.seed = 1000 + inst;
    const auto instance = generate_planted_instance(spec);
    const auto kind = inst % 2 == 0 ? FamilyKind::SphericalCap : FamilyKind::CrossPolytope;
    const auto cal = calibration_for(kind, spec.dim, spec.n, spec.radius, 4000, 77 + inst);
    const auto index = build(instance.dataset, cal, 30, 91 + inst);
    for (std::size_t qi = 0; qi < instance.queries.size(); ++qi) {
      const auto& q = instance.queries[qi];
      const auto truth = brute_force_range(index.dataset(), q, spec.radius);
      check.require(truth == oracle::range_reversed(index.dataset(), q, spec.radius),
                    "brute force disagrees with the reversed scan");
      std::vector<QueryReport> reports{
          adaptive_multiprobe(index, q, spec.radius), single_probe_adaptive(index, q, spec.radius),
          fixed_level_query(index, q, spec.radius, index.levels(), 1),
          fixed_level_query(index, q, spec.radius, 1 + qi % index.levels(), 1 + qi % 4),
          brute_force_query(index.dataset(), q, spec.radius)};
      for (const auto& rep : reports) {
        check.require(oracle::is_subset(rep.result, truth), "result outside brute_force_range");
        results += rep.result.size();
      }
      ++queries;
    }
  }
  return {check.violations() == 0 && queries >= 1000,
          std::to_string(queries) + " queries x 5 modes, " + std::to_string(results) +
              " reported points, " + std::to_string(check.violations()) + " violations" +
              check.summary()};
}

// 2 -------------------------------------------------------------------------

Outcome formulas() {
  Check check;
  check.require(compute_k(1000000, 0.1) == 6, "compute_k(1e6, 0.1) != 6");
  check.require(compute_numreps(0.9, 6) == 2, "compute_numreps(0.9, 6) != 2");
  check.require(reps(1, 1, 1.0) == 2, "reps(1,1,1) != 2");
  check.require(reps(2, 1, 0.25) == 12, "reps(2,1,0.25) != 12");
  check.require(std::abs(rho(0.5, 0.1) - 0.30103) <= 1e-5, "rho(0.5, 0.1) off");
  check.require(std::abs(theoretical_rho(Space::Euclidean, 2.0) - 1.0 / 7.0) <= 1e-12,
                "Euclidean rho at c=2 != 1/7");
  check.require(std::abs(theoretical_rho(Space::Hamming, 2.0) - 1.0 / 3.0) <= 1e-12,
                "Hamming rho at c=2 != 1/3");
  return {check.violations() == 0, "7 formula checks, " + std::to_string(check.violations()) +
                                       " mismatches" + check.summary()};
}

// 3 -------------------------------------------------------------------------

Outcome structure() {
  Check check;
  Rng rng(2024);
  std::size_t buckets = 0;
  for (int b = 0; b < 20; ++b) {
    PlantedSpec spec;
    spec.n = 50 + rng.index(1951);
    spec.dim = 4 + rng.index(29);
    spec.radius = 0.4;
    spec.planted = 2;
    spec.queries = 5;
    spec.seed = rng.next();
    const auto instance = generate_planted_instance(spec);
    const auto kind = b % 2 ? FamilyKind::CrossPolytope : FamilyKind::SphericalCap;
    const auto cal = calibration_for(kind, spec.dim, spec.n, spec.radius, 2000, rng.next());
    const auto index = build(instance.dataset, cal, 1 + rng.index(12), rng.next());
    const std::size_t n = spec.n;
    check.require(index.stored_code_entries() == index.repetitions() * n * index.levels(),
                  "stored entries != R*n*K");
    for (std::size_t rep = 0; rep < index.repetitions(); ++rep) {
      for (std::size_t k = 1; k <= index.levels(); ++k) {
        const auto groups = oracle::groups(index, rep, k);
        std::vector<int> owner(n, 0);
        for (const auto& [prefix, members] : groups) {
          ++buckets;
          const auto got = index.bucket(rep, prefix);
          std::vector<std::uint32_t> sorted(got.begin(), got.end());
          std::sort(sorted.begin(), sorted.end());
          check.require(sorted == members, "bucket lookup differs from the code grouping");
          for (auto id : members) ++owner[id];
          if (k > 1) {
            const std::vector<BucketId> parent(prefix.begin(), prefix.end() - 1);
            const auto up = index.bucket(rep, parent);
            const std::set<std::uint32_t> pset(up.begin(), up.end());
            for (auto id : members) check.require(pset.count(id) == 1, "bucket escapes its parent");
          }
        }
        for (std::size_t p = 0; p < n; ++p) check.require(owner[p] == 1, "point not in exactly one bucket");
      }
    }
  }
  return {check.violations() == 0, "20 builds, " + std::to_string(buckets) + " buckets, " +
                                       std::to_string(check.violations()) + " violations" +
                                       check.summary()};
}

// 4 -------------------------------------------------------------------------

Outcome calibration_sanity() {
  Check check;
  std::string detail;
  const std::vector<double> grid{0.2, 0.6, 1.0, 1.4, 1.8};
  for (auto kind : {FamilyKind::CrossPolytope, FamilyKind::SphericalCap}) {
    const auto params = default_family(kind, 32);
    check.require(estimate_collision_prob(params, 0.0, 100000, 1).probability == 1.0,
                  "p(0) != 1 for " + std::string(to_string(kind)));
    std::vector<CollisionEstimate> est;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      est.push_back(estimate_collision_prob(params, grid[i], 100000, 10 + i));
    }
    detail += std::string(to_string(kind)) + " p(grid)=";
    for (std::size_t i = 0; i < est.size(); ++i) {
      detail += (i ? "/" : "") + fmt(est[i].probability, 3);
      if (i > 0) {
        const double gap = est[i - 1].probability - est[i].probability;
        const double sigma = std::hypot(est[i - 1].standard_error, est[i].standard_error);
        check.require(gap > 3 * sigma, std::string(to_string(kind)) + " not decreasing beyond 3 SE at " +
                                           fmt(grid[i]) + " (gap " + fmt(gap) + ", 3 SE " +
                                           fmt(3 * sigma) + ")");
      }
    }

    CalibrationRequest req;
    req.family = params;
    req.r = 0.4;
    req.c = 2.0;
    req.levels = 4;
    req.max_probes = 1;
    req.trials = 100000;
    req.seed = 5;
    const auto cal = calibrate(req);
    const double t = static_cast<double>(cal.trials);
    double worst = 0.0;
    for (std::size_t k = 1; k <= 4; ++k) {
      const double pk = cal.probe_probability(k, 1);
      const double expect = std::pow(cal.p1, static_cast<double>(k));
      const double se_table = std::sqrt(pk * (1 - pk) / t);
      const double se_power = static_cast<double>(k) * std::pow(cal.p1, static_cast<double>(k - 1)) *
                              cal.p1_standard_error;
      const double z = std::abs(pk - expect) / std::hypot(se_table, se_power);
      worst = std::max(worst, z);
      check.require(z <= 3.0, std::string(to_string(kind)) + " P[" + std::to_string(k) +
                                  ",1] is " + fmt(z, 3) + " sigma from p1^k");
    }
    detail += " max|P[k,1]-p1^k|/sigma=" + fmt(worst, 3) + "; ";
  }
  return {check.violations() == 0, detail + std::to_string(check.violations()) + " violations" +
                                       check.summary()};
}

// 5, 6, 8, 9 share the n = 10^4 planted instance -----------------------------

struct Planted {
  PlantedInstance instance;
  MultiLevelIndex index;
};

Planted planted_10k(std::uint64_t seed) {
  PlantedSpec spec;
  spec.n = 10000;
  spec.dim = 32;
  spec.radius = 0.4;
  spec.planted = 10;
  spec.queries = 100;
  spec.seed = seed;
  auto instance = generate_planted_instance(spec);
  const auto cal = calibration_for(FamilyKind::CrossPolytope, 32, spec.n, 0.4, 20000, seed + 1);
  auto index = build(instance.dataset, cal, kUnboundedBudget, seed + 2);
  return {std::move(instance), std::move(index)};
}

Outcome recall_criterion(const Planted& p) {
  double total = 0.0;
  double work = 0.0;
  for (std::size_t qi = 0; qi < p.instance.queries.size(); ++qi) {
    const auto rep = adaptive_multiprobe(p.index, p.instance.queries[qi], 0.4);
    total += recall(rep.result, p.instance.ground_truth[qi]);
    work += static_cast<double>(rep.work_examined);
  }
  const double q = static_cast<double>(p.instance.queries.size());
  const double macro = total / q;
  return {macro >= 0.85, "macro-recall " + fmt(macro) + " (threshold 0.85), K=" +
                             std::to_string(p.index.levels()) + ", R=" +
                             std::to_string(p.index.repetitions()) + ", mean work " + fmt(work / q)};
}

Outcome adaptivity(const Planted& p) {
  double adaptive = 0.0;
  double sweep = 0.0;
  double ratio_sum = 0.0;
  for (const auto& q : p.instance.queries) {
    const auto rep = adaptive_multiprobe(p.index, q, 0.4);
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t k = 1; k <= p.index.levels(); ++k) {
      for (std::size_t j = 1; j <= 4; ++j) {
        best = std::min(best, fixed_level_query(p.index, q, 0.4, k, j).work_examined);
      }
    }
    adaptive += static_cast<double>(rep.w_best);
    sweep += static_cast<double>(best);
    ratio_sum += static_cast<double>(rep.w_best) / static_cast<double>(best);
  }
  const double q = static_cast<double>(p.instance.queries.size());
  const double ratio = adaptive / sweep;
  return {ratio <= 1.5, "mean w_best " + fmt(adaptive / q) + " vs mean sweep minimum " +
                            fmt(sweep / q) + ": ratio " + fmt(ratio) + " (limit 1.5), mean per-query ratio " +
                            fmt(ratio_sum / q)};
}

Outcome determinism(const Planted& p) {
  Check check;
  BenchConfig cfg;
  cfg.synthetic = {3000, 32, 10};
  cfg.query_count = 100;
  cfg.trials = 5000;
  cfg.seed = 99;
  cfg.modes = {QueryMode::Adaptive, QueryMode::SingleProbe, QueryMode::FixedLevel, QueryMode::BruteForce};
  const auto a = run_benchmark(cfg);
  const auto b = run_benchmark(cfg);
  std::size_t differing = 0;
  if (a.records.size() != b.records.size()) ++differing;
  for (std::size_t i = 0; i < std::min(a.records.size(), b.records.size()); ++i) {
    if (to_json(a.records[i]).dump() != to_json(b.records[i]).dump()) ++differing;
  }
  check.require(differing == 0, std::to_string(differing) + " records differ between reruns");

  const auto dir = std::filesystem::temp_directory_path() / "mlsh_acceptance";
  std::filesystem::create_directories(dir);
  std::size_t deviations = 0;
  for (bool rebuildable : {false, true}) {
    const auto path = dir / (rebuildable ? "rebuild.idx" : "full.idx");
    p.index.save(path, rebuildable);
    const auto loaded = MultiLevelIndex::load(path);
    for (const auto& q : p.instance.queries) {
      const std::vector<std::pair<QueryReport, QueryReport>> pairs{
          {adaptive_multiprobe(p.index, q, 0.4), adaptive_multiprobe(loaded, q, 0.4)},
          {single_probe_adaptive(p.index, q, 0.4), single_probe_adaptive(loaded, q, 0.4)},
          {fixed_level_query(p.index, q, 0.4, p.index.levels(), 2),
           fixed_level_query(loaded, q, 0.4, loaded.levels(), 2)}};
      for (const auto& [x, y] : pairs) {
        if (to_json(x, false) != to_json(y, false)) ++deviations;
      }
    }
  }
  check.require(deviations == 0, std::to_string(deviations) + " answers changed after save/load");
  return {check.violations() == 0, std::to_string(a.records.size()) +
                                       " records compared across reruns, 100 queries x 3 modes x 2 "
                                       "file variants after save/load" +
                                       check.summary()};
}

Outcome fidelity(const Planted& p) {
  Check check;
  std::size_t queries = 0;
  std::size_t visits = 0;
  auto audit = [&](const MultiLevelIndex& index, const UnitPoint& q, double r, bool multi) {
    QueryTrace trace;
    const auto rep = multi ? adaptive_multiprobe(index, q, r, &trace)
                           : single_probe_adaptive(index, q, r, &trace);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::uint64_t best = index.dataset().size();
    for (std::size_t i = 0; i < trace.visits.size(); ++i) {
      const auto& v = trace.visits[i];
      if (i > 0) check.require(v.key >= trace.visits[i - 1].key, "extracted cost decreased");
      check.require(seen.insert({v.k, v.j}).second, "pair examined twice");
      best = std::min(best, oracle::recount_work(index, q, v.k, v.j));
    }
    check.require(rep.w_best == best, "w_best differs from recomputed minimum");
    check.require(rep.pairs_examined == trace.visits.size(), "pair count mismatch");
    visits += trace.visits.size();
    ++queries;
  };
  // 800 queries on small random-plus-planted instances, checked against a
  // point-by-point recount; 200 on the large instance.
  for (std::uint64_t inst = 0; inst < 8; ++inst) {
    PlantedSpec spec;
    spec.n = 600 + 100 * inst;
    spec.dim = 16;
    spec.radius = 0.4;
    spec.planted = inst % 2 ? 4 : 0;
    spec.queries = 100;
    spec.seed = 500 + inst;
    const auto instance = generate_planted_instance(spec);
    const auto kind = inst % 2 ? FamilyKind::CrossPolytope : FamilyKind::SphericalCap;
    const auto cal = calibration_for(kind, 16, spec.n, 0.4, 4000, 600 + inst);
    const auto index = build(instance.dataset, cal, 20, 700 + inst);
    for (std::size_t qi = 0; qi < instance.queries.size(); ++qi) {
      audit(index, instance.queries[qi], 0.4, qi % 4 != 0);
    }
  }
  for (const auto& q : p.instance.queries) {
    QueryTrace trace;
    const auto rep = adaptive_multiprobe(p.index, q, 0.4, &trace);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::uint64_t best = p.index.dataset().size();
    for (std::size_t i = 0; i < trace.visits.size(); ++i) {
      const auto& v = trace.visits[i];
      if (i > 0) check.require(v.key >= trace.visits[i - 1].key, "extracted cost decreased");
      check.require(seen.insert({v.k, v.j}).second, "pair examined twice");
      best = std::min(best, work_estimate(p.index, q, v.k, v.j));
    }
    check.require(rep.w_best == best, "w_best differs from recomputed minimum");
    visits += trace.visits.size();
    ++queries;
  }
  for (const auto& q : p.instance.queries) {
    QueryTrace trace;
    const auto rep = single_probe_adaptive(p.index, q, 0.4, &trace);
    std::uint64_t best = p.index.dataset().size();
    for (std::size_t i = 0; i < trace.visits.size(); ++i) {
      if (i > 0) check.require(trace.visits[i].key >= trace.visits[i - 1].key, "extracted cost decreased");
      best = std::min(best, work_estimate(p.index, q, trace.visits[i].k, 1));
    }
    check.require(rep.w_best == best, "w_best differs from recomputed minimum");
    visits += trace.visits.size();
    ++queries;
  }
  return {check.violations() == 0 && queries >= 1000,
          std::to_string(queries) + " instrumented queries, " + std::to_string(visits) +
              " extracted pairs, " + std::to_string(check.violations()) + " violations" +
              check.summary()};
}

// 7 -------------------------------------------------------------------------

Outcome scaling() {
  BenchConfig cfg;
  cfg.synthetic = {0, 32, 10};
  cfg.query_count = 25;
  cfg.radius = 0.4;
  cfg.approx_c = 2.0;
  cfg.seed = 7;
  cfg.modes = {QueryMode::Adaptive, QueryMode::BruteForce};
  const auto fits = scaling_trend({1000, 10000, 100000}, cfg);
  const auto& adaptive = fits[0];
  const auto& brute = fits[1];
  std::string detail;
  for (const auto& fit : fits) {
    detail += std::string(to_string(fit.mode)) + " exponent " + fmt(fit.exponent) + " (work";
    for (double w : fit.mean_work) detail += " " + fmt(w, 6);
    detail += ")" + std::string(fit.output_dominated ? " output-dominated" : "") + "; ";
  }
  const bool ok = adaptive.exponent < 0.95 && brute.exponent >= 0.9 && brute.exponent <= 1.1;
  return {ok, detail + "limits: adaptive < 0.95, brute in [0.9, 1.1]"};
}

}  // namespace

int main() {
  int failed = 0;
  auto run = [&](int number, const char* name, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = body();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", number, name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failed;
  };

  run(1, "soundness", soundness);
  run(2, "formula conformance", formulas);
  run(3, "structural invariants", structure);
  run(4, "calibration sanity", calibration_sanity);

  std::optional<Planted> planted;
  try {
    planted.emplace(planted_10k(31337));
  } catch (const std::exception& e) {
    std::printf("setup of the n=10^4 planted instance failed: %s\n", e.what());
  }
  auto with_planted = [&](Outcome (*f)(const Planted&)) {
    return [&, f] { return planted ? f(*planted) : Outcome{false, "no planted instance"}; };
  };
  run(5, "recall", with_planted(recall_criterion));
  run(6, "adaptivity", with_planted(adaptivity));
  run(7, "scaling trend", scaling);
  run(8, "determinism and persistence", with_planted(determinism));
  run(9, "adaptive search fidelity", with_planted(fidelity));

  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
