#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "mlsh/geometry.hpp"
#include "mlsh/index.hpp"
#include "mlsh/multi_probe.hpp"

namespace mlsh {

enum class QueryMode { Adaptive, SingleProbe, FixedLevel, BruteForce };

std::string_view to_string(QueryMode mode);
QueryMode query_mode_from_string(std::string_view name);

struct Neighbor {
  std::uint32_t id;
  double distance;
};

struct QueryReport {
  std::vector<Neighbor> result;  // ascending id, every distance <= r
  std::size_t t_reported = 0;
  std::uint64_t work_examined = 0;   // Σ (1 + |bucket|) over scanned buckets
  std::uint64_t buckets_probed = 0;
  std::uint64_t size_lookups = 0;    // bucket sizes read while choosing (k, j)
  std::uint64_t pairs_examined = 0;  // (k, j) pairs extracted from the frontier
  std::size_t k_best = 0;            // 0: no pair beat n, brute force was used
  std::size_t j_best = 1;
  std::uint64_t w_best = 0;
  bool fallback = false;
  double wall_time_seconds = 0.0;
};

nlohmann::json to_json(const QueryReport& report, bool include_timing = true);

// Instrumentation of one adaptive query, in extraction order.
struct FrontierVisit {
  std::size_t k;
  std::size_t j;
  std::uint64_t key;   // frontier priority when extracted
  std::uint64_t cost;  // j · reps(k, j)
  std::uint64_t work;  // w_{k,j}
};

struct QueryTrace {
  std::vector<FrontierVisit> visits;
};

// reps(k, j) for querying: clamped to [1, R]; a zero probe-success estimate
// means the target is unreachable and clamps to R.
std::uint64_t query_reps(const MultiLevelIndex& index, std::size_t k, std::size_t j);

// j · reps(k, j) with reps clamped to [1, max_reps].
std::uint64_t cost(std::size_t k, std::size_t j, const FamilyCalibration& calibration,
                   std::uint64_t max_reps);

// Lazily materialized probe state of one query against one index: per
// repetition slot rankings, per (repetition, level) multi-probe sequences,
// and running sums of 1 + |bucket| along each sequence.
class ProbeContext {
 public:
  ProbeContext(const MultiLevelIndex& index, const UnitPoint& q);

  // The j-th bucket (1-based) of the level-k probe sequence in repetition
  // rep. Empty once the sequence is exhausted.
  std::span<const std::uint32_t> bucket(std::size_t k, std::size_t rep, std::size_t j);

  // Σ_{j'=1..j} (1 + |S_{k,rep,j'}|); codes past the end of the sequence
  // contribute nothing.
  std::uint64_t work(std::size_t k, std::size_t rep, std::size_t j);

  // Number of distinct level-k codes, saturated.
  std::size_t level_universe(std::size_t k) const { return universe_[k - 1]; }

  std::uint64_t size_lookups() const { return size_lookups_; }

 private:
  struct Level {
    std::unique_ptr<MultiProbeSequence> sequence;
    std::vector<std::uint64_t> cumulative;
  };

  Level& level(std::size_t k, std::size_t rep);

  const MultiLevelIndex& index_;
  UnitPoint query_;
  std::vector<std::vector<std::vector<ProbeEntry>>> rankings_;  // per repetition, lazily
  std::vector<Level> levels_;                                   // R × K
  std::vector<std::size_t> universe_;
  std::uint64_t size_lookups_ = 0;
};

// w_{k,j} = Σ_{i=1..reps(k,j)} Σ_{j'=1..j} (1 + |S_{k,i,j'}(q)|).
std::uint64_t work_estimate(const MultiLevelIndex& index, const UnitPoint& q, std::size_t k,
                            std::size_t j);

// Adaptive multi-probe range query. Explores (k, j) pairs best-first by
// cost, tracks the pair with the least estimated work, then scans that
// pair's buckets and keeps exactly the candidates within distance r.
QueryReport adaptive_multiprobe(const MultiLevelIndex& index, const UnitPoint& q, double r,
                                QueryTrace* trace = nullptr);

// The same search with the probe count pinned to 1.
QueryReport single_probe_adaptive(const MultiLevelIndex& index, const UnitPoint& q, double r,
                                  QueryTrace* trace = nullptr);

// Classic LSH at a fixed level and probe count.
QueryReport fixed_level_query(const MultiLevelIndex& index, const UnitPoint& q, double r,
                              std::size_t k, std::size_t j);

// Exact linear scan; ids ascending.
std::vector<std::size_t> brute_force_range(const Dataset& dataset, const UnitPoint& q, double r);

QueryReport brute_force_query(const Dataset& dataset, const UnitPoint& q, double r);

}  // namespace mlsh
