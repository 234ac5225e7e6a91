#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "mlsh/calibration.hpp"
#include "mlsh/geometry.hpp"
#include "mlsh/hash_family.hpp"

namespace mlsh {

// ⌈ln n / ln(1/p2)⌉, at least 1.
std::size_t compute_k(std::size_t n, double p2);

// ⌈p1^-k⌉, saturating.
std::uint64_t compute_numreps(double p1, std::size_t k);

// ⌈2 ln(2jk) / P⌉ for the probe-success probability P of pair (k, j).
std::uint64_t reps(std::size_t k, std::size_t j, double probe_success);

inline constexpr std::uint64_t kUnboundedBudget = std::numeric_limits<std::uint64_t>::max();

struct BuildParams {
  std::uint64_t space_budget = kUnboundedBudget;  // L: cap on repetitions
  FamilyParams family;
  FamilyCalibration calibration;
  std::uint64_t seed = 0;
};

// R repetitions × K levels of prefix buckets. Each repetition draws K hash
// functions and stores every point's K-code; the level-k bucket of a point is
// the set of points sharing its first k code entries. Codes are kept sorted
// lexicographically per repetition so any prefix is one contiguous range.
//
// Levels are 1-based (a level is a prefix length); repetitions are 0-based.
class MultiLevelIndex {
 public:
  static MultiLevelIndex build(Dataset dataset, BuildParams params);

  std::size_t levels() const { return levels_; }
  std::size_t repetitions() const { return repetitions_; }
  const Dataset& dataset() const { return dataset_; }
  const BuildParams& params() const { return params_; }
  const FamilyCalibration& calibration() const { return params_.calibration; }

  const HashFunction& hash_slot(std::size_t rep, std::size_t slot) const {
    return slots_[rep * levels_ + slot];
  }
  std::span<const HashFunction> hash_slots(std::size_t rep) const {
    return std::span<const HashFunction>(slots_).subspan(rep * levels_, levels_);
  }

  // The K-code of `point` in repetition `rep`.
  std::span<const BucketId> code(std::size_t rep, std::size_t point) const;

  // Ids of points whose repetition-`rep` code starts with `prefix`; the level
  // is prefix.size(). Unoccupied prefixes give an empty span.
  std::span<const std::uint32_t> bucket(std::size_t rep, std::span<const BucketId> prefix) const;

  // Point ids of repetition `rep` in code order.
  std::span<const std::uint32_t> sorted_ids(std::size_t rep) const;

  std::size_t stored_code_entries() const { return codes_.size(); }

  // Binary index file. `rebuildable` stores header and points only; codes
  // are recomputed from the seeds on load.
  void save(const std::filesystem::path& path, bool rebuildable = false) const;
  static MultiLevelIndex load(const std::filesystem::path& path);

 private:
  MultiLevelIndex(Dataset dataset, BuildParams params)
      : dataset_(std::move(dataset)), params_(std::move(params)) {}

  void make_slots();
  void compute_codes();
  void sort_repetitions();

  std::span<const BucketId> sorted_code(std::size_t rep, std::size_t pos) const {
    return std::span<const BucketId>(codes_).subspan(
        (rep * dataset_.size() + pos) * levels_, levels_);
  }

  Dataset dataset_;
  BuildParams params_;
  std::size_t levels_ = 0;
  std::size_t repetitions_ = 0;
  std::vector<HashFunction> slots_;      // R × K
  std::vector<BucketId> codes_;          // R × n × K, in code order per repetition
  std::vector<std::uint32_t> order_;     // R × n: sorted position -> point id
  std::vector<std::uint32_t> position_;  // R × n: point id -> sorted position
};

}  // namespace mlsh
