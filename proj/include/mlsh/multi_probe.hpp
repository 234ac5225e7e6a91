#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlsh/hash_family.hpp"

namespace mlsh {

// Best-first enumeration of k-tuple codes for concatenated hashes.
//
// Each slot contributes its ranked bucket list; a code picks one rank per
// slot and its priority is the sum of the chosen deficits. Codes are emitted
// in non-decreasing priority, ties broken by lexicographic code among the
// pending candidates. The first code is always the query's own k-code.
//
// Enumeration walks the tree in which a rank vector's parent decrements its
// last non-zero coordinate, so every code is generated exactly once.
class MultiProbeSequence {
 public:
  explicit MultiProbeSequence(std::vector<std::vector<ProbeEntry>> slot_rankings);

  std::size_t slots() const { return rankings_.size(); }

  // Number of distinct codes, saturated at SIZE_MAX.
  std::size_t universe() const { return universe_; }

  // The j-th code (0-based), generating lazily. Empty span once exhausted.
  std::span<const BucketId> at(std::size_t j);

  // Codes generated so far.
  std::size_t generated() const { return emitted_count_; }

 private:
  struct Candidate {
    double priority;
    std::vector<std::uint32_t> ranks;
    std::size_t last_nonzero;  // slots() when all ranks are zero
  };

  bool candidate_before(const Candidate& a, const Candidate& b) const;
  void push(Candidate c);
  bool emit_next();

  std::vector<std::vector<ProbeEntry>> rankings_;
  std::size_t universe_ = 1;
  std::vector<Candidate> heap_;
  std::vector<BucketId> emitted_;  // row-major, slots() per code
  std::size_t emitted_count_ = 0;
};

// First `count` codes over the given hash slots for query q.
std::vector<std::vector<BucketId>> multi_probe_codes(std::span<const HashFunction> slots,
                                                     std::span<const double> q,
                                                     std::size_t count);

}  // namespace mlsh
