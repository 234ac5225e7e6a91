#include "mlsh/multi_probe.hpp"

#include <algorithm>
#include <limits>

#include "mlsh/error.hpp"

namespace mlsh {

MultiProbeSequence::MultiProbeSequence(std::vector<std::vector<ProbeEntry>> slot_rankings)
    : rankings_(std::move(slot_rankings)) {
  if (rankings_.empty()) fail(ErrorKind::InvalidArgument, "multi-probe needs at least one slot");
  for (const auto& r : rankings_) {
    if (r.empty()) fail(ErrorKind::InvalidArgument, "empty slot ranking");
    if (universe_ > std::numeric_limits<std::size_t>::max() / r.size()) {
      universe_ = std::numeric_limits<std::size_t>::max();
    } else {
      universe_ *= r.size();
    }
  }
  Candidate root{0.0, std::vector<std::uint32_t>(rankings_.size(), 0), rankings_.size()};
  for (std::size_t s = 0; s < rankings_.size(); ++s) root.priority += rankings_[s][0].deficit;
  push(std::move(root));
}

bool MultiProbeSequence::candidate_before(const Candidate& a, const Candidate& b) const {
  if (a.priority != b.priority) return a.priority < b.priority;
  for (std::size_t s = 0; s < rankings_.size(); ++s) {
    const BucketId x = rankings_[s][a.ranks[s]].bucket;
    const BucketId y = rankings_[s][b.ranks[s]].bucket;
    if (x != y) return x < y;
  }
  return false;
}

void MultiProbeSequence::push(Candidate c) {
  heap_.push_back(std::move(c));
  // std heap is a max-heap; invert the ordering to pop the best first.
  std::push_heap(heap_.begin(), heap_.end(),
                 [this](const Candidate& a, const Candidate& b) { return candidate_before(b, a); });
}

bool MultiProbeSequence::emit_next() {
  if (heap_.empty()) return false;
  const auto cmp = [this](const Candidate& a, const Candidate& b) { return candidate_before(b, a); };
  std::pop_heap(heap_.begin(), heap_.end(), cmp);
  Candidate best = std::move(heap_.back());
  heap_.pop_back();

  for (std::size_t s = 0; s < rankings_.size(); ++s) {
    emitted_.push_back(rankings_[s][best.ranks[s]].bucket);
  }
  ++emitted_count_;

  const std::size_t first = best.last_nonzero == rankings_.size() ? 0 : best.last_nonzero;
  for (std::size_t s = first; s < rankings_.size(); ++s) {
    const std::uint32_t next = best.ranks[s] + 1;
    if (next >= rankings_[s].size()) continue;
    Candidate child{best.priority, best.ranks, s};
    child.priority += rankings_[s][next].deficit - rankings_[s][next - 1].deficit;
    child.ranks[s] = next;
    push(std::move(child));
  }
  return true;
}

std::span<const BucketId> MultiProbeSequence::at(std::size_t j) {
  while (emitted_count_ <= j) {
    if (!emit_next()) return {};
  }
  return std::span<const BucketId>(emitted_).subspan(j * rankings_.size(), rankings_.size());
}

std::vector<std::vector<BucketId>> multi_probe_codes(std::span<const HashFunction> slots,
                                                     std::span<const double> q,
                                                     std::size_t count) {
  std::vector<std::vector<ProbeEntry>> rankings;
  rankings.reserve(slots.size());
  for (const auto& h : slots) rankings.push_back(h.ranked_buckets(q));
  MultiProbeSequence seq(std::move(rankings));
  std::vector<std::vector<BucketId>> out;
  for (std::size_t j = 0; j < count; ++j) {
    const auto code = seq.at(j);
    if (code.empty()) break;
    out.emplace_back(code.begin(), code.end());
  }
  return out;
}

}  // namespace mlsh
