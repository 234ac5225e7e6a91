#include "mlsh/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "mlsh/error.hpp"
#include "mlsh/random.hpp"

namespace mlsh {

namespace {

// Ratios such as ln(10^6)/ln(10) land a hair above an integer in floating
// point; treat anything within 1e-9 of an integer as that integer.
double ceil_tolerant(double x) { return std::ceil(x - 1e-9); }

}  // namespace

std::size_t compute_k(std::size_t n, double p2) {
  if (n < 1) fail(ErrorKind::InvalidArgument, "compute_k needs n >= 1");
  if (!(p2 > 0.0 && p2 < 1.0)) fail(ErrorKind::InvalidArgument, "compute_k needs 0 < p2 < 1");
  const double k = ceil_tolerant(std::log(static_cast<double>(n)) / std::log(1.0 / p2));
  return k < 1.0 ? 1 : static_cast<std::size_t>(k);
}

std::uint64_t compute_numreps(double p1, std::size_t k) {
  if (!(p1 > 0.0 && p1 <= 1.0)) fail(ErrorKind::InvalidArgument, "compute_numreps needs 0 < p1 <= 1");
  if (k < 1) fail(ErrorKind::InvalidArgument, "compute_numreps needs k >= 1");
  const double v = ceil_tolerant(std::pow(p1, -static_cast<double>(k)));
  if (!(v < 1.8e19)) return std::numeric_limits<std::uint64_t>::max();
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(v));
}

std::uint64_t reps(std::size_t k, std::size_t j, double probe_success) {
  if (k < 1 || j < 1) fail(ErrorKind::InvalidArgument, "reps needs k >= 1 and j >= 1");
  if (!(probe_success > 0.0)) fail(ErrorKind::InvalidArgument, "reps needs P[k,j] > 0");
  const double v = ceil_tolerant(2.0 * std::log(2.0 * static_cast<double>(j) *
                                                static_cast<double>(k)) /
                                 probe_success);
  if (!(v < 1.8e19)) return std::numeric_limits<std::uint64_t>::max();
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(v));
}

MultiLevelIndex MultiLevelIndex::build(Dataset dataset, BuildParams params) {
  if (dataset.empty()) fail(ErrorKind::InvalidArgument, "cannot index an empty dataset");
  if (dataset.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorKind::InvalidArgument, "dataset too large for 32-bit point ids");
  }
  params.family.validate();
  if (!(params.family == params.calibration.family)) {
    fail(ErrorKind::InvalidArgument, "calibration was made for a different hash family");
  }
  if (params.family.dim != dataset.dim()) {
    fail(ErrorKind::DimensionMismatch, "calibration dimension " +
                                           std::to_string(params.family.dim) +
                                           " does not match dataset dimension " +
                                           std::to_string(dataset.dim()));
  }
  if (params.space_budget < 1) fail(ErrorKind::InvalidArgument, "space budget L must be >= 1");

  const auto& cal = params.calibration;
  const std::size_t K = compute_k(dataset.size(), cal.p2);
  if (K > cal.levels) {
    fail(ErrorKind::Calibration, "index needs " + std::to_string(K) +
                                     " levels but the calibration covers " +
                                     std::to_string(cal.levels));
  }
  const std::uint64_t R = std::min(compute_numreps(cal.p1, K), params.space_budget);

  MultiLevelIndex index(std::move(dataset), std::move(params));
  index.levels_ = K;
  index.repetitions_ = static_cast<std::size_t>(R);
  index.make_slots();
  index.compute_codes();
  index.sort_repetitions();
  return index;
}

void MultiLevelIndex::make_slots() {
  slots_.clear();
  slots_.reserve(repetitions_ * levels_);
  for (std::size_t i = 0; i < repetitions_; ++i) {
    for (std::size_t s = 0; s < levels_; ++s) {
      slots_.push_back(HashFunction::sample(params_.family, derive_seed(params_.seed, i + 1, s + 1)));
    }
  }
}

// Fills codes_ in point-id order; sort_repetitions() reorders them.
void MultiLevelIndex::compute_codes() {
  const std::size_t n = dataset_.size();
  codes_.assign(repetitions_ * n * levels_, 0);
  for (std::size_t i = 0; i < repetitions_; ++i) {
    for (std::size_t p = 0; p < n; ++p) {
      BucketId* out = codes_.data() + (i * n + p) * levels_;
      for (std::size_t s = 0; s < levels_; ++s) out[s] = hash_slot(i, s).hash(dataset_[p].view());
    }
  }
}

void MultiLevelIndex::sort_repetitions() {
  const std::size_t n = dataset_.size();
  const std::size_t K = levels_;
  order_.assign(repetitions_ * n, 0);
  position_.assign(repetitions_ * n, 0);
  std::vector<BucketId> sorted(n * K);
  for (std::size_t i = 0; i < repetitions_; ++i) {
    const BucketId* raw = codes_.data() + i * n * K;
    auto* order = order_.data() + i * n;
    std::iota(order, order + n, 0u);
    std::sort(order, order + n, [&](std::uint32_t a, std::uint32_t b) {
      const BucketId* ca = raw + static_cast<std::size_t>(a) * K;
      const BucketId* cb = raw + static_cast<std::size_t>(b) * K;
      const auto diff = std::mismatch(ca, ca + K, cb);
      if (diff.first != ca + K) return *diff.first < *diff.second;
      return a < b;
    });
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t id = order[pos];
      position_[i * n + id] = static_cast<std::uint32_t>(pos);
      std::copy_n(raw + id * K, K, sorted.data() + pos * K);
    }
    std::copy(sorted.begin(), sorted.end(), codes_.begin() + static_cast<std::ptrdiff_t>(i * n * K));
  }
}

std::span<const BucketId> MultiLevelIndex::code(std::size_t rep, std::size_t point) const {
  if (rep >= repetitions_ || point >= dataset_.size()) {
    fail(ErrorKind::InvalidArgument, "code lookup out of range");
  }
  return sorted_code(rep, position_[rep * dataset_.size() + point]);
}

std::span<const std::uint32_t> MultiLevelIndex::sorted_ids(std::size_t rep) const {
  if (rep >= repetitions_) fail(ErrorKind::InvalidArgument, "repetition out of range");
  return std::span<const std::uint32_t>(order_).subspan(rep * dataset_.size(), dataset_.size());
}

std::span<const std::uint32_t> MultiLevelIndex::bucket(std::size_t rep,
                                                       std::span<const BucketId> prefix) const {
  if (rep >= repetitions_) fail(ErrorKind::InvalidArgument, "repetition out of range");
  const std::size_t k = prefix.size();
  if (k < 1 || k > levels_) {
    fail(ErrorKind::InvalidArgument, "bucket prefix length " + std::to_string(k) +
                                         " outside 1.." + std::to_string(levels_));
  }
  const std::size_t n = dataset_.size();
  const auto prefix_cmp = [&](std::size_t pos) {
    const BucketId* c = codes_.data() + (rep * n + pos) * levels_;
    for (std::size_t s = 0; s < k; ++s) {
      if (c[s] != prefix[s]) return c[s] < prefix[s] ? -1 : 1;
    }
    return 0;
  };
  std::size_t lo = 0, hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (prefix_cmp(mid) < 0) lo = mid + 1; else hi = mid;
  }
  std::size_t first = lo;
  hi = n;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (prefix_cmp(mid) <= 0) lo = mid + 1; else hi = mid;
  }
  return std::span<const std::uint32_t>(order_).subspan(rep * n + first, lo - first);
}

// ---------------------------------------------------------------------------
// Index file

namespace {

constexpr char kMagic[8] = {'M', 'L', 'S', 'L', 'S', 'H', '0', '1'};
constexpr std::uint32_t kIndexVersion = 1;
constexpr std::uint32_t kFlagRebuildable = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u16(std::uint16_t v) { uint(v); }
  void u32(std::uint32_t v) { uint(v); }
  void u64(std::uint64_t v) { uint(v); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  const std::vector<unsigned char>& data() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> buf) : buf_(std::move(buf)) {}

  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) {
      fail(ErrorKind::Format, "truncated index file at byte " + std::to_string(pos_));
    }
  }
  template <typename T>
  T uint() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(buf_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::uint16_t u16() { return uint<std::uint16_t>(); }
  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  void bytes(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  // Guards allocation sizes read from the header against the bytes left.
  void expect_at_least(std::uint64_t count, std::uint64_t width) const {
    if (width != 0 && count > (buf_.size() - pos_) / width) {
      fail(ErrorKind::Format, "truncated index file at byte " + std::to_string(pos_));
    }
  }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  std::vector<unsigned char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void MultiLevelIndex::save(const std::filesystem::path& path, bool rebuildable) const {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kIndexVersion);
  w.u32(rebuildable ? kFlagRebuildable : 0);

  const auto& fam = params_.family;
  w.u32(fam.kind == FamilyKind::SphericalCap ? 0 : 1);
  w.u64(fam.dim);
  w.u64(fam.cap_count);
  w.f64(fam.cap_threshold);
  w.u64(fam.rotation_seed_base);

  const auto& cal = params_.calibration;
  w.f64(cal.r);
  w.f64(cal.c);
  w.f64(cal.p1);
  w.f64(cal.p2);
  w.f64(cal.rho);
  w.f64(cal.p1_standard_error);
  w.f64(cal.p2_standard_error);
  w.u64(cal.trials);
  w.u64(cal.seed);
  w.u64(cal.levels);
  w.u64(cal.max_probes);
  for (double v : cal.probe_success) w.f64(v);

  w.u64(params_.space_budget);
  w.u64(params_.seed);
  w.u64(levels_);
  w.u64(repetitions_);
  w.u64(dataset_.size());
  w.u64(dataset_.dim());
  for (double v : dataset_.centroid()) w.f64(v);
  for (const auto& p : dataset_.points()) {
    for (double v : p.coords) w.f64(v);
  }
  if (!rebuildable) {
    for (std::size_t i = 0; i < repetitions_; ++i) {
      for (std::size_t p = 0; p < dataset_.size(); ++p) {
        for (BucketId b : code(i, p)) w.u16(b);
      }
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(w.data().data()),
            static_cast<std::streamsize>(w.data().size()));
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

MultiLevelIndex MultiLevelIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(buf));

  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) fail(ErrorKind::Format, "bad index magic");
  if (r.u32() != kIndexVersion) fail(ErrorKind::Format, "unsupported index version");
  const std::uint32_t flags = r.u32();
  if ((flags & ~kFlagRebuildable) != 0) fail(ErrorKind::Format, "unknown index flags");

  FamilyParams fam;
  const std::uint32_t kind = r.u32();
  if (kind > 1) fail(ErrorKind::Format, "unknown family kind");
  fam.kind = kind == 0 ? FamilyKind::SphericalCap : FamilyKind::CrossPolytope;
  fam.dim = r.u64();
  fam.cap_count = r.u64();
  fam.cap_threshold = r.f64();
  fam.rotation_seed_base = r.u64();
  try {
    fam.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("bad family in index header: ") + e.what());
  }

  FamilyCalibration cal;
  cal.family = fam;
  cal.r = r.f64();
  cal.c = r.f64();
  cal.p1 = r.f64();
  cal.p2 = r.f64();
  cal.rho = r.f64();
  cal.p1_standard_error = r.f64();
  cal.p2_standard_error = r.f64();
  cal.trials = r.u64();
  cal.seed = r.u64();
  cal.levels = r.u64();
  cal.max_probes = r.u64();
  if (cal.levels == 0 || cal.max_probes == 0) fail(ErrorKind::Format, "empty calibration table");
  r.expect_at_least(cal.levels, 8 * cal.max_probes);
  cal.probe_success.resize(cal.levels * cal.max_probes);
  for (auto& v : cal.probe_success) v = r.f64();

  BuildParams params;
  params.family = fam;
  params.calibration = std::move(cal);
  params.space_budget = r.u64();
  params.seed = r.u64();
  const std::uint64_t K = r.u64();
  const std::uint64_t R = r.u64();
  const std::uint64_t n = r.u64();
  const std::uint64_t d = r.u64();
  if (d != fam.dim) fail(ErrorKind::Format, "index dimension disagrees with family");
  if (n == 0 || K == 0 || R == 0 || K > params.calibration.levels) {
    fail(ErrorKind::Format, "inconsistent index header");
  }
  r.expect_at_least(d, 8);
  std::vector<double> centroid(d);
  for (auto& v : centroid) v = r.f64();
  r.expect_at_least(n, 8 * d);
  std::vector<UnitPoint> points(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    points[i].id = i;
    points[i].coords.resize(d);
    for (auto& v : points[i].coords) v = r.f64();
  }

  MultiLevelIndex index(Dataset(std::move(points), std::move(centroid)), std::move(params));
  index.levels_ = K;
  index.repetitions_ = R;
  index.make_slots();
  if (flags & kFlagRebuildable) {
    index.compute_codes();
  } else {
    r.expect_at_least(R * n, 2 * K);
    index.codes_.resize(R * n * K);
    const std::uint64_t universe = fam.bucket_universe();
    for (auto& b : index.codes_) {
      b = r.u16();
      if (b >= universe) fail(ErrorKind::Format, "bucket id outside the family's universe");
    }
  }
  if (!r.at_end()) fail(ErrorKind::Format, "trailing bytes after index data");
  index.sort_repetitions();
  return index;
}

}  // namespace mlsh
