#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mlsh {

enum class FamilyKind { SphericalCap, CrossPolytope };

std::string_view to_string(FamilyKind kind);
FamilyKind family_kind_from_string(std::string_view name);

using BucketId = std::uint16_t;

// Φ⁻¹(1 - 1/T) / √d: the threshold at which a uniform direction lands in
// any given cap with probability ≈ 1/T under the Gaussian approximation.
// Where that reaches 1 (small d) the exact sphere marginal is used instead.
double default_cap_threshold(std::size_t dim, std::size_t cap_count);

struct FamilyParams {
  FamilyKind kind = FamilyKind::CrossPolytope;
  std::size_t dim = 0;
  std::size_t cap_count = 64;   // T, SphericalCap only
  double cap_threshold = 0.0;   // η, SphericalCap only
  std::uint64_t rotation_seed_base = 0;

  static FamilyParams spherical_cap(std::size_t dim, std::size_t cap_count = 64);
  static FamilyParams cross_polytope(std::size_t dim);

  void validate() const;

  // Number of distinct bucket ids: T caps plus the overflow bucket, or 2d
  // signed axes.
  std::size_t bucket_universe() const;

  bool operator==(const FamilyParams&) const = default;
};

struct ProbeEntry {
  BucketId bucket;
  // How far the query is from falling into this bucket; 0 for its own.
  double deficit;
};

// One sphere-partitioning hash function, fully determined by (params, seed).
//
// SphericalCap carves the sphere sequentially: x belongs to the first cap t
// with <g_t, x> >= η, and to the overflow bucket T if no cap reaches η.
// CrossPolytope maps x to the nearest signed axis of Rx, encoded 2i + sign.
class HashFunction {
 public:
  static HashFunction sample(const FamilyParams& params, std::uint64_t seed);

  BucketId hash(std::span<const double> x) const;

  // Every bucket ranked best-first by deficit, ties by smaller id. The first
  // entry is always hash(q) with deficit 0.
  std::vector<ProbeEntry> ranked_buckets(std::span<const double> q) const;

  // First min(j_max, universe) ids of ranked_buckets.
  std::vector<BucketId> probe_sequence(std::span<const double> q, std::size_t j_max) const;

  const FamilyParams& params() const { return params_; }
  std::uint64_t seed() const { return seed_; }

  // Row-major: T cap directions, or the d×d rotation.
  const std::vector<double>& matrix() const { return matrix_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(matrix_).subspan(r * params_.dim, params_.dim);
  }

  // Test hook: a cross-polytope hash with an explicit rotation.
  static HashFunction with_matrix(const FamilyParams& params, std::vector<double> matrix);

 private:
  HashFunction(FamilyParams params, std::uint64_t seed, std::vector<double> matrix)
      : params_(params), seed_(seed), matrix_(std::move(matrix)) {}

  void check_dim(std::span<const double> x) const;
  std::vector<double> project(std::span<const double> x) const;

  FamilyParams params_;
  std::uint64_t seed_;
  std::vector<double> matrix_;
};

}  // namespace mlsh
