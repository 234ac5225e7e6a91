#include "mlsh/hash_family.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "mlsh/error.hpp"
#include "mlsh/random.hpp"

namespace mlsh {

std::string_view to_string(FamilyKind kind) {
  return kind == FamilyKind::SphericalCap ? "spherical_cap" : "cross_polytope";
}

FamilyKind family_kind_from_string(std::string_view name) {
  if (name == "spherical_cap" || name == "cap") return FamilyKind::SphericalCap;
  if (name == "cross_polytope" || name == "cp") return FamilyKind::CrossPolytope;
  fail(ErrorKind::InvalidArgument, "unknown hash family '" + std::string(name) + "'");
}

double default_cap_threshold(std::size_t dim, std::size_t cap_count) {
  if (dim < 2 || cap_count < 2) {
    fail(ErrorKind::InvalidArgument, "cap threshold needs dim >= 2 and T >= 2");
  }
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 1.0 - 1.0 / static_cast<double>(cap_count));
  const double approx = z / std::sqrt(static_cast<double>(dim));
  if (approx < 1.0) return approx;
  // Low dimensions: use the exact marginal, (1 + <g, x>) / 2 ~ Beta((d-1)/2, (d-1)/2).
  const double a = 0.5 * static_cast<double>(dim - 1);
  return 2.0 * boost::math::ibeta_inv(a, a, 1.0 - 1.0 / static_cast<double>(cap_count)) - 1.0;
}

FamilyParams FamilyParams::spherical_cap(std::size_t dim, std::size_t cap_count) {
  FamilyParams p;
  p.kind = FamilyKind::SphericalCap;
  p.dim = dim;
  p.cap_count = cap_count;
  p.cap_threshold = default_cap_threshold(dim, cap_count);
  return p;
}

FamilyParams FamilyParams::cross_polytope(std::size_t dim) {
  FamilyParams p;
  p.kind = FamilyKind::CrossPolytope;
  p.dim = dim;
  p.cap_count = 0;
  p.cap_threshold = 0.0;
  return p;
}

void FamilyParams::validate() const {
  if (dim < 2) fail(ErrorKind::InvalidArgument, "family dimension must be at least 2");
  if (kind == FamilyKind::SphericalCap) {
    if (cap_count < 2) fail(ErrorKind::InvalidArgument, "spherical cap family needs T >= 2");
    if (!(cap_threshold > 0.0 && cap_threshold < 1.0)) {
      fail(ErrorKind::InvalidArgument, "cap threshold must lie in (0, 1)");
    }
  }
  if (bucket_universe() > 65536) {
    fail(ErrorKind::InvalidArgument, "bucket universe exceeds 16-bit bucket ids");
  }
}

std::size_t FamilyParams::bucket_universe() const {
  return kind == FamilyKind::SphericalCap ? cap_count + 1 : 2 * dim;
}

namespace {

// Modified Gram-Schmidt over the rows, run twice for orthogonality at the
// level of rounding error.
void orthonormalize_rows(std::vector<double>& m, std::size_t dim) {
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t r = 0; r < dim; ++r) {
      double* row = m.data() + r * dim;
      for (std::size_t p = 0; p < r; ++p) {
        const double* prev = m.data() + p * dim;
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) dot += row[j] * prev[j];
        for (std::size_t j = 0; j < dim; ++j) row[j] -= dot * prev[j];
      }
      double len = 0.0;
      for (std::size_t j = 0; j < dim; ++j) len += row[j] * row[j];
      len = std::sqrt(len);
      for (std::size_t j = 0; j < dim; ++j) row[j] /= len;
    }
  }
}

}  // namespace

HashFunction HashFunction::sample(const FamilyParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(derive_seed(params.rotation_seed_base, seed, 0x68617368ULL));
  const std::size_t d = params.dim;
  std::vector<double> matrix;
  if (params.kind == FamilyKind::SphericalCap) {
    matrix.reserve(params.cap_count * d);
    for (std::size_t t = 0; t < params.cap_count; ++t) {
      const auto g = random_unit_vector(rng, d);
      matrix.insert(matrix.end(), g.begin(), g.end());
    }
  } else {
    // A Gaussian matrix is full rank with probability 1; resample otherwise.
    for (;;) {
      matrix = random_gaussian_vector(rng, d * d);
      orthonormalize_rows(matrix, d);
      if (std::all_of(matrix.begin(), matrix.end(), [](double v) { return std::isfinite(v); })) {
        break;
      }
    }
  }
  return HashFunction(params, seed, std::move(matrix));
}

HashFunction HashFunction::with_matrix(const FamilyParams& params, std::vector<double> matrix) {
  params.validate();
  const std::size_t rows =
      params.kind == FamilyKind::SphericalCap ? params.cap_count : params.dim;
  if (matrix.size() != rows * params.dim) {
    fail(ErrorKind::DimensionMismatch, "hash matrix has the wrong shape");
  }
  return HashFunction(params, 0, std::move(matrix));
}

void HashFunction::check_dim(std::span<const double> x) const {
  if (x.size() != params_.dim) {
    fail(ErrorKind::DimensionMismatch, "hash input has dimension " + std::to_string(x.size()) +
                                           ", family has " + std::to_string(params_.dim));
  }
}

std::vector<double> HashFunction::project(std::span<const double> x) const {
  const std::size_t d = params_.dim;
  const std::size_t rows = matrix_.size() / d;
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = matrix_.data() + r * d;
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += row[j] * x[j];
    out[r] = dot;
  }
  return out;
}

BucketId HashFunction::hash(std::span<const double> x) const {
  check_dim(x);
  const std::size_t d = params_.dim;
  if (params_.kind == FamilyKind::SphericalCap) {
    const double eta = params_.cap_threshold;
    for (std::size_t t = 0; t < params_.cap_count; ++t) {
      const double* g = matrix_.data() + t * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += g[j] * x[j];
      if (dot >= eta) return static_cast<BucketId>(t);
    }
    return static_cast<BucketId>(params_.cap_count);
  }
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (std::size_t i = 0; i < d; ++i) {
    const double* row = matrix_.data() + i * d;
    double y = 0.0;
    for (std::size_t j = 0; j < d; ++j) y += row[j] * x[j];
    // Bucket 2i scores y, bucket 2i+1 scores -y; scanning in id order with a
    // strict comparison keeps the smaller id on ties.
    if (y > best_score) {
      best_score = y;
      best = 2 * i;
    }
    if (-y > best_score) {
      best_score = -y;
      best = 2 * i + 1;
    }
  }
  return static_cast<BucketId>(best);
}

std::vector<ProbeEntry> HashFunction::ranked_buckets(std::span<const double> q) const {
  check_dim(q);
  const auto proj = project(q);
  std::vector<ProbeEntry> ranked;
  ranked.reserve(params_.bucket_universe());

  if (params_.kind == FamilyKind::CrossPolytope) {
    double top = -INFINITY;
    for (double y : proj) top = std::max(top, std::abs(y));
    for (std::size_t i = 0; i < proj.size(); ++i) {
      ranked.push_back({static_cast<BucketId>(2 * i), top - proj[i]});
      ranked.push_back({static_cast<BucketId>(2 * i + 1), top + proj[i]});
    }
  } else {
    // Deficit = how far the projections must move before a nearby point
    // would land in bucket t instead of home bucket h:
    //   t < h:     η - <g_t,q>                (enter an earlier cap)
    //   t > h:     slack(h) + max(0, η - <g_t,q>)  (leave h, reach t)
    //   overflow:  sum of slack over every cap q already reaches
    // with slack(t) = <g_t,q> - η. When q sits in overflow every cap costs
    // η - <g_t,q>.
    const double eta = params_.cap_threshold;
    const std::size_t caps = params_.cap_count;
    std::size_t home = caps;
    for (std::size_t t = 0; t < caps; ++t) {
      if (proj[t] >= eta) {
        home = t;
        break;
      }
    }
    double reached_slack = 0.0;
    for (std::size_t t = 0; t < caps; ++t) {
      if (proj[t] >= eta) reached_slack += proj[t] - eta;
    }
    const double home_slack = home < caps ? proj[home] - eta : 0.0;
    for (std::size_t t = 0; t < caps; ++t) {
      double deficit;
      if (t == home) {
        deficit = 0.0;
      } else if (t < home) {
        deficit = eta - proj[t];
      } else {
        deficit = home_slack + std::max(0.0, eta - proj[t]);
      }
      ranked.push_back({static_cast<BucketId>(t), deficit});
    }
    ranked.push_back({static_cast<BucketId>(caps), home == caps ? 0.0 : reached_slack});
  }

  std::sort(ranked.begin(), ranked.end(), [](const ProbeEntry& a, const ProbeEntry& b) {
    if (a.deficit != b.deficit) return a.deficit < b.deficit;
    return a.bucket < b.bucket;
  });
  return ranked;
}

std::vector<BucketId> HashFunction::probe_sequence(std::span<const double> q,
                                                   std::size_t j_max) const {
  if (j_max < 1) fail(ErrorKind::InvalidArgument, "probe count must be at least 1");
  const auto ranked = ranked_buckets(q);
  const std::size_t len = std::min(j_max, ranked.size());
  std::vector<BucketId> out(len);
  for (std::size_t j = 0; j < len; ++j) out[j] = ranked[j].bucket;
  return out;
}

}  // namespace mlsh
