#include "mlsh/geometry.hpp"

#include <cmath>
#include <string>

#include "mlsh/error.hpp"
#include "mlsh/random.hpp"

namespace mlsh {

namespace {

constexpr double kDegenerateNorm = 1e-12;

std::vector<double> canonical_unit(std::size_t dim) {
  std::vector<double> e(dim, 0.0);
  e[0] = 1.0;
  return e;
}

}  // namespace

Dataset::Dataset(std::vector<UnitPoint> points, std::vector<double> centroid)
    : points_(std::move(points)), centroid_(std::move(centroid)) {
  if (centroid_.size() < 2) {
    fail(ErrorKind::InvalidArgument, "dataset dimension must be at least 2");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].dim() != centroid_.size()) {
      fail(ErrorKind::DimensionMismatch,
           "point " + std::to_string(i) + " has dimension " +
               std::to_string(points_[i].dim()) + ", expected " +
               std::to_string(centroid_.size()));
    }
    if (points_[i].id != i) {
      fail(ErrorKind::InvalidArgument, "point ids must be 0..n-1 in order");
    }
  }
}

UnitPoint Dataset::map_query(std::span<const double> raw, std::size_t id) const {
  if (raw.size() != dim()) {
    fail(ErrorKind::DimensionMismatch,
         "query has dimension " + std::to_string(raw.size()) + ", index has " +
             std::to_string(dim()));
  }
  std::vector<double> v(raw.begin(), raw.end());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= centroid_[j];
  const double len = norm(v);
  if (len < kDegenerateNorm) return UnitPoint{canonical_unit(dim()), id};
  for (auto& x : v) x /= len;
  return UnitPoint{std::move(v), id};
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(ErrorKind::DimensionMismatch, "distance between vectors of dimension " +
                                           std::to_string(x.size()) + " and " +
                                           std::to_string(y.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

NormalizationResult normalize_dataset(const std::vector<std::vector<double>>& raw) {
  if (raw.empty()) fail(ErrorKind::InvalidArgument, "cannot normalize an empty dataset");
  const std::size_t dim = raw.front().size();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].size() != dim) {
      fail(ErrorKind::DimensionMismatch, "ragged input: vector " + std::to_string(i) +
                                             " has dimension " + std::to_string(raw[i].size()) +
                                             ", expected " + std::to_string(dim));
    }
  }
  if (dim < 2) fail(ErrorKind::InvalidArgument, "dataset dimension must be at least 2");

  std::vector<double> centroid(dim, 0.0);
  for (const auto& v : raw) {
    for (std::size_t j = 0; j < dim; ++j) centroid[j] += v[j];
  }
  for (auto& c : centroid) c /= static_cast<double>(raw.size());

  std::vector<UnitPoint> points;
  points.reserve(raw.size());
  std::vector<std::size_t> degenerate;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::vector<double> v(dim);
    for (std::size_t j = 0; j < dim; ++j) v[j] = raw[i][j] - centroid[j];
    const double len = norm(v);
    if (len < kDegenerateNorm) {
      v = canonical_unit(dim);
      degenerate.push_back(i);
    } else {
      for (auto& x : v) x /= len;
    }
    points.push_back(UnitPoint{std::move(v), i});
  }
  return NormalizationResult{Dataset(std::move(points), std::move(centroid)),
                             std::move(degenerate)};
}

std::vector<double> point_at_distance(std::span<const double> x, double chord, Rng& rng) {
  if (!(chord >= 0.0 && chord <= 2.0)) {
    fail(ErrorKind::InvalidArgument, "chord distance must lie in [0, 2]");
  }
  const std::size_t dim = x.size();
  // Random direction orthogonal to x.
  std::vector<double> u;
  for (;;) {
    u = random_gaussian_vector(rng, dim);
    double dot = 0.0;
    for (std::size_t j = 0; j < dim; ++j) dot += u[j] * x[j];
    for (std::size_t j = 0; j < dim; ++j) u[j] -= dot * x[j];
    const double len = norm(u);
    if (len < 1e-9) continue;
    for (auto& v : u) v /= len;
    break;
  }
  const double angle = 2.0 * std::asin(chord / 2.0);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<double> y(dim);
  for (std::size_t j = 0; j < dim; ++j) y[j] = c * x[j] + s * u[j];
  return y;
}

PlantedInstance generate_planted_instance(const PlantedSpec& spec) {
  if (spec.dim < 2) fail(ErrorKind::InvalidArgument, "dimension must be at least 2");
  if (!(spec.radius > 0.0)) fail(ErrorKind::InvalidArgument, "radius must be positive");
  if (spec.radius >= 2.0) {
    fail(ErrorKind::InvalidArgument, "radius >= 2 covers the whole sphere");
  }
  const std::size_t planted_total = spec.planted * spec.queries;
  if (spec.n <= planted_total) {
    fail(ErrorKind::InvalidArgument,
         "n must exceed planted * queries (" + std::to_string(planted_total) + ")");
  }

  Rng rng(derive_seed(spec.seed, 0x706c616e74ULL));
  std::vector<UnitPoint> queries;
  queries.reserve(spec.queries);
  for (std::size_t q = 0; q < spec.queries; ++q) {
    queries.push_back(UnitPoint{random_unit_vector(rng, spec.dim), q});
  }

  std::vector<std::vector<double>> coords;
  coords.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n - planted_total; ++i) {
    coords.push_back(random_unit_vector(rng, spec.dim));
  }
  // Planted chord lengths stay strictly below the radius so rounding in the
  // interpolation can never push a planted point outside the range.
  for (const auto& q : queries) {
    for (std::size_t t = 0; t < spec.planted; ++t) {
      const double chord = spec.radius * rng.uniform() * (1.0 - 1e-9);
      coords.push_back(point_at_distance(q.coords, chord, rng));
    }
  }
  // Interleave planted points with the background so ids carry no signal.
  for (std::size_t i = coords.size(); i > 1; --i) {
    std::swap(coords[i - 1], coords[rng.index(i)]);
  }

  std::vector<UnitPoint> points;
  points.reserve(spec.n);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    points.push_back(UnitPoint{std::move(coords[i]), i});
  }
  Dataset dataset(std::move(points), std::vector<double>(spec.dim, 0.0));

  std::vector<std::vector<std::size_t>> truth(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (const auto& p : dataset.points()) {
      if (distance(p, queries[q]) <= spec.radius) truth[q].push_back(p.id);
    }
  }
  return PlantedInstance{std::move(dataset), std::move(queries), std::move(truth)};
}

}  // namespace mlsh
