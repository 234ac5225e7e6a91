#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mlsh {

// A point on the unit sphere. `id` indexes into the owning Dataset; queries
// carry whatever id the caller assigns.
struct UnitPoint {
  std::vector<double> coords;
  std::size_t id = 0;

  std::size_t dim() const { return coords.size(); }
  std::span<const double> view() const { return coords; }
};

// Points normalized onto the unit sphere, with ids 0..n-1 and the centroid
// that was subtracted before normalization (zero for data generated on the
// sphere). Immutable once constructed.
class Dataset {
 public:
  Dataset(std::vector<UnitPoint> points, std::vector<double> centroid);

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return centroid_.size(); }
  bool empty() const { return points_.empty(); }

  const UnitPoint& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<UnitPoint>& points() const { return points_; }
  const std::vector<double>& centroid() const { return centroid_; }

  // Maps a raw vector into the normalized space the points live in:
  // subtract the centroid, scale to unit norm. Zero residuals map to e_0.
  UnitPoint map_query(std::span<const double> raw, std::size_t id = 0) const;

 private:
  std::vector<UnitPoint> points_;
  std::vector<double> centroid_;
};

// Euclidean distance. Throws DimensionMismatch on unequal lengths.
double distance(std::span<const double> x, std::span<const double> y);
inline double distance(const UnitPoint& x, const UnitPoint& y) {
  return distance(x.view(), y.view());
}

double norm(std::span<const double> x);

struct NormalizationResult {
  Dataset dataset;
  // ids whose centered residual had norm < 1e-12 and were mapped to e_0
  std::vector<std::size_t> degenerate;
};

NormalizationResult normalize_dataset(const std::vector<std::vector<double>>& raw);

class Rng;

// A unit vector at exact chord distance `chord` from the unit vector `x`,
// in a uniformly random direction (spherical interpolation along a great
// circle). chord must lie in [0, 2].
std::vector<double> point_at_distance(std::span<const double> x, double chord, Rng& rng);

struct PlantedSpec {
  std::size_t n = 1000;
  std::size_t dim = 16;
  double radius = 0.4;
  std::size_t planted = 5;  // t, per query
  std::size_t queries = 10;
  std::uint64_t seed = 0;
};

// Dataset of exactly `n` unit points: n - planted*queries uniform background
// points, plus `planted` points within `radius` of each query. Ground truth
// is the exact range set over the final dataset.
struct PlantedInstance {
  Dataset dataset;
  std::vector<UnitPoint> queries;
  std::vector<std::vector<std::size_t>> ground_truth;
};

PlantedInstance generate_planted_instance(const PlantedSpec& spec);

}  // namespace mlsh
