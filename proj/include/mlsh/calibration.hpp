#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlsh/hash_family.hpp"

namespace mlsh {

// log(1/p1) / log(1/p2). Requires 0 < p2 < 1, p2 <= p1 <= 1.
double rho(double p1, double p2);

enum class Space { Euclidean, Hamming };

// 1/(2c²-1) for Euclidean space, 1/(2c-1) for Hamming space; c > 1.
double theoretical_rho(Space space, double c);

struct CollisionEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

// Pairs sampled per freshly drawn hash function. Pairs are uniformly
// rotated, so for a rotation-invariant family the outcomes inside a batch
// are still independent draws.
inline constexpr std::size_t kPairsPerHash = 128;

// Monte-Carlo collision probability for pairs at exact Euclidean distance
// `dist` on the unit sphere. dist in [0, 2], trials >= 1000.
CollisionEstimate estimate_collision_prob(const FamilyParams& params, double dist,
                                          std::size_t trials, std::uint64_t seed);

struct CalibrationRequest {
  FamilyParams family;
  double r = 0.4;
  double c = 2.0;
  std::size_t levels = 1;      // K
  std::size_t max_probes = 16; // J_max
  std::size_t trials = 20000;
  std::uint64_t seed = 0;
};

struct FamilyCalibration {
  FamilyParams family;
  double r = 0.0;
  double c = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double rho = 0.0;
  double p1_standard_error = 0.0;
  double p2_standard_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t levels = 0;      // K rows
  std::size_t max_probes = 0;  // J_max columns
  // probe_success[(k-1) * max_probes + (j-1)]: probability that a point at
  // distance r has its k-code among the first j codes of the query's
  // multi-probe sequence.
  std::vector<double> probe_success;
  std::vector<std::string> warnings;

  // P[k, j] with 1-based k and j. For j beyond the table the last column is
  // returned, a lower bound since P is non-decreasing in j.
  double probe_probability(std::size_t k, std::size_t j) const;
};

// Throws InvalidArgument unless c > 1, 0 < r, c·r <= 2, K >= 1, J_max >= 1.
void validate(const CalibrationRequest& request);

FamilyCalibration calibrate(const CalibrationRequest& request);

inline constexpr int kCalibrationFormatVersion = 1;

nlohmann::json to_json(const FamilyCalibration& cal);
FamilyCalibration calibration_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const FamilyParams& params);
FamilyParams family_from_json(const nlohmann::json& doc);

}  // namespace mlsh
