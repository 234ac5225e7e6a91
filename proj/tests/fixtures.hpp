#pragma once

#include "mlsh/bench.hpp"
#include "mlsh/calibration.hpp"
#include "mlsh/geometry.hpp"
#include "mlsh/index.hpp"

namespace mlsh::testing {

struct SmallSetup {
  PlantedInstance instance;
  MultiLevelIndex index;
};

inline FamilyCalibration quick_calibration(FamilyKind kind, std::size_t dim, std::size_t n,
                                           double r, std::uint64_t seed,
                                           std::size_t max_probes = 8) {
  CalibrationRequest req;
  req.family = default_family(kind, dim);
  req.r = r;
  req.c = 2.0;
  req.max_probes = max_probes;
  req.trials = 4000;
  req.seed = seed;
  return calibrate_for_size(req, n);
}

inline MultiLevelIndex build_index(const Dataset& data, const FamilyCalibration& cal,
                                   std::uint64_t budget, std::uint64_t seed) {
  BuildParams bp;
  bp.space_budget = budget;
  bp.family = cal.family;
  bp.calibration = cal;
  bp.seed = seed;
  return MultiLevelIndex::build(data, bp);
}

inline SmallSetup small_setup(FamilyKind kind, std::size_t n, std::size_t dim, std::uint64_t seed,
                              std::uint64_t budget = 40, std::size_t queries = 10) {
  PlantedSpec spec;
  spec.n = n;
  spec.dim = dim;
  spec.radius = 0.4;
  spec.planted = 5;
  spec.queries = queries;
  spec.seed = seed;
  auto inst = generate_planted_instance(spec);
  const auto cal = quick_calibration(kind, dim, n, spec.radius, seed + 1);
  auto index = build_index(inst.dataset, cal, budget, seed + 2);
  return {std::move(inst), std::move(index)};
}

}  // namespace mlsh::testing
