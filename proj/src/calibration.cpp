#include "mlsh/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlsh/error.hpp"
#include "mlsh/geometry.hpp"
#include "mlsh/multi_probe.hpp"
#include "mlsh/random.hpp"

namespace mlsh {

double rho(double p1, double p2) {
  if (!(p2 > 0.0 && p2 < 1.0)) fail(ErrorKind::InvalidArgument, "rho needs 0 < p2 < 1");
  if (!(p1 > 0.0 && p1 <= 1.0)) fail(ErrorKind::InvalidArgument, "rho needs 0 < p1 <= 1");
  if (p1 < p2) fail(ErrorKind::InvalidArgument, "rho needs p1 >= p2");
  return std::log(1.0 / p1) / std::log(1.0 / p2);
}

double theoretical_rho(Space space, double c) {
  if (!(c > 1.0)) fail(ErrorKind::InvalidArgument, "approximation factor must exceed 1");
  return space == Space::Euclidean ? 1.0 / (2.0 * c * c - 1.0) : 1.0 / (2.0 * c - 1.0);
}

CollisionEstimate estimate_collision_prob(const FamilyParams& params, double dist,
                                          std::size_t trials, std::uint64_t seed) {
  params.validate();
  if (!(dist >= 0.0 && dist <= 2.0)) {
    fail(ErrorKind::InvalidArgument, "collision distance must lie in [0, 2]");
  }
  if (trials < 1000) fail(ErrorKind::InvalidArgument, "collision estimate needs >= 1000 trials");

  std::size_t hits = 0;
  const std::size_t batches = (trials + kPairsPerHash - 1) / kPairsPerHash;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto h = HashFunction::sample(params, derive_seed(seed, b, 1));
    Rng rng(derive_seed(seed, b, 2));
    const std::size_t count = std::min(kPairsPerHash, trials - b * kPairsPerHash);
    for (std::size_t i = 0; i < count; ++i) {
      const auto x = random_unit_vector(rng, params.dim);
      const auto y = point_at_distance(x, dist, rng);
      if (h.hash(x) == h.hash(y)) ++hits;
    }
  }
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  return CollisionEstimate{p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials)), trials};
}

double FamilyCalibration::probe_probability(std::size_t k, std::size_t j) const {
  if (k < 1 || k > levels) {
    fail(ErrorKind::InvalidArgument, "level " + std::to_string(k) + " outside calibrated 1.." +
                                         std::to_string(levels));
  }
  if (j < 1) fail(ErrorKind::InvalidArgument, "probe count must be at least 1");
  j = std::min(j, max_probes);
  return probe_success[(k - 1) * max_probes + (j - 1)];
}

void validate(const CalibrationRequest& req) {
  req.family.validate();
  if (!(req.c > 1.0)) fail(ErrorKind::InvalidArgument, "approximation factor c must exceed 1");
  if (!(req.r > 0.0 && req.c * req.r <= 2.0)) {
    fail(ErrorKind::InvalidArgument, "calibration needs 0 < r and c*r <= 2");
  }
  if (req.levels < 1) fail(ErrorKind::InvalidArgument, "calibration needs K >= 1");
  if (req.max_probes < 1) fail(ErrorKind::InvalidArgument, "calibration needs J_max >= 1");
}

FamilyCalibration calibrate(const CalibrationRequest& req) {
  validate(req);

  FamilyCalibration cal;
  cal.family = req.family;
  cal.r = req.r;
  cal.c = req.c;
  cal.trials = req.trials;
  cal.seed = req.seed;
  cal.levels = req.levels;
  cal.max_probes = req.max_probes;

  const auto near = estimate_collision_prob(req.family, req.r, req.trials, derive_seed(req.seed, 1));
  const auto far =
      estimate_collision_prob(req.family, req.c * req.r, req.trials, derive_seed(req.seed, 2));
  cal.p1 = near.probability;
  cal.p2 = far.probability;
  cal.p1_standard_error = near.standard_error;
  cal.p2_standard_error = far.standard_error;
  if (cal.p2 <= 0.0) {
    cal.p2 = 1.0 / static_cast<double>(req.trials);
    cal.warnings.push_back("p2 estimate was 0; clamped to 1/trials");
  }
  if (cal.p1 <= cal.p2) {
    fail(ErrorKind::Calibration, "family is uninformative at (r, cr): p1=" +
                                     std::to_string(cal.p1) + " <= p2=" + std::to_string(cal.p2));
  }
  cal.rho = rho(cal.p1, cal.p2);

  // hits[(k-1) * J + (pos-1)]: trials whose level-k code first appears at
  // probe position pos; cumulated into P afterwards.
  const std::size_t K = req.levels;
  const std::size_t J = req.max_probes;
  std::vector<std::size_t> hits(K * J, 0);
  const std::uint64_t table_seed = derive_seed(req.seed, 3);
  const std::size_t batches = (req.trials + kPairsPerHash - 1) / kPairsPerHash;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<HashFunction> slots;
    slots.reserve(K);
    for (std::size_t s = 0; s < K; ++s) {
      slots.push_back(HashFunction::sample(req.family, derive_seed(table_seed, b, s + 1)));
    }
    Rng rng(derive_seed(table_seed, b, 0));
    const std::size_t count = std::min(kPairsPerHash, req.trials - b * kPairsPerHash);
    for (std::size_t i = 0; i < count; ++i) {
      const auto q = random_unit_vector(rng, req.family.dim);
      const auto y = point_at_distance(q, req.r, rng);
      std::vector<BucketId> y_code(K);
      std::vector<std::vector<ProbeEntry>> rankings(K);
      for (std::size_t s = 0; s < K; ++s) {
        y_code[s] = slots[s].hash(y);
        rankings[s] = slots[s].ranked_buckets(q);
      }
      for (std::size_t k = 1; k <= K; ++k) {
        MultiProbeSequence seq(
            std::vector<std::vector<ProbeEntry>>(rankings.begin(), rankings.begin() + k));
        for (std::size_t j = 0; j < J; ++j) {
          const auto code = seq.at(j);
          if (code.empty()) break;
          if (std::equal(code.begin(), code.end(), y_code.begin())) {
            ++hits[(k - 1) * J + j];
            break;
          }
        }
      }
    }
  }
  cal.probe_success.assign(K * J, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t running = 0;
    for (std::size_t j = 0; j < J; ++j) {
      running += hits[k * J + j];
      cal.probe_success[k * J + j] =
          static_cast<double>(running) / static_cast<double>(req.trials);
    }
  }
  return cal;
}

nlohmann::json to_json(const FamilyParams& params) {
  nlohmann::json j;
  j["kind"] = to_string(params.kind);
  j["dim"] = params.dim;
  if (params.kind == FamilyKind::SphericalCap) {
    j["cap_count"] = params.cap_count;
    j["cap_threshold"] = params.cap_threshold;
  }
  j["rotation_seed_base"] = params.rotation_seed_base;
  return j;
}

FamilyParams family_from_json(const nlohmann::json& doc) {
  try {
    FamilyParams p;
    p.kind = family_kind_from_string(doc.at("kind").get<std::string>());
    p.dim = doc.at("dim").get<std::size_t>();
    if (p.kind == FamilyKind::SphericalCap) {
      p.cap_count = doc.at("cap_count").get<std::size_t>();
      p.cap_threshold = doc.at("cap_threshold").get<double>();
    } else {
      p.cap_count = 0;
      p.cap_threshold = 0.0;
    }
    p.rotation_seed_base = doc.at("rotation_seed_base").get<std::uint64_t>();
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("bad family document: ") + e.what());
  }
}

nlohmann::json to_json(const FamilyCalibration& cal) {
  nlohmann::json j;
  j["format"] = "mlsh-calibration";
  j["version"] = kCalibrationFormatVersion;
  j["family"] = to_json(cal.family);
  j["d"] = cal.family.dim;
  j["r"] = cal.r;
  j["c"] = cal.c;
  j["p1"] = cal.p1;
  j["p2"] = cal.p2;
  j["p1_standard_error"] = cal.p1_standard_error;
  j["p2_standard_error"] = cal.p2_standard_error;
  j["rho"] = cal.rho;
  j["trials"] = cal.trials;
  j["seed"] = cal.seed;
  auto table = nlohmann::json::array();
  for (std::size_t k = 0; k < cal.levels; ++k) {
    table.push_back(std::vector<double>(
        cal.probe_success.begin() + static_cast<std::ptrdiff_t>(k * cal.max_probes),
        cal.probe_success.begin() + static_cast<std::ptrdiff_t>((k + 1) * cal.max_probes)));
  }
  j["P"] = std::move(table);
  j["warnings"] = cal.warnings;
  return j;
}

FamilyCalibration calibration_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "mlsh-calibration") {
      fail(ErrorKind::Format, "not a calibration document");
    }
    if (doc.at("version").get<int>() != kCalibrationFormatVersion) {
      fail(ErrorKind::Format, "unsupported calibration version");
    }
    FamilyCalibration cal;
    cal.family = family_from_json(doc.at("family"));
    cal.r = doc.at("r").get<double>();
    cal.c = doc.at("c").get<double>();
    cal.p1 = doc.at("p1").get<double>();
    cal.p2 = doc.at("p2").get<double>();
    cal.p1_standard_error = doc.value("p1_standard_error", 0.0);
    cal.p2_standard_error = doc.value("p2_standard_error", 0.0);
    cal.rho = doc.at("rho").get<double>();
    cal.trials = doc.at("trials").get<std::size_t>();
    cal.seed = doc.at("seed").get<std::uint64_t>();
    const auto& table = doc.at("P");
    cal.levels = table.size();
    cal.max_probes = cal.levels == 0 ? 0 : table.at(0).size();
    if (cal.levels == 0 || cal.max_probes == 0) fail(ErrorKind::Format, "empty P table");
    for (const auto& row : table) {
      if (row.size() != cal.max_probes) fail(ErrorKind::Format, "ragged P table");
      for (const auto& v : row) cal.probe_success.push_back(v.get<double>());
    }
    cal.warnings = doc.value("warnings", std::vector<std::string>{});
    return cal;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("bad calibration document: ") + e.what());
  }
}

}  // namespace mlsh
