#include <gtest/gtest.h>

#include <cmath>

#include "mlsh/calibration.hpp"
#include "mlsh/error.hpp"

using namespace mlsh;

TEST(Rho, Arithmetic) {
  EXPECT_NEAR(rho(0.5, 0.1), std::log(2.0) / std::log(10.0), 1e-15);
  EXPECT_NEAR(rho(0.5, 0.1), 0.30103, 1e-5);
  EXPECT_DOUBLE_EQ(rho(0.3, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(rho(1.0, 0.5), 0.0);
}

TEST(Rho, RejectsOutOfRange) {
  EXPECT_THROW(rho(0.5, 0.0), Error);
  EXPECT_THROW(rho(0.5, 1.0), Error);
  EXPECT_THROW(rho(0.0, 0.1), Error);
  EXPECT_THROW(rho(0.1, 0.5), Error);
}

TEST(TheoreticalRho, Formulas) {
  EXPECT_NEAR(theoretical_rho(Space::Euclidean, 2.0), 1.0 / 7.0, 1e-12);
  EXPECT_NEAR(theoretical_rho(Space::Hamming, 2.0), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(theoretical_rho(Space::Euclidean, 1.0 + 1e-9), 1.0, 1e-6);
  EXPECT_THROW(theoretical_rho(Space::Euclidean, 1.0), Error);
}

TEST(CollisionEstimate, ZeroDistanceAlwaysCollides) {
  for (auto params : {FamilyParams::spherical_cap(16), FamilyParams::cross_polytope(16)}) {
    const auto est = estimate_collision_prob(params, 0.0, 2000, 1);
    EXPECT_EQ(est.probability, 1.0);
    EXPECT_EQ(est.standard_error, 0.0);
  }
}

// Antipodal pairs under caps: x and -x cannot share a cap at η > 0, so they
// collide only if both overflow, i.e. |<g_t, x>| < η for all T caps. With
// (1 + <g, x>)/2 ~ Beta((d-1)/2, (d-1)/2) that is P(|t| < 0.3)^32 for d = 16.
TEST(CollisionEstimate, AntipodalCapPairsAgreeWithClosedForm) {
  auto params = FamilyParams::spherical_cap(16, 32);
  params.cap_threshold = 0.3;
  const double exact = 1.4083807382437831e-4;
  const auto est = estimate_collision_prob(params, 2.0, 100000, 9);
  EXPECT_LT(est.probability, 0.05);
  const double sigma = std::sqrt(exact * (1 - exact) / 100000.0);
  EXPECT_NEAR(est.probability, exact, 3 * sigma + 1e-5);
}

TEST(CollisionEstimate, DecreasesWithDistance) {
  for (auto params : {FamilyParams::spherical_cap(16), FamilyParams::cross_polytope(16)}) {
    const auto a = estimate_collision_prob(params, 0.3, 20000, 4);
    const auto b = estimate_collision_prob(params, 0.9, 20000, 5);
    EXPECT_GT(a.probability - b.probability,
              3 * std::hypot(a.standard_error, b.standard_error));
  }
}

TEST(CollisionEstimate, RejectsBadArguments) {
  const auto params = FamilyParams::cross_polytope(8);
  EXPECT_THROW(estimate_collision_prob(params, 2.1, 2000, 0), Error);
  EXPECT_THROW(estimate_collision_prob(params, -0.1, 2000, 0), Error);
  EXPECT_THROW(estimate_collision_prob(params, 0.5, 999, 0), Error);
}

TEST(CollisionEstimate, Deterministic) {
  const auto params = FamilyParams::spherical_cap(8);
  EXPECT_EQ(estimate_collision_prob(params, 0.7, 3000, 17).probability,
            estimate_collision_prob(params, 0.7, 3000, 17).probability);
}

class CalibrationTable : public ::testing::TestWithParam<FamilyKind> {};

TEST_P(CalibrationTable, ConsistentAndMonotone) {
  const std::size_t d = 16;
  CalibrationRequest req;
  req.family = GetParam() == FamilyKind::SphericalCap ? FamilyParams::spherical_cap(d)
                                                     : FamilyParams::cross_polytope(d);
  req.r = 0.5;
  req.c = 2.0;
  req.levels = 5;
  req.max_probes = 8;
  req.trials = 20000;
  req.seed = 123;
  const auto cal = calibrate(req);

  EXPECT_GT(cal.p1, cal.p2);
  EXPECT_GT(cal.p2, 0.0);
  EXPECT_EQ(cal.rho, rho(cal.p1, cal.p2));

  // Two estimators of the same quantity: P[1,1] and p1.
  const double n = static_cast<double>(req.trials);
  const double p11 = cal.probe_probability(1, 1);
  const double sigma = std::sqrt(p11 * (1 - p11) / n + cal.p1 * (1 - cal.p1) / n);
  EXPECT_NEAR(p11, cal.p1, 3 * sigma);

  for (std::size_t k = 1; k <= cal.levels; ++k) {
    for (std::size_t j = 1; j <= cal.max_probes; ++j) {
      const double p = cal.probe_probability(k, j);
      if (j > 1) EXPECT_GE(p, cal.probe_probability(k, j - 1));
      if (k > 1) EXPECT_LE(p, cal.probe_probability(k - 1, j));
    }
  }
  // Beyond J_max the last column stands in.
  EXPECT_EQ(cal.probe_probability(2, 100), cal.probe_probability(2, cal.max_probes));
  EXPECT_THROW(cal.probe_probability(0, 1), Error);
  EXPECT_THROW(cal.probe_probability(cal.levels + 1, 1), Error);
}

INSTANTIATE_TEST_SUITE_P(Families, CalibrationTable,
                         ::testing::Values(FamilyKind::SphericalCap, FamilyKind::CrossPolytope));

TEST(Calibrate, UninformativeFamilyFails) {
  // Caps this narrow are never reached: every point overflows, p1 = p2 = 1.
  CalibrationRequest req;
  req.family = FamilyParams::spherical_cap(16, 2);
  req.family.cap_threshold = 0.99;
  req.trials = 2000;
  try {
    calibrate(req);
    FAIL() << "expected calibration failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Calibration);
  }
}

TEST(Calibrate, ZeroFarEstimateIsClampedWithWarning) {
  CalibrationRequest req;
  // Antipodal points never share a cross-polytope vertex.
  req.family = FamilyParams::cross_polytope(16);
  req.r = 0.5;
  req.c = 4.0;
  req.trials = 1000;
  req.levels = 2;
  req.max_probes = 2;
  req.seed = 1;
  const auto cal = calibrate(req);
  EXPECT_EQ(cal.p2, 1.0 / 1000.0);
  ASSERT_EQ(cal.warnings.size(), 1u);
}

TEST(Calibrate, JsonRoundTrip) {
  CalibrationRequest req;
  req.family = FamilyParams::spherical_cap(8);
  req.levels = 3;
  req.max_probes = 4;
  req.trials = 2000;
  req.seed = 5;
  const auto cal = calibrate(req);
  const auto doc = to_json(cal);
  EXPECT_EQ(doc.at("version"), kCalibrationFormatVersion);
  EXPECT_EQ(doc.at("P").size(), 3u);
  const auto back = calibration_from_json(nlohmann::json::parse(doc.dump()));
  EXPECT_EQ(back.family, cal.family);
  EXPECT_EQ(back.p1, cal.p1);
  EXPECT_EQ(back.p2, cal.p2);
  EXPECT_EQ(back.rho, cal.rho);
  EXPECT_EQ(back.probe_success, cal.probe_success);

  auto wrong = doc;
  wrong["version"] = 99;
  EXPECT_THROW(calibration_from_json(wrong), Error);
}
