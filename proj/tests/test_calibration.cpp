#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "nfloc/array_model.hpp"
#include "nfloc/calibration.hpp"
#include "nfloc/errors.hpp"
#include "nfloc/subspace_doa.hpp"

using namespace nfloc;

namespace {

ArrayConfig reference_array() { return ArrayConfig::from_grouping(240, 3, 5, 30e9); }

// Intersects the two rays in Cartesian coordinates (x along the array, y broadside).
EmitterPosition intersect_rays(double th1, double th2, double x1, double x2) {
  Eigen::Matrix2d A;
  A << std::sin(th1), -std::sin(th2), std::cos(th1), -std::cos(th2);
  const Eigen::Vector2d t = A.partialPivLu().solve(Eigen::Vector2d(x2 - x1, 0.0));
  const double x = x1 + t(0) * std::sin(th1);
  const double y = t(0) * std::cos(th1);
  return {std::atan2(x, y), std::hypot(x, y)};
}

}  // namespace

TEST_CASE("calibrate_pair recovers noiseless positions") {
  const ArrayConfig cfg = reference_array();
  const FresnelInterval fr = fresnel_interval(cfg);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(deg2rad(-80.0), deg2rad(80.0)), rr(fr.r_min, fr.r_max);
  for (int k = 0; k < 300; ++k) {
    const EmitterPosition pos{th(rng), rr(rng)};
    for (int l1 = 0; l1 < cfg.L; ++l1) {
      for (int l2 = l1 + 1; l2 < cfg.L; ++l2) {
        const double t1 = group_true_angle(cfg, l1, pos);
        const double t2 = group_true_angle(cfg, l2, pos);
        const PairCalibration p = calibrate_pair(t1, t2, l1, l2, cfg);
        CHECK(p.valid);
        CHECK_FALSE(p.degenerate);
        CHECK(std::abs(p.theta - pos.theta) < 1e-9);
        CHECK(std::abs(p.range - pos.range) < 1e-7 * pos.range);
      }
    }
  }
}

TEST_CASE("calibrate_pair matches Cartesian ray intersection for arbitrary angles") {
  const ArrayConfig cfg = reference_array();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> th(-1.4, 1.4);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    const double t1 = th(rng), t2 = th(rng);
    if (std::abs(std::sin(t1 - t2)) < 1e-3) continue;
    const int l1 = k % 4, l2 = 4;
    const PairCalibration p = calibrate_pair_flagged(t1, t2, l1, l2, cfg);
    const EmitterPosition oracle = intersect_rays(t1, t2, cfg.group_offset(l1), cfg.group_offset(l2));
    // rays meeting behind the array give a negative parameter; flagged invalid
    Eigen::Matrix2d A;
    A << std::sin(t1), -std::sin(t2), std::cos(t1), -std::cos(t2);
    const Eigen::Vector2d t = A.partialPivLu().solve(Eigen::Vector2d(cfg.pair_baseline(l1, l2), 0.0));
    if (t(0) > 0 && t(1) > 0) {
      REQUIRE(p.valid);
      CHECK(std::abs(p.theta - oracle.theta) < 1e-9);
      CHECK(std::abs(p.range - oracle.range) < 1e-9 * std::max(1.0, oracle.range));
      ++checked;
    } else {
      CHECK_FALSE(p.valid);
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("calibrate_pair edge cases") {
  const ArrayConfig cfg = reference_array();
  SUBCASE("reference group keeps its own angle exactly") {
    for (double t1 : {-1.3, -0.2, 0.0, 0.77}) {
      CHECK(calibrate_pair_flagged(t1, t1 - 0.01, 0, 3, cfg).theta == t1);
    }
  }
  SUBCASE("parallel rays") {
    CHECK_THROWS_AS(calibrate_pair(0.3, 0.3, 1, 2, cfg), DegeneratePair);
    const PairCalibration p = calibrate_pair_flagged(0.3, 0.3, 1, 2, cfg);
    CHECK(p.degenerate);
    CHECK_FALSE(p.valid);
    CHECK(std::isinf(p.range));
  }
  SUBCASE("diverging rays are invalid") {
    const PairCalibration p = calibrate_pair_flagged(0.2, 0.3, 0, 1, cfg);
    CHECK_FALSE(p.valid);
    CHECK(p.range < 0.0);
  }
  SUBCASE("bad group order") {
    CHECK_THROWS_AS(calibrate_pair(0.1, 0.2, 2, 1, cfg), std::invalid_argument);
    CHECK_THROWS_AS(calibrate_pair(0.1, 0.2, 0, 5, cfg), std::invalid_argument);
  }
}

TEST_CASE("candidate set layout") {
  const ArrayConfig cfg = reference_array();
  const EmitterPosition pos{deg2rad(60.0), 20.0};
  const GroupSnapshots s = synthesize(cfg, pos, BeamformerSetting::zeros(cfg.L), INFINITY, 10, 1);
  const std::vector<AmbiguousAngleSet> sets = estimate_ambiguous_sets(s, cfg);
  const CandidatePositionSet omega = build_candidate_set(sets, cfg);
  CHECK(omega.pairs() == 10);
  CHECK(omega.ambiguity() == 3);
  CHECK(omega.entries().size() == 30);
  for (int i = 0; i < 3; ++i) {
    const auto c = omega.cluster(i);
    int idx = 0;
    for (int l1 = 0; l1 < cfg.L; ++l1) {
      for (int l2 = l1 + 1; l2 < cfg.L; ++l2, ++idx) {
        CHECK(c[idx].l1 == l1);
        CHECK(c[idx].l2 == l2);
        CHECK(c[idx].coeff == i);
      }
    }
  }
  CHECK_THROWS_AS(omega.cluster(3), std::out_of_range);
  CHECK_THROWS_AS(CandidatePositionSet(10, 3, {}), std::invalid_argument);

  const int coeff = nearest_coefficient(sets[0], pos.theta);
  for (const auto& c : omega.cluster(coeff)) {
    CHECK(c.valid);
    CHECK(std::abs(c.theta - pos.theta) < 1e-7);
    CHECK(std::abs(c.range - pos.range) < 1e-5);
  }

  const AsdCollection asd = asd_angle_sets(sets[0], sets, cfg);
  CHECK(asd.entries.size() == 15);
  for (int i = 0; i < 3; ++i) {
    const auto c = asd.coefficient(i);
    for (int l = 0; l < cfg.L; ++l) {
      CHECK(c[l].source == l);
      CHECK(c[l].coeff == i);
    }
    CHECK(c[0].theta == sets[0].angles[i].theta);
  }
  for (const auto& a : asd.coefficient(coeff)) CHECK(std::abs(a.theta - pos.theta) < 1e-7);
}
