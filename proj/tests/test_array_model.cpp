#include <doctest.h>

#include <cmath>
#include <random>

#include "nfloc/array_model.hpp"
#include "nfloc/errors.hpp"

using namespace nfloc;

namespace {

ArrayConfig reference_array() { return ArrayConfig::from_grouping(240, 3, 5, 30e9); }

}  // namespace

TEST_CASE("grouping factorization and derived sizes") {
  const ArrayConfig cfg = reference_array();
  CHECK(cfg.K == 80);
  CHECK(cfg.G == 16);
  CHECK(cfg.wavelength == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(cfg.d == doctest::Approx(0.005).epsilon(1e-15));
  CHECK(cfg.group_offset(0) == 0.0);
  CHECK(cfg.group_offset(1) == doctest::Approx(0.24).epsilon(1e-14));
  CHECK(cfg.pair_baseline(1, 4) == doctest::Approx(0.72).epsilon(1e-14));
  CHECK(cfg.pair_count() == 10);
  CHECK_NOTHROW(validate_for_localization(cfg));

  CHECK_THROWS_AS(ArrayConfig::from_grouping(240, 7, 5, 30e9), ConfigError);
  CHECK_THROWS_AS(ArrayConfig::from_grouping(240, 3, 7, 30e9), ConfigError);
  CHECK_THROWS_AS(validate_for_localization(ArrayConfig::from_grouping(240, 3, 1, 30e9)), ConfigError);
  CHECK_THROWS_AS(validate_for_localization(ArrayConfig::from_grouping(240, 1, 5, 30e9)), ConfigError);
  CHECK_THROWS_AS(validate_for_localization(ArrayConfig::from_grouping(240, 3, 80, 30e9)), ConfigError);
}

TEST_CASE("nf_phase") {
  const ArrayConfig cfg = reference_array();
  const EmitterPosition pos{deg2rad(60.0), 20.0};
  CHECK(nf_phase(cfg, 0, pos) == 0.0);

  // 30-digit evaluation of the square-root formula
  CHECK(nf_phase(cfg, 239, pos) == doctest::Approx(-644.334685326034467897814).epsilon(1e-12));

  // naive long double evaluation as a second route
  for (int m : {1, 17, 100, 239}) {
    const long double x = m * 0.005L;
    const long double r = 20.0L;
    const long double ref = 2.0L * 3.14159265358979323846264L / 0.01L *
                            (std::sqrt(r * r + x * x - 2.0L * x * r * std::sin(static_cast<long double>(pos.theta))) - r);
    CHECK(nf_phase(cfg, m, pos) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-11));
  }

  SUBCASE("far-field limit") {
    for (double theta_deg : {-70.0, -20.0, 0.0, 35.0, 80.0}) {
      const double theta = deg2rad(theta_deg);
      const EmitterPosition far{theta, 1e6 * cfg.aperture()};
      for (int m : {1, 50, 239}) {
        const double ff = -2.0 * kPi / cfg.wavelength * m * cfg.d * std::sin(theta);
        CHECK(std::abs(nf_phase(cfg, m, far) - ff) < 1e-3);
      }
    }
  }

  SUBCASE("far-field residual is the quadratic Fresnel term") {
    // At r = 1e4 D the residual is pi x^2 cos^2(theta) / (lambda r), about 2e-2 rad at the
    // last antenna for theta = 40 deg; the 1e-3 rad level is only reached near 4e5 D.
    const EmitterPosition far{deg2rad(40.0), 1e4 * cfg.aperture()};
    for (int m = 1; m < cfg.M; m += 17) {
      const double x = m * cfg.d;
      const double ff = -2.0 * kPi / cfg.wavelength * x * std::sin(far.theta);
      const double fresnel = kPi * x * x * std::pow(std::cos(far.theta), 2) / (cfg.wavelength * far.range);
      CHECK(nf_phase(cfg, m, far) - ff == doctest::Approx(fresnel).epsilon(1e-3));
    }
    const EmitterPosition farther{deg2rad(40.0), 1e6 * cfg.aperture()};
    double worst = 0.0;
    for (int m = 0; m < cfg.M; ++m) {
      const double ff = -2.0 * kPi / cfg.wavelength * m * cfg.d * std::sin(farther.theta);
      worst = std::max(worst, std::abs(nf_phase(cfg, m, farther) - ff));
    }
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("nf_steering") {
  const ArrayConfig cfg = reference_array();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(-1.5, 1.5), rr(8.1, 285.0);
  for (int k = 0; k < 20; ++k) {
    const EmitterPosition pos{th(rng), rr(rng)};
    const Eigen::VectorXcd a = nf_steering(cfg, pos);
    CHECK(a.size() == cfg.M);
    CHECK(a(0) == std::complex<double>(1.0, 0.0));
    CHECK(a.squaredNorm() == doctest::Approx(cfg.M).epsilon(1e-12));
    CHECK((a.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  const Eigen::VectorXcd broadside = nf_steering(cfg, {0.0, 30.0});
  for (int m = 1; m < cfg.M; ++m) CHECK(std::arg(broadside(m)) != 0.0);
  for (int m = 1; m < cfg.M; ++m) CHECK(nf_phase(cfg, m, {0.0, 30.0}) > 0.0);
}

TEST_CASE("group_true_angle") {
  const ArrayConfig cfg = reference_array();
  const EmitterPosition pos{deg2rad(60.0), 20.0};
  CHECK(group_true_angle(cfg, 0, pos) == pos.theta);
  CHECK(rad2deg(group_true_angle(cfg, 1, pos)) == doctest::Approx(59.6526194506566108818).epsilon(1e-12));

  for (int l = 0; l < cfg.L; ++l) {
    const EmitterPosition far{deg2rad(33.0), 1e6 * cfg.aperture()};
    CHECK(std::abs(group_true_angle(cfg, l, far) - far.theta) < 1e-6);
  }

  SUBCASE("decreasing in the group offset when sin(theta) > 0") {
    for (double theta_deg = 5.0; theta_deg < 90.0; theta_deg += 10.0) {
      for (double r : {8.5, 20.0, 60.0, 280.0}) {
        const EmitterPosition p{deg2rad(theta_deg), r};
        for (int l = 1; l < cfg.L; ++l) CHECK(group_true_angle(cfg, l, p) < group_true_angle(cfg, l - 1, p));
      }
    }
  }
}

TEST_CASE("fresnel interval and group far-field condition") {
  const ArrayConfig cfg = reference_array();
  const FresnelInterval fr = fresnel_interval(cfg);
  CHECK(fr.r_min == doctest::Approx(8.09922655535699896748).epsilon(1e-12));
  CHECK(fr.r_max == doctest::Approx(285.605).epsilon(1e-12));

  ArrayConfig doubled = cfg;
  doubled.wavelength *= 2.0;  // aperture kept fixed
  CHECK(fresnel_interval(doubled).r_max == doctest::Approx(fr.r_max / 2.0).epsilon(1e-14));

  const ArrayConfig tiny = ArrayConfig::from_grouping(2, 1, 1, 30e9);
  const FresnelInterval ft = fresnel_interval(tiny);
  CHECK(ft.r_min > 0.0);
  CHECK(ft.r_max > ft.r_min);

  CHECK(2.0 * cfg.group_aperture() * cfg.group_aperture() / cfg.wavelength == doctest::Approx(11.045).epsilon(1e-12));
  CHECK(group_ff_condition(cfg, 20.0));
  CHECK_FALSE(group_ff_condition(cfg, 5.0));
  const ArrayConfig single = ArrayConfig::from_grouping(4, 1, 4, 30e9);  // G * Ms = 1
  CHECK(group_ff_condition(single, 1e-6));
}

TEST_CASE("synthesize") {
  const ArrayConfig cfg = reference_array();
  const EmitterPosition pos{deg2rad(60.0), 20.0};
  const BeamformerSetting bf = BeamformerSetting::zeros(cfg.L);

  SUBCASE("shape") {
    const GroupSnapshots s = synthesize(cfg, pos, bf, 10.0, 7, 1);
    REQUIRE(s.groups.size() == 5);
    for (const auto& y : s.groups) {
      CHECK(y.rows() == cfg.G);
      CHECK(y.cols() == 7);
    }
    CHECK(s.T == 7);
    CHECK(s.noise_var == doctest::Approx(0.1));
    CHECK_THROWS_AS(synthesize(cfg, pos, bf, 10.0, 0, 1), std::invalid_argument);
  }

  SUBCASE("noiseless spherical output is the combined steering vector times the waveform") {
    BeamformerSetting phased = bf;
    phased.alpha << 0.3, -1.0, 2.0, 0.0, 0.7;
    const GroupSnapshots s = synthesize(cfg, pos, phased, INFINITY, 4, 9, {1.0, Wavefront::kSpherical});
    CHECK(s.noise_var == 0.0);
    const Eigen::VectorXcd a = nf_steering(cfg, pos);
    // recover s(t) from the first RF chain and check every other entry against it
    for (int t = 0; t < 4; ++t) {
      std::complex<double> first_gain = 0.0;
      for (int u = 0; u < cfg.Ms; ++u) first_gain += a(u);
      first_gain *= std::polar(1.0 / std::sqrt(3.0), -phased.alpha(0));
      const std::complex<double> st = s.groups[0](0, t) / first_gain;
      for (int l = 0; l < cfg.L; ++l) {
        for (int g = 0; g < cfg.G; ++g) {
          std::complex<double> gain = 0.0;
          for (int u = 0; u < cfg.Ms; ++u) gain += a(l * cfg.group_size() + g * cfg.Ms + u);
          gain *= std::polar(1.0 / std::sqrt(3.0), -phased.alpha(l));
          CHECK(std::abs(s.groups[l](g, t) - gain * st) < 1e-12 * std::abs(gain * st) + 1e-14);
        }
      }
    }
  }

  SUBCASE("group-planar phases match the spherical phase at each group's first antenna") {
    const Eigen::VectorXd planar = antenna_phases(cfg, pos, Wavefront::kGroupPlanar);
    for (int l = 0; l < cfg.L; ++l) {
      CHECK(planar(l * cfg.group_size()) == doctest::Approx(nf_phase(cfg, l * cfg.group_size(), pos)));
      const double step = planar(l * cfg.group_size() + 1) - planar(l * cfg.group_size());
      CHECK(step == doctest::Approx(-kPi * std::sin(group_true_angle(cfg, l, pos))).epsilon(1e-12));
    }
  }

  SUBCASE("combined noise keeps the per-antenna variance") {
    const GroupSnapshots s = synthesize(cfg, pos, bf, 3.0, 100000, 5, {0.0, Wavefront::kGroupPlanar});
    const double target = std::pow(10.0, -0.3);
    for (int l : {0, 4}) {
      for (int g : {0, 7, 15}) {
        const double var = s.groups[l].row(g).squaredNorm() / 100000.0;
        CHECK(std::abs(var - target) < 0.05 * target);
      }
    }
  }

  SUBCASE("deterministic under a fixed seed") {
    const GroupSnapshots a = synthesize(cfg, pos, bf, 5.0, 50, 42);
    const GroupSnapshots b = synthesize(cfg, pos, bf, 5.0, 50, 42);
    const GroupSnapshots c = synthesize(cfg, pos, bf, 5.0, 50, 43);
    for (int l = 0; l < cfg.L; ++l) {
      CHECK(a.groups[l] == b.groups[l]);
      CHECK(a.groups[l] != c.groups[l]);
    }
  }
}
