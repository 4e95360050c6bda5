#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nfloc/array_model.hpp"
#include "nfloc/errors.hpp"
#include "nfloc/subspace_doa.hpp"

using namespace nfloc;

namespace {

ArrayConfig reference_array() { return ArrayConfig::from_grouping(240, 3, 5, 30e9); }

double wrap(double x) {
  double y = std::remainder(x, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

Eigen::MatrixXcd random_snapshots(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd Y(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) Y(i, j) = {n(rng), n(rng)};
  }
  return Y;
}

}  // namespace

TEST_CASE("sample_covariance") {
  Eigen::VectorXcd y(4);
  y << std::complex<double>(1, 2), std::complex<double>(-0.5, 0), std::complex<double>(0, 3), 2.0;
  const Eigen::MatrixXcd R = sample_covariance(y);
  CHECK((R - y * y.adjoint()).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(R);
  CHECK(eig.eigenvalues()(2) < 1e-12 * eig.eigenvalues()(3));

  CHECK_THROWS_AS(sample_covariance(Eigen::MatrixXcd(4, 0)), std::invalid_argument);

  SUBCASE("noiseless snapshots give a rank-one covariance") {
    const ArrayConfig cfg = reference_array();
    const GroupSnapshots s = synthesize(cfg, {deg2rad(25.0), 40.0}, BeamformerSetting::zeros(5), INFINITY, 30, 2);
    const Eigen::MatrixXcd Rs = sample_covariance(s.groups[2]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e(Rs);
    const double top = e.eigenvalues()(cfg.G - 1);
    CHECK(e.eigenvalues()(cfg.G - 2) < 1e-8 * top);
  }

  SUBCASE("white noise diagonal converges to the noise power") {
    const Eigen::MatrixXcd Y = random_snapshots(5, 100000, 11) * std::sqrt(0.35);  // variance 0.7 per entry
    const Eigen::MatrixXcd Rn = sample_covariance(Y);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(Rn(i, i).real() - 0.7) < 0.05 * 0.7);
  }

  SUBCASE("Hermitian and PSD for arbitrary input") {
    for (int k = 0; k < 10; ++k) {
      const Eigen::MatrixXcd Rr = sample_covariance(random_snapshots(6, 1 + 3 * k, 100 + k));
      CHECK((Rr - Rr.adjoint()).cwiseAbs().maxCoeff() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> e(Rr);
      CHECK(e.eigenvalues().minCoeff() >= -1e-8 * Rr.trace().real());
    }
  }
}

TEST_CASE("noise_subspace") {
  const int G = 16;
  SUBCASE("identity gives some orthonormal frame") {
    const Eigen::MatrixXcd U = noise_subspace(Eigen::MatrixXcd::Identity(G, G));
    CHECK(U.cols() == G - 1);
    CHECK((U.adjoint() * U - Eigen::MatrixXcd::Identity(G - 1, G - 1)).norm() < 1e-10);
  }
  SUBCASE("orthogonal to the noiseless steering vector") {
    const ArrayConfig cfg = reference_array();
    for (double th : {-1.2, -0.3, 0.0, 0.4, 1.1}) {
      const Eigen::VectorXcd a = group_steering(cfg, th);
      const Eigen::MatrixXcd U = noise_subspace(a * a.adjoint() + 1e-3 * Eigen::MatrixXcd::Identity(G, G));
      CHECK((U.adjoint() * a).norm() < 1e-8 * a.norm());
      CHECK((U.adjoint() * U - Eigen::MatrixXcd::Identity(G - 1, G - 1)).norm() < 1e-10);
    }
  }
  SUBCASE("dominant axis excluded") {
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Identity(G, G);
    R(0, 0) = 10.0;
    const Eigen::MatrixXcd U = noise_subspace(R);
    CHECK(U.row(0).norm() < 1e-12);
  }
  SUBCASE("rejects non-Hermitian input") {
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Identity(4, 4);
    R(0, 1) = 0.5;
    CHECK_THROWS_AS(noise_subspace(R), std::invalid_argument);
    CHECK_THROWS_AS(noise_subspace(Eigen::MatrixXcd::Identity(4, 4), 4), std::invalid_argument);
  }
}

TEST_CASE("root_music_arg") {
  const ArrayConfig cfg = reference_array();
  const int G = cfg.G;

  SUBCASE("noiseless covariance recovers the phase step; grid MUSIC agrees") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> th(-1.45, 1.45);
    for (int k = 0; k < 25; ++k) {
      const double theta = th(rng);
      const Eigen::VectorXcd a = group_steering(cfg, theta);
      const Eigen::MatrixXcd U = noise_subspace(a * a.adjoint());
      const double psi = -kPi * cfg.Ms * std::sin(theta);
      CHECK(std::abs(wrap(root_music_arg(U) - psi)) < 1e-6);
      const double grid = music_spectrum_oracle(U, cfg, 1e-4);
      // the grid peak is one of the Ms aliases; its phase step matches the root's
      CHECK(std::abs(wrap(-kPi * cfg.Ms * std::sin(grid) - root_music_arg(U))) < kPi * cfg.Ms * 1e-4);
    }
  }

  SUBCASE("all-ones null vector gives zero") {
    const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(G);
    const Eigen::MatrixXcd U = noise_subspace(ones * ones.adjoint());
    CHECK(std::abs(root_music_arg(U)) < 1e-9);
  }

  SUBCASE("conjugation negates the argument") {
    for (double theta : {0.2, -0.9, 1.3}) {
      const Eigen::VectorXcd a = group_steering(cfg, theta);
      Eigen::MatrixXcd R = a * a.adjoint();
      R += 0.05 * Eigen::MatrixXcd::Identity(G, G);
      const Eigen::MatrixXcd U = noise_subspace(R);
      CHECK(std::abs(wrap(root_music_arg(U.conjugate()) + root_music_arg(U))) < 1e-9);
    }
  }

  SUBCASE("degenerate polynomial") {
    CHECK_THROWS_AS(root_music_arg(Eigen::MatrixXcd::Identity(G, G)), NumericalError);
  }
}

TEST_CASE("ambiguous_set") {
  const ArrayConfig cfg = reference_array();

  SUBCASE("Ms = 1 is unambiguous") {
    const ArrayConfig one = ArrayConfig::from_grouping(80, 1, 5, 30e9);
    const AmbiguousAngleSet s = ambiguous_set(0.5, one);
    REQUIRE(s.angles.size() == 1);
    CHECK(s.angles[0].sine == doctest::Approx(0.5 / kPi));
  }

  SUBCASE("three-fold set at zero phase") {
    const AmbiguousAngleSet s = ambiguous_set(0.0, cfg, 2);
    CHECK(s.group == 2);
    REQUIRE(s.angles.size() == 3);
    CHECK(s.angles[0].sine == doctest::Approx(0.0));
    CHECK(s.angles[1].sine == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.angles[2].sine == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
    CHECK(rad2deg(s.angles[1].theta) == doctest::Approx(41.8103148957786).epsilon(1e-12));
    CHECK(rad2deg(s.angles[2].theta) == doctest::Approx(-41.8103148957786).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) CHECK(s.angles[i].coeff == i);
  }

  SUBCASE("true angle is always a member and sines tile [-1, 1)") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> th(-kPi / 2, kPi / 2), big(-40.0, 40.0);
    for (int k = 0; k < 200; ++k) {
      const double theta = th(rng);
      const AmbiguousAngleSet s = ambiguous_set(wrap(kPi * cfg.Ms * std::sin(theta)), cfg);
      double best = 1.0;
      for (const auto& a : s.angles) best = std::min(best, std::abs(a.theta - theta));
      CHECK(best < 1e-9);

      const AmbiguousAngleSet t = ambiguous_set(big(rng), cfg);
      std::vector<double> sines;
      for (const auto& a : t.angles) {
        CHECK(a.sine >= -1.0);
        CHECK(a.sine < 1.0);
        CHECK(std::abs(a.theta) <= kPi / 2);
        sines.push_back(a.sine);
      }
      std::sort(sines.begin(), sines.end());
      for (std::size_t i = 1; i < sines.size(); ++i) CHECK(std::abs(sines[i] - sines[i - 1] - 2.0 / 3.0) < 1e-12);
    }
  }
}

TEST_CASE("music_spectrum_oracle") {
  const ArrayConfig cfg = reference_array();
  const double step = 1e-3;
  SUBCASE("noiseless source on a grid point") {
    const double theta = -kPi / 2 + 1234 * step;
    const Eigen::VectorXcd a = group_steering(cfg, theta);
    const Eigen::MatrixXcd U = noise_subspace(a * a.adjoint());
    const double found = music_spectrum_oracle(U, cfg, step);
    // aliases share the peak; the found angle must produce the same phase step
    CHECK(std::abs(wrap(kPi * cfg.Ms * (std::sin(found) - std::sin(theta)))) < 1e-9);
  }
  SUBCASE("flat spectrum takes the first grid point") {
    CHECK(music_spectrum_oracle(Eigen::MatrixXcd::Identity(cfg.G, cfg.G), cfg, step) == -kPi / 2);
  }
  CHECK_THROWS_AS(music_spectrum_oracle(Eigen::MatrixXcd::Identity(cfg.G, cfg.G), cfg, 0.0), std::invalid_argument);
}

TEST_CASE("group_doa and aligned sets") {
  const ArrayConfig cfg = reference_array();
  const FresnelInterval fr = fresnel_interval(cfg);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> th(deg2rad(-80.0), deg2rad(80.0)), rr(fr.r_min, fr.r_max);

  for (int k = 0; k < 50; ++k) {
    const EmitterPosition pos{th(rng), rr(rng)};
    const GroupSnapshots s = synthesize(cfg, pos, BeamformerSetting::zeros(cfg.L), INFINITY, 10, 100 + k);
    const std::vector<AmbiguousAngleSet> sets = estimate_ambiguous_sets(s, cfg);
    const int coeff = nearest_coefficient(sets[0], pos.theta);
    for (int l = 0; l < cfg.L; ++l) {
      const AmbiguousAngleSet single = group_doa(s.groups[l], cfg, l);
      CHECK(single.angles.size() == 3);
      double best = 1.0;
      for (const auto& a : single.angles) best = std::min(best, std::abs(a.theta - group_true_angle(cfg, l, pos)));
      CHECK(best < 1e-6);
      // the aligned sets keep the true branch on one coefficient across groups
      CHECK(std::abs(sets[l].angles[coeff].theta - group_true_angle(cfg, l, pos)) < 1e-6);
    }
  }

  SUBCASE("near the branch boundary sin(theta) = 1/3") {
    for (double r : {9.0, 20.0, 100.0}) {
      for (double delta : {-2e-3, -2e-4, 0.0, 2e-4, 2e-3}) {
        const EmitterPosition pos{std::asin(1.0 / 3.0) + delta, r};
        const GroupSnapshots s = synthesize(cfg, pos, BeamformerSetting::zeros(cfg.L), INFINITY, 10, 1);
        const std::vector<AmbiguousAngleSet> sets = estimate_ambiguous_sets(s, cfg);
        const int coeff = nearest_coefficient(sets[0], pos.theta);
        for (int l = 0; l < cfg.L; ++l) {
          CHECK(std::abs(sets[l].angles[coeff].theta - group_true_angle(cfg, l, pos)) < 1e-6);
        }
      }
    }
  }

  SUBCASE("deterministic") {
    const EmitterPosition pos{0.7, 30.0};
    const GroupSnapshots a = synthesize(cfg, pos, BeamformerSetting::zeros(cfg.L), 10.0, 100, 3);
    const GroupSnapshots b = synthesize(cfg, pos, BeamformerSetting::zeros(cfg.L), 10.0, 100, 3);
    CHECK(group_doa(a.groups[3], cfg, 3).angles[1].theta == group_doa(b.groups[3], cfg, 3).angles[1].theta);
  }
}
