#include "nfloc/subspace_doa.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "nfloc/errors.hpp"
#include "nfloc/polynomial.hpp"

namespace nfloc {

namespace {

double wrap_pi(double x) {
  // into (-pi, pi]
  double y = std::remainder(x, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  return y;
}

// Real derivatives of Q(w) = sum_k c_k e^{jkw} on the unit circle; c is indexed by n = k + G - 1.
void null_spectrum_derivatives(const Eigen::VectorXcd& c, double w, double& d1, double& d2) {
  const int half = static_cast<int>(c.size() - 1) / 2;
  std::complex<double> s1 = 0.0, s2 = 0.0;
  for (int n = 0; n < c.size(); ++n) {
    const int k = n - half;
    const std::complex<double> e = c(n) * std::polar(1.0, k * w);
    s1 += std::complex<double>(0.0, k) * e;
    s2 -= static_cast<double>(k) * k * e;
  }
  d1 = s1.real();
  d2 = s2.real();
}

}  // namespace

Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& Y) {
  if (Y.rows() == 0 || Y.cols() == 0) throw std::invalid_argument("empty snapshot matrix");
  Eigen::MatrixXcd R = (Y * Y.adjoint()) / static_cast<double>(Y.cols());
  return (R + R.adjoint()) / 2.0;
}

Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd& R, int sources) {
  if (R.rows() != R.cols()) throw std::invalid_argument("covariance must be square");
  if (sources < 0 || sources >= R.rows()) throw std::invalid_argument("source count must be below the matrix size");
  const double scale = std::max(1.0, R.cwiseAbs().maxCoeff());
  if ((R - R.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("covariance is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(R);
  if (eig.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  // eigenvalues come back in ascending order
  return eig.eigenvectors().leftCols(R.rows() - sources);
}

Eigen::VectorXcd root_music_polynomial(const Eigen::MatrixXcd& noise_basis) {
  const Eigen::Index G = noise_basis.rows();
  if (G < 2) throw std::invalid_argument("Root-MUSIC needs at least two virtual elements");
  const Eigen::MatrixXcd C = noise_basis * noise_basis.adjoint();
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(2 * G - 1);
  for (Eigen::Index k = -(G - 1); k <= G - 1; ++k) {
    c(k + G - 1) = C.diagonal(k).sum();
  }
  return c;
}

double root_music_arg(const Eigen::MatrixXcd& noise_basis) {
  const Eigen::VectorXcd c = root_music_polynomial(noise_basis);
  const double scale = c.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw NumericalError("degenerate Root-MUSIC polynomial");
  const Eigen::VectorXcd roots = polynomial_roots<double>(c);

  int best = -1;
  double best_closeness = 0.0;
  double best_arg = 0.0;
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    const double mag = std::abs(roots(i));
    if (!(mag > 0.0) || !std::isfinite(mag)) continue;
    // an outside root stands for its reflection 1/conj(z), which has the same argument
    const double closeness = mag <= 1.0 ? mag : 1.0 / mag;
    const double arg = std::arg(roots(i));
    if (best < 0 || closeness > best_closeness + 1e-12 ||
        (std::abs(closeness - best_closeness) <= 1e-12 && arg < best_arg)) {
      best = static_cast<int>(i);
      best_closeness = closeness;
      best_arg = arg;
    }
  }
  if (best < 0 || best_closeness < 1e-8) throw NumericalError("all Root-MUSIC roots collapse to the origin");

  if (1.0 - best_closeness < 1e-5) {
    // Nearly double root on the unit circle: its eigenvalue estimate is only accurate to
    // about sqrt(eps). Refine as the minimum of the null spectrum along the circle.
    double w = best_arg;
    for (int it = 0; it < 30; ++it) {
      double d1 = 0.0, d2 = 0.0;
      null_spectrum_derivatives(c, w, d1, d2);
      if (!(d2 > 0.0)) break;
      const double step = d1 / d2;
      w -= step;
      if (std::abs(step) < 1e-15) break;
    }
    if (std::abs(wrap_pi(w - best_arg)) < 1e-3) best_arg = w;
  }
  return wrap_pi(best_arg);
}

AmbiguousAngleSet ambiguous_set(double arg, const ArrayConfig& cfg, int group) {
  if (std::abs(cfg.d - cfg.wavelength / 2.0) > 1e-9 * cfg.wavelength) {
    throw std::invalid_argument("ambiguity enumeration assumes half-wavelength spacing");
  }
  AmbiguousAngleSet set;
  set.group = group;
  set.angles.reserve(cfg.Ms);
  for (int i = 0; i < cfg.Ms; ++i) {
    double u = (arg + 2.0 * kPi * i) / (kPi * cfg.Ms);
    u -= 2.0 * std::floor((u + 1.0) / 2.0);
    if (u >= 1.0) u -= 2.0;
    set.angles.push_back({std::asin(u), u, i});
  }
  return set;
}

Eigen::VectorXcd group_steering(const ArrayConfig& cfg, double theta) {
  Eigen::VectorXcd a(cfg.G);
  const double step = -kPi * cfg.Ms * std::sin(theta);
  for (int g = 0; g < cfg.G; ++g) a(g) = std::polar(1.0, step * g);
  return a;
}

double music_spectrum_oracle(const Eigen::MatrixXcd& noise_basis, const ArrayConfig& cfg, double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const Eigen::MatrixXcd C = noise_basis * noise_basis.adjoint();
  double best_theta = -kPi / 2.0;
  double best_value = -std::numeric_limits<double>::infinity();
  const long count = static_cast<long>(std::floor(kPi / grid_step)) + 1;
  for (long n = 0; n < count; ++n) {
    const double theta = -kPi / 2.0 + n * grid_step;
    const Eigen::VectorXcd a = group_steering(cfg, theta);
    const double denom = std::max((a.adjoint() * C * a)(0, 0).real(), std::numeric_limits<double>::min());
    const double value = 1.0 / denom;
    if (value > best_value) {
      best_value = value;
      best_theta = theta;
    }
  }
  return best_theta;
}

double group_phase(const Eigen::MatrixXcd& Y) {
  // the data advance by -pi Ms sin(theta) per subarray; flip to the +sin convention
  return -root_music_arg(noise_subspace(sample_covariance(Y), 1));
}

AmbiguousAngleSet group_doa(const Eigen::MatrixXcd& Y, const ArrayConfig& cfg, int l) {
  return ambiguous_set(group_phase(Y), cfg, l);
}

std::vector<AmbiguousAngleSet> estimate_ambiguous_sets(const GroupSnapshots& snaps, const ArrayConfig& cfg) {
  std::vector<AmbiguousAngleSet> sets;
  sets.reserve(snaps.groups.size());
  double previous = 0.0;
  for (std::size_t l = 0; l < snaps.groups.size(); ++l) {
    double arg = group_phase(snaps.groups[l]);
    if (l > 0) arg = previous + wrap_pi(arg - previous);
    previous = arg;
    sets.push_back(ambiguous_set(arg, cfg, static_cast<int>(l)));
  }
  return sets;
}

int nearest_coefficient(const AmbiguousAngleSet& set, double theta) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& a : set.angles) {
    const double dist = std::abs(a.theta - theta);
    if (dist < best_dist) {
      best_dist = dist;
      best = a.coeff;
    }
  }
  return best;
}

}  // namespace nfloc
