#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace nfloc {

// Roots of sum_k c[k] z^k (coefficients in ascending order) from the eigenvalues of the
// companion matrix, followed by a few Newton steps on the original polynomial.
// Leading coefficients below rel_tol * max|c| are dropped first.
template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1> polynomial_roots(
    const Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>& c, Scalar rel_tol = Scalar(1e-14)) {
  using Complex = std::complex<Scalar>;
  using CVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  using CMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

  const Scalar scale = c.size() ? c.cwiseAbs().maxCoeff() : Scalar(0);
  if (!(scale > Scalar(0))) throw std::invalid_argument("zero polynomial has no well-defined roots");
  Eigen::Index n = c.size() - 1;
  while (n > 0 && std::abs(c(n)) <= rel_tol * scale) --n;
  if (n == 0) return CVec(0);

  CMat companion = CMat::Zero(n, n);
  companion.diagonal(-1).setOnes();
  for (Eigen::Index k = 0; k < n; ++k) companion(k, n - 1) = -c(k) / c(n);
  Eigen::ComplexEigenSolver<CMat> solver(companion, false);
  CVec roots = solver.eigenvalues();

  for (Eigen::Index r = 0; r < roots.size(); ++r) {
    Complex z = roots(r);
    for (int it = 0; it < 3; ++it) {
      Complex p = c(n);
      Complex dp = Complex(0);
      for (Eigen::Index k = n - 1; k >= 0; --k) {
        dp = dp * z + p;
        p = p * z + c(k);
      }
      if (std::abs(dp) == Scalar(0)) break;
      const Complex step = p / dp;
      const Complex next = z - step;
      if (!std::isfinite(next.real()) || !std::isfinite(next.imag())) break;
      // Newton stalls near multiple roots; keep the step only while it shrinks the residual
      Complex pn = c(n);
      for (Eigen::Index k = n - 1; k >= 0; --k) pn = pn * next + c(k);
      if (std::abs(pn) >= std::abs(p)) break;
      z = next;
    }
    roots(r) = z;
  }
  return roots;
}

}  // namespace nfloc
