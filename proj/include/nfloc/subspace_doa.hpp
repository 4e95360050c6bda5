#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nfloc/array_model.hpp"

namespace nfloc {

struct AmbiguousAngle {
  double theta = 0.0;  // radians
  double sine = 0.0;
  int coeff = 0;
};

// Candidate angles of one group; angles[i] carries ambiguity coefficient i.
struct AmbiguousAngleSet {
  int group = 0;
  std::vector<AmbiguousAngle> angles;
};

// (1/T) Y Y^H, symmetrized.
Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& Y);

// Orthonormal eigenvectors of the G - sources smallest eigenvalues of a Hermitian R.
Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd& R, int sources = 1);

// Coefficients c[n] of z^(G-1) * sum_{g1,g2} C(g1,g2) z^(g2-g1), C = U U^H, ascending powers.
Eigen::VectorXcd root_music_polynomial(const Eigen::MatrixXcd& noise_basis);

// Argument of the root of the polynomial above closest to the unit circle (inside root
// of each conjugate-reciprocal pair), in (-pi, pi].
double root_music_arg(const Eigen::MatrixXcd& noise_basis);

// Ms candidate angles whose sines (arg + 2 pi i) / (pi Ms) are wrapped into [-1, 1).
// arg is the phase step between subarrays measured as +pi Ms sin(theta).
AmbiguousAngleSet ambiguous_set(double arg, const ArrayConfig& cfg, int group = 0);

// Virtual-array steering of a group at angle theta, element g = exp(-j pi Ms g sin(theta))
// (the phase progression produced by the synthesized wavefront).
Eigen::VectorXcd group_steering(const ArrayConfig& cfg, double theta);

// Grid-search MUSIC over [-pi/2, pi/2]; the first grid point wins ties. Test oracle only.
double music_spectrum_oracle(const Eigen::MatrixXcd& noise_basis, const ArrayConfig& cfg, double grid_step);

// Phase step pi Ms sin(theta) estimated from one group's snapshots.
double group_phase(const Eigen::MatrixXcd& Y);

AmbiguousAngleSet group_doa(const Eigen::MatrixXcd& Y, const ArrayConfig& cfg, int l);

// group_doa over all groups, with the phase steps unwrapped from group to group so that
// the same coefficient follows the same branch in every group.
std::vector<AmbiguousAngleSet> estimate_ambiguous_sets(const GroupSnapshots& snaps, const ArrayConfig& cfg);

// Coefficient of the candidate in the set that is closest to theta.
int nearest_coefficient(const AmbiguousAngleSet& set, double theta);

}  // namespace nfloc
