#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nfloc/array_model.hpp"

namespace nfloc {

struct PhiDerivatives {
  double phi = 0.0;     // sine of the group angle
  double dtheta = 0.0;  // d phi / d theta
  double drange = 0.0;  // d phi / d r
};

PhiDerivatives phi_and_derivatives(const ArrayConfig& cfg, int l, const EmitterPosition& pos);

struct GammaEta {
  std::complex<double> gamma;  // sum_m e^{j k d m phi}
  std::complex<double> eta;    // sum_m m e^{-j k d m phi}
};

GammaEta gamma_eta(const ArrayConfig& cfg, double phi);

// Closed geometric-series form of gamma; empty when 1 - e^{j k d phi} is too small to divide by.
std::optional<std::complex<double>> gamma_ratio_form(const ArrayConfig& cfg, double phi);

// Per-group factor Xi of the Fisher information: F_ab = mu^2 Xi (d phi/d a)(d phi/d b) with
// mu^2 = -(2 pi d / lambda)^2, for a group with SNR gamma_snr. Obtained from the exact
// trace of the rank-one-plus-identity covariance.
double xi(const ArrayConfig& cfg, double phi, double gamma_snr);

// The bracketed expression with an extra 1/d^2 and the |eta|^2 + Re(gamma^2 eta) cross terms.
// It does not reproduce the numerical Fisher information; kept for comparison only.
double xi_reference_variant(const ArrayConfig& cfg, double phi, double gamma_snr);

// mu^2 * Xi, the non-negative Fisher weight of a group per unit (d phi)^2.
double fisher_weight(const ArrayConfig& cfg, double phi, double gamma_snr);

struct GroupFim {
  double tt = 0.0;
  double rr = 0.0;
  double tr = 0.0;
};

struct FimComponents {
  std::vector<GroupFim> groups;
  Eigen::Matrix2d total = Eigen::Matrix2d::Zero();  // (theta, r) ordering
};

FimComponents fim_closed_form(const ArrayConfig& cfg, const EmitterPosition& pos, double gamma_snr);

// Fisher information from finite-difference derivatives of every group covariance
// gamma a a^H + I (unit noise power).
Eigen::Matrix2d fim_numeric_oracle(const ArrayConfig& cfg, const EmitterPosition& pos, double gamma_snr);

struct CrlbReport {
  double crlb_theta = 0.0;  // rad^2
  double crlb_r = 0.0;      // m^2
  int T = 0;
  FimComponents fim;
};

CrlbReport crlb(const ArrayConfig& cfg, const EmitterPosition& pos, double gamma_snr, int T);

struct GroupingBound {
  int G = 0;
  int L = 0;
  double crlb_theta = 0.0;
  double crlb_r = 0.0;
};

struct GroupSizeTrend {
  std::vector<GroupingBound> rows;  // ascending G
  bool theta_non_increasing = false;
  bool range_non_increasing = false;
};

// Every grouping of K = M / Ms subarrays with G >= 2 and L >= 2.
std::vector<int> valid_group_sizes(int M, int Ms);

// Evaluates the bound for every valid grouping and checks it does not grow with G.
GroupSizeTrend group_size_trend(int M, int Ms, double carrier_hz, const EmitterPosition& pos, double gamma_snr, int T = 1);

}  // namespace nfloc
