#include "nfloc/crlb.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "nfloc/errors.hpp"

namespace nfloc {

namespace {

double wavenumber_spacing(const ArrayConfig& cfg) { return 2.0 * kPi * cfg.d / cfg.wavelength; }

// Central difference with a step-doubling check; switches to Richardson extrapolation at
// a larger step when the two small-step estimates disagree.
Eigen::MatrixXcd derivative(const std::function<Eigen::MatrixXcd(double)>& f, double x, double rel_step) {
  const double h = rel_step * std::max(std::abs(x), 1.0);
  auto central = [&](double step) -> Eigen::MatrixXcd { return (f(x + step) - f(x - step)) / (2.0 * step); };
  const Eigen::MatrixXcd d1 = central(h);
  const Eigen::MatrixXcd d2 = central(2.0 * h);
  if ((d1 - d2).norm() <= 1e-8 * d1.norm()) return d1;
  const double wide = 100.0 * h;
  return (4.0 * central(wide) - central(2.0 * wide)) / 3.0;
}

}  // namespace

PhiDerivatives phi_and_derivatives(const ArrayConfig& cfg, int l, const EmitterPosition& pos) {
  const double dd = cfg.group_offset(l);
  const double r = pos.range;
  const double s = std::sin(pos.theta);
  const double c = std::cos(pos.theta);
  if (dd == 0.0) return {s, c, 0.0};
  const double rho = std::sqrt(r * r - 2.0 * dd * r * s + dd * dd);
  const double rho3 = rho * rho * rho;
  return {(r * s - dd) / rho, r * r * c * (r - dd * s) / rho3, dd * r * c * c / rho3};
}

GammaEta gamma_eta(const ArrayConfig& cfg, double phi) {
  const double k = wavenumber_spacing(cfg);
  GammaEta out{0.0, 0.0};
  for (int m = 0; m < cfg.Ms; ++m) {
    out.gamma += std::polar(1.0, k * m * phi);
    out.eta += static_cast<double>(m) * std::polar(1.0, -k * m * phi);
  }
  return out;
}

std::optional<std::complex<double>> gamma_ratio_form(const ArrayConfig& cfg, double phi) {
  const double k = wavenumber_spacing(cfg);
  const std::complex<double> denom = 1.0 - std::polar(1.0, k * phi);
  if (std::abs(denom) < 1e-8) return std::nullopt;
  return (1.0 - std::polar(1.0, k * cfg.Ms * phi)) / denom;
}

double xi(const ArrayConfig& cfg, double phi, double gamma_snr) {
  const GammaEta ge = gamma_eta(cfg, phi);
  const double ms = cfg.Ms;
  const double g = cfg.G;
  const double x = std::norm(ge.gamma);
  const double denom = ms + gamma_snr * g * x;
  const double cross = (ge.gamma * ge.eta).imag();
  const double bracket = x * x * ms * ms * g * g * (g * g - 1.0) * denom / 12.0 + 2.0 * ms * g * g * cross * cross;
  return -(2.0 * gamma_snr * gamma_snr / (ms * denom * denom)) * bracket;
}

double xi_reference_variant(const ArrayConfig& cfg, double phi, double gamma_snr) {
  const GammaEta ge = gamma_eta(cfg, phi);
  const double ms = cfg.Ms;
  const double g = cfg.G;
  const double x = std::norm(ge.gamma);
  const double denom = ms + gamma_snr * g * x;
  const double bracket = x * x * ms * ms * g * g * (g * g - 1.0) * denom / 12.0 + ms * g * x * std::norm(ge.eta) +
                         ms * g * g * (ge.gamma * ge.gamma * ge.eta).real();
  return -(2.0 * gamma_snr * gamma_snr / (cfg.d * cfg.d * ms * denom * denom)) * bracket;
}

double fisher_weight(const ArrayConfig& cfg, double phi, double gamma_snr) {
  const double k = wavenumber_spacing(cfg);
  // mu^2 = -k^2, so mu^2 * Xi = k^2 * (-Xi)
  return k * k * -xi(cfg, phi, gamma_snr);
}

FimComponents fim_closed_form(const ArrayConfig& cfg, const EmitterPosition& pos, double gamma_snr) {
  FimComponents out;
  out.groups.reserve(cfg.L);
  for (int l = 0; l < cfg.L; ++l) {
    const PhiDerivatives p = phi_and_derivatives(cfg, l, pos);
    const double w = fisher_weight(cfg, p.phi, gamma_snr);
    GroupFim f{w * p.dtheta * p.dtheta, w * p.drange * p.drange, w * p.dtheta * p.drange};
    out.groups.push_back(f);
    out.total(0, 0) += f.tt;
    out.total(1, 1) += f.rr;
    out.total(0, 1) += f.tr;
  }
  out.total(1, 0) = out.total(0, 1);
  return out;
}

Eigen::Matrix2d fim_numeric_oracle(const ArrayConfig& cfg, const EmitterPosition& pos, double gamma_snr) {
  if (!(gamma_snr > 0.0) || !std::isfinite(gamma_snr)) {
    throw SingularFim("group covariance is singular without noise");
  }
  const BeamformerSetting bf = BeamformerSetting::zeros(cfg.L);
  const int n = cfg.group_size();
  Eigen::Matrix2d F = Eigen::Matrix2d::Zero();

  for (int l = 0; l < cfg.L; ++l) {
    const Eigen::MatrixXcd W = group_combiner(cfg, bf, l);
    auto covariance = [&](double theta, double range) -> Eigen::MatrixXcd {
      const Eigen::VectorXd phase = antenna_phases(cfg, {theta, range}, Wavefront::kGroupPlanar).segment(l * n, n);
      Eigen::VectorXcd a(n);
      for (int u = 0; u < n; ++u) a(u) = std::polar(1.0, phase(u));
      const Eigen::VectorXcd aw = W * a;
      return gamma_snr * aw * aw.adjoint() + Eigen::MatrixXcd::Identity(cfg.G, cfg.G);
    };
    const Eigen::MatrixXcd R = covariance(pos.theta, pos.range);
    const Eigen::MatrixXcd Rinv = R.llt().solve(Eigen::MatrixXcd::Identity(cfg.G, cfg.G));
    const Eigen::MatrixXcd dT = derivative([&](double t) { return covariance(t, pos.range); }, pos.theta, 1e-7);
    const Eigen::MatrixXcd dR = derivative([&](double r) { return covariance(pos.theta, r); }, pos.range, 1e-7);
    const Eigen::MatrixXcd A = Rinv * dT;
    const Eigen::MatrixXcd B = Rinv * dR;
    F(0, 0) += (A * A).trace().real();
    F(1, 1) += (B * B).trace().real();
    F(0, 1) += (A * B).trace().real();
  }
  F(1, 0) = F(0, 1);
  return F;
}

CrlbReport crlb(const ArrayConfig& cfg, const EmitterPosition& pos, double gamma_snr, int T) {
  if (T < 1) throw std::invalid_argument("snapshot count must be positive");
  CrlbReport out;
  out.T = T;
  out.fim = fim_closed_form(cfg, pos, gamma_snr);
  const double ftt = out.fim.total(0, 0);
  const double frr = out.fim.total(1, 1);
  const double ftr = out.fim.total(0, 1);
  const double det = ftt * frr - ftr * ftr;
  if (!(det > 1e-30) || !(det > 1e-13 * ftt * frr)) throw SingularFim("Fisher information matrix is singular");
  out.crlb_theta = frr / (T * det);
  out.crlb_r = ftt / (T * det);
  return out;
}

std::vector<int> valid_group_sizes(int M, int Ms) {
  std::vector<int> sizes;
  if (Ms <= 0 || M % Ms != 0) return sizes;
  const int K = M / Ms;
  for (int G = 2; G <= K / 2; ++G) {
    if (K % G == 0) sizes.push_back(G);
  }
  return sizes;
}

GroupSizeTrend group_size_trend(int M, int Ms, double carrier_hz, const EmitterPosition& pos, double gamma_snr, int T) {
  GroupSizeTrend out;
  for (int G : valid_group_sizes(M, Ms)) {
    const ArrayConfig cfg = ArrayConfig::from_grouping(M, Ms, M / Ms / G, carrier_hz);
    const CrlbReport rep = crlb(cfg, pos, gamma_snr, T);
    out.rows.push_back({G, cfg.L, rep.crlb_theta, rep.crlb_r});
  }
  out.theta_non_increasing = true;
  out.range_non_increasing = true;
  for (std::size_t k = 1; k < out.rows.size(); ++k) {
    if (out.rows[k].crlb_theta > out.rows[k - 1].crlb_theta) out.theta_non_increasing = false;
    if (out.rows[k].crlb_r > out.rows[k - 1].crlb_r) out.range_non_increasing = false;
  }
  return out;
}

}  // namespace nfloc
