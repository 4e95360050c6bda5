#include "nfloc/array_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>

#include "nfloc/errors.hpp"

namespace nfloc {

ArrayConfig ArrayConfig::from_grouping(int M, int Ms, int L, double carrier_hz) {
  if (M <= 0 || Ms <= 0 || L <= 0) {
    throw ConfigError("array sizes must be positive (M=" + std::to_string(M) + ", Ms=" + std::to_string(Ms) +
                      ", L=" + std::to_string(L) + ")");
  }
  if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz)) {
    throw ConfigError("carrier frequency must be positive");
  }
  if (M % Ms != 0) {
    throw ConfigError("M=" + std::to_string(M) + " is not divisible by Ms=" + std::to_string(Ms));
  }
  const int K = M / Ms;
  if (K % L != 0) {
    throw ConfigError("subarray count K=" + std::to_string(K) + " is not divisible by L=" + std::to_string(L));
  }
  ArrayConfig cfg;
  cfg.M = M;
  cfg.Ms = Ms;
  cfg.K = K;
  cfg.L = L;
  cfg.G = K / L;
  cfg.carrier_freq = carrier_hz;
  cfg.wavelength = kSpeedOfLight / carrier_hz;
  cfg.d = cfg.wavelength / 2.0;
  return cfg;
}

void validate_for_localization(const ArrayConfig& cfg) {
  if (cfg.M != cfg.K * cfg.Ms || cfg.K != cfg.L * cfg.G) {
    throw ConfigError("inconsistent grouping: M must equal K*Ms and K must equal L*G");
  }
  if (cfg.L < 2) throw ConfigError("at least two groups are needed to observe range (L=" + std::to_string(cfg.L) + ")");
  if (cfg.Ms < 2) throw ConfigError("Ms must be at least 2");
  if (cfg.G < 2) throw ConfigError("each group needs at least two subarrays (G=" + std::to_string(cfg.G) + ")");
  if (std::abs(cfg.d - cfg.wavelength / 2.0) > 1e-12 * cfg.wavelength) {
    throw ConfigError("antenna spacing must be half a wavelength");
  }
}

double nf_phase(const ArrayConfig& cfg, int m, const EmitterPosition& pos) {
  const double x = m * cfg.d;
  const double r = pos.range;
  // sqrt(r^2 + x^2 - 2xr sin) - r, rearranged to avoid cancellation at large r
  const double q = x * x - 2.0 * x * r * std::sin(pos.theta);
  const double dist = std::sqrt(r * r + q);
  return 2.0 * kPi / cfg.wavelength * (q / (dist + r));
}

Eigen::VectorXcd nf_steering(const ArrayConfig& cfg, const EmitterPosition& pos) {
  Eigen::VectorXcd a(cfg.M);
  for (int m = 0; m < cfg.M; ++m) a(m) = std::polar(1.0, nf_phase(cfg, m, pos));
  return a;
}

Eigen::VectorXd antenna_phases(const ArrayConfig& cfg, const EmitterPosition& pos, Wavefront model) {
  Eigen::VectorXd phase(cfg.M);
  if (model == Wavefront::kSpherical) {
    for (int m = 0; m < cfg.M; ++m) phase(m) = nf_phase(cfg, m, pos);
    return phase;
  }
  const double k = 2.0 * kPi / cfg.wavelength;
  const int n = cfg.group_size();
  for (int l = 0; l < cfg.L; ++l) {
    const int ref = l * n;
    const double base = nf_phase(cfg, ref, pos);
    const double s = group_sine(cfg, l, pos);
    for (int u = 0; u < n; ++u) phase(ref + u) = base - k * u * cfg.d * s;
  }
  return phase;
}

double group_sine(const ArrayConfig& cfg, int l, const EmitterPosition& pos) {
  const double dd = cfg.group_offset(l);
  const double r = pos.range;
  const double s = std::sin(pos.theta);
  if (dd == 0.0) return s;
  const double rho = std::sqrt(r * r - 2.0 * dd * r * s + dd * dd);
  return (r * s - dd) / rho;
}

double group_true_angle(const ArrayConfig& cfg, int l, const EmitterPosition& pos) {
  if (cfg.group_offset(l) == 0.0) return pos.theta;
  return std::asin(std::clamp(group_sine(cfg, l, pos), -1.0, 1.0));
}

FresnelInterval fresnel_interval(const ArrayConfig& cfg) {
  const double D = cfg.aperture();
  return {0.62 * std::sqrt(D * D * D / cfg.wavelength), 2.0 * D * D / cfg.wavelength};
}

bool group_ff_condition(const ArrayConfig& cfg, double r) {
  const double dg = cfg.group_aperture();
  return r > 2.0 * dg * dg / cfg.wavelength;
}

Eigen::MatrixXcd group_combiner(const ArrayConfig& cfg, const BeamformerSetting& bf, int l) {
  if (bf.alpha.size() != cfg.L) throw std::invalid_argument("beamformer setting needs one phase per group");
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(cfg.G, cfg.group_size());
  // Row g applies w^H with w = exp(j alpha) / sqrt(Ms) on the g-th subarray.
  const std::complex<double> wh = std::polar(1.0 / std::sqrt(static_cast<double>(cfg.Ms)), -bf.alpha(l));
  for (int g = 0; g < cfg.G; ++g) W.row(g).segment(g * cfg.Ms, cfg.Ms).setConstant(wh);
  return W;
}

GroupSnapshots synthesize(const ArrayConfig& cfg, const EmitterPosition& pos, const BeamformerSetting& bf,
                          double snr_db, int T, std::uint64_t seed, const SynthesisOptions& options) {
  if (T <= 0) throw std::invalid_argument("snapshot count must be positive");
  if (options.signal_var < 0.0) throw std::invalid_argument("signal variance must be non-negative");

  GroupSnapshots out;
  out.T = T;
  out.signal_var = options.signal_var;
  out.noise_var = std::pow(10.0, -snr_db / 10.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s_scale = std::sqrt(out.signal_var / 2.0);
  const double v_scale = std::sqrt(out.noise_var / 2.0);

  Eigen::VectorXcd s(T);
  for (int t = 0; t < T; ++t) {
    const double re = normal(rng);
    const double im = normal(rng);
    s(t) = {s_scale * re, s_scale * im};
  }

  const Eigen::VectorXd phase = antenna_phases(cfg, pos, options.wavefront);
  Eigen::VectorXcd a(cfg.M);
  for (int m = 0; m < cfg.M; ++m) a(m) = std::polar(1.0, phase(m));

  Eigen::MatrixXcd X = a * s.transpose();
  if (out.noise_var > 0.0) {
    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < cfg.M; ++m) {
        const double re = normal(rng);
        const double im = normal(rng);
        X(m, t) += std::complex<double>(v_scale * re, v_scale * im);
      }
    }
  }

  out.groups.reserve(cfg.L);
  const int n = cfg.group_size();
  for (int l = 0; l < cfg.L; ++l) {
    out.groups.push_back(group_combiner(cfg, bf, l) * X.middleRows(l * n, n));
  }
  return out;
}

}  // namespace nfloc
