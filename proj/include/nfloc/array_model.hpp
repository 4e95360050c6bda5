#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace nfloc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 3.0e8;

// Uniform linear array split into K subarrays of Ms antennas (one RF chain each),
// with the K subarrays split into L groups of G. Antenna, subarray and group indices
// are 0-based throughout; group 0 holds the reference antenna.
struct ArrayConfig {
  int M = 0;
  int Ms = 0;
  int K = 0;
  int L = 0;
  int G = 0;
  double d = 0.0;
  double wavelength = 0.0;
  double carrier_freq = 0.0;

  // Half-wavelength spacing. Throws ConfigError unless M = K*Ms and K = L*G.
  static ArrayConfig from_grouping(int M, int Ms, int L, double carrier_hz);

  double aperture() const { return (M - 1) * d; }
  double group_aperture() const { return (G * Ms - 1) * d; }
  // Distance from the reference antenna to the first antenna of group l.
  double group_offset(int l) const { return l * G * Ms * d; }
  double pair_baseline(int l1, int l2) const { return (l2 - l1) * G * Ms * d; }
  int pair_count() const { return L * (L - 1) / 2; }
  int group_size() const { return G * Ms; }
};

// Enforces what localization needs on top of the factorization: L, Ms, G >= 2 and
// d = lambda/2. Throws ConfigError.
void validate_for_localization(const ArrayConfig& cfg);

struct EmitterPosition {
  double theta = 0.0;  // radians
  double range = 0.0;  // meters
};

struct FresnelInterval {
  double r_min = 0.0;
  double r_max = 0.0;
};

struct BeamformerSetting {
  Eigen::VectorXd alpha;  // per-group analog phase, length L

  static BeamformerSetting zeros(int L) { return {Eigen::VectorXd::Zero(L)}; }
};

// GroupPlanar gives each group a plane wave arriving from the group's own angle, with
// the spherical phase at the group's first antenna. Spherical uses the exact
// distance to every antenna.
enum class Wavefront { kGroupPlanar, kSpherical };

struct GroupSnapshots {
  std::vector<Eigen::MatrixXcd> groups;  // L matrices, G x T
  int T = 0;
  double signal_var = 0.0;
  double noise_var = 0.0;
};

struct SynthesisOptions {
  double signal_var = 1.0;
  Wavefront wavefront = Wavefront::kGroupPlanar;
};

double nf_phase(const ArrayConfig& cfg, int m, const EmitterPosition& pos);
Eigen::VectorXcd nf_steering(const ArrayConfig& cfg, const EmitterPosition& pos);

// Per-antenna phases of the received wavefront under the chosen model.
Eigen::VectorXd antenna_phases(const ArrayConfig& cfg, const EmitterPosition& pos, Wavefront model);

// Sine of the angle seen from the first antenna of group l.
double group_sine(const ArrayConfig& cfg, int l, const EmitterPosition& pos);
double group_true_angle(const ArrayConfig& cfg, int l, const EmitterPosition& pos);

FresnelInterval fresnel_interval(const ArrayConfig& cfg);
bool group_ff_condition(const ArrayConfig& cfg, double r);

// Analog combining matrix of group l: G x (G*Ms), row g holds the subarray weights.
Eigen::MatrixXcd group_combiner(const ArrayConfig& cfg, const BeamformerSetting& bf, int l);

// snr_db sets the per-antenna noise variance relative to unit reference power; +inf
// gives noiseless output.
GroupSnapshots synthesize(const ArrayConfig& cfg, const EmitterPosition& pos, const BeamformerSetting& bf,
                          double snr_db, int T, std::uint64_t seed, const SynthesisOptions& options = {});

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace nfloc
