#include "nfloc/calibration.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nfloc/errors.hpp"

namespace nfloc {

PairCalibration calibrate_pair_flagged(double theta_l1, double theta_l2, int l1, int l2, const ArrayConfig& cfg) {
  if (!(l1 < l2) || l1 < 0 || l2 >= cfg.L) throw std::invalid_argument("group pair must satisfy 0 <= l1 < l2 < L");
  const double d1 = cfg.group_offset(l1);
  const double d2 = cfg.group_offset(l2);
  const double d12 = cfg.pair_baseline(l1, l2);
  const double c1 = std::cos(theta_l1);
  const double c2 = std::cos(theta_l2);

  PairCalibration out;
  // tan form multiplied through by cos(theta_l1) cos(theta_l2) >= 0
  out.theta = d1 == 0.0 ? theta_l1
                        : std::atan2(d2 * std::sin(theta_l1) * c2 - d1 * std::sin(theta_l2) * c1, d12 * c1 * c2);
  const double s = std::sin(theta_l1 - theta_l2);
  if (std::abs(s) < 1e-12) {
    out.degenerate = true;
    out.range = std::numeric_limits<double>::infinity();
    return out;
  }
  const double r_l2 = d12 * c1 / s;
  out.range = r_l2 * c2 / std::cos(out.theta);
  out.valid = std::isfinite(out.range) && out.range > 0.0;
  return out;
}

PairCalibration calibrate_pair(double theta_l1, double theta_l2, int l1, int l2, const ArrayConfig& cfg) {
  PairCalibration out = calibrate_pair_flagged(theta_l1, theta_l2, l1, l2, cfg);
  if (out.degenerate) {
    throw DegeneratePair("groups " + std::to_string(l1) + " and " + std::to_string(l2) + " see parallel rays");
  }
  return out;
}

CandidatePositionSet::CandidatePositionSet(int pairs, int ambiguity, std::vector<CandidatePosition> entries)
    : pairs_(pairs), ambiguity_(ambiguity), entries_(std::move(entries)) {
  if (static_cast<std::size_t>(pairs_) * ambiguity_ != entries_.size()) {
    throw std::invalid_argument("candidate set size must be pairs * ambiguity");
  }
}

std::span<const CandidatePosition> CandidatePositionSet::cluster(int coeff) const {
  if (coeff < 0 || coeff >= ambiguity_) throw std::out_of_range("ambiguity coefficient out of range");
  return std::span<const CandidatePosition>(entries_).subspan(static_cast<std::size_t>(coeff) * pairs_, pairs_);
}

CandidatePositionSet build_candidate_set(const std::vector<AmbiguousAngleSet>& sets, const ArrayConfig& cfg) {
  if (static_cast<int>(sets.size()) != cfg.L) throw std::invalid_argument("need one ambiguous set per group");
  for (const auto& set : sets) {
    if (static_cast<int>(set.angles.size()) != cfg.Ms) throw std::invalid_argument("each set must hold Ms angles");
  }
  std::vector<CandidatePosition> entries;
  entries.reserve(static_cast<std::size_t>(cfg.pair_count()) * cfg.Ms);
  for (int i = 0; i < cfg.Ms; ++i) {
    for (int l1 = 0; l1 < cfg.L; ++l1) {
      for (int l2 = l1 + 1; l2 < cfg.L; ++l2) {
        const PairCalibration p =
            calibrate_pair_flagged(sets[l1].angles[i].theta, sets[l2].angles[i].theta, l1, l2, cfg);
        entries.push_back({p.theta, p.range, l1, l2, i, p.valid});
      }
    }
  }
  return CandidatePositionSet(cfg.pair_count(), cfg.Ms, std::move(entries));
}

AsdCollection asd_angle_sets(const AmbiguousAngleSet& set1, const std::vector<AmbiguousAngleSet>& sets,
                             const ArrayConfig& cfg) {
  if (static_cast<int>(sets.size()) != cfg.L) throw std::invalid_argument("need one ambiguous set per group");
  AsdCollection out;
  out.groups = cfg.L;
  out.ambiguity = cfg.Ms;
  out.entries.reserve(static_cast<std::size_t>(cfg.L) * cfg.Ms);
  for (int i = 0; i < cfg.Ms; ++i) {
    const double reference = set1.angles[i].theta;
    out.entries.push_back({reference, 0, i});
    for (int l = 1; l < cfg.L; ++l) {
      const PairCalibration p = calibrate_pair_flagged(reference, sets[l].angles[i].theta, 0, l, cfg);
      out.entries.push_back({p.theta, l, i});
    }
  }
  return out;
}

}  // namespace nfloc
