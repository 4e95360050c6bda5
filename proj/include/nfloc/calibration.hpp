#pragma once

#include <span>
#include <vector>

#include "nfloc/array_model.hpp"
#include "nfloc/subspace_doa.hpp"

namespace nfloc {

struct PairCalibration {
  double theta = 0.0;  // angle at the reference antenna
  double range = 0.0;  // range to the reference antenna
  bool valid = false;  // range finite and positive
  bool degenerate = false;  // parallel rays, range undefined
};

// Triangulates the emitter from the angles seen by groups l1 < l2 and refers the result
// to the reference antenna. Throws DegeneratePair when the rays are parallel.
PairCalibration calibrate_pair(double theta_l1, double theta_l2, int l1, int l2, const ArrayConfig& cfg);

// Same computation, reporting degeneracy through the flag instead of throwing. A
// degenerate pair keeps its angle and gets range +inf.
PairCalibration calibrate_pair_flagged(double theta_l1, double theta_l2, int l1, int l2, const ArrayConfig& cfg);

struct CandidatePosition {
  double theta = 0.0;
  double range = 0.0;
  int l1 = 0;
  int l2 = 0;
  int coeff = 0;
  bool valid = false;
};

// All pairwise calibrations, stored coefficient-major: cluster i holds the N = L(L-1)/2
// pairs in lexicographic order.
class CandidatePositionSet {
 public:
  CandidatePositionSet(int pairs, int ambiguity, std::vector<CandidatePosition> entries);

  int pairs() const { return pairs_; }
  int ambiguity() const { return ambiguity_; }
  const std::vector<CandidatePosition>& entries() const { return entries_; }
  std::span<const CandidatePosition> cluster(int coeff) const;

 private:
  int pairs_;
  int ambiguity_;
  std::vector<CandidatePosition> entries_;
};

CandidatePositionSet build_candidate_set(const std::vector<AmbiguousAngleSet>& sets, const ArrayConfig& cfg);

struct TaggedAngle {
  double theta = 0.0;
  int source = 0;  // group whose pairing with group 0 produced the angle; 0 for group 0 itself
  int coeff = 0;
};

// Group-0 candidates together with the reference angles calibrated from every pair
// (0, l); entries are coefficient-major, L per coefficient, source 0 first.
struct AsdCollection {
  int groups = 0;
  int ambiguity = 0;
  std::vector<TaggedAngle> entries;

  std::span<const TaggedAngle> coefficient(int coeff) const {
    return std::span<const TaggedAngle>(entries).subspan(static_cast<std::size_t>(coeff) * groups, groups);
  }
};

AsdCollection asd_angle_sets(const AmbiguousAngleSet& set1, const std::vector<AmbiguousAngleSet>& sets,
                             const ArrayConfig& cfg);

}  // namespace nfloc
