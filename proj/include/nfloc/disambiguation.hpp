#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nfloc/array_model.hpp"
#include "nfloc/calibration.hpp"

namespace nfloc {

using PlanePoint = Eigen::Vector2d;

// x -> x e^{jx} as a point in the plane; |polarize(x)| = |x|.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> polarize(Scalar x) {
  using std::cos;
  using std::sin;
  return {x * cos(x), x * sin(x)};
}

struct Resolution {
  int coeff = 0;  // selected ambiguity coefficient
  double theta = 0.0;
  double range = 0.0;
};

// Squared distance between two candidates with the angle in degrees and range in meters.
// Pairs involving an invalid candidate cost a fixed penalty.
inline constexpr double kInvalidPairPenalty = 1e6;
double candidate_distance(const CandidatePosition& a, const CandidatePosition& b);
double cluster_scatter(std::span<const CandidatePosition> cluster);

struct MsdcResult : Resolution {
  std::vector<double> scatter;  // per coefficient
};

// Picks the coefficient whose candidates have the least pairwise scatter and averages them.
MsdcResult msdc(const CandidatePositionSet& omega);

// Per-coefficient disagreement between the group-0 candidate and its calibrated copies.
std::vector<double> asd_scores(const AsdCollection& asd);

// Coefficients whose score is within kappa * (min score + 1e-12); ascending order.
std::vector<int> asd_prefilter(std::span<const double> scores, double kappa);
std::vector<int> asd_prefilter(const AsdCollection& asd, double kappa);

struct ClusterLabeling {
  static constexpr int kNoise = -1;
  std::vector<int> labels;
  int cluster_count = 0;
};

// Density clustering with squared-distance radius eps. A point is core when at least
// min_pts points (itself included) lie within eps. Seeds are visited in index order and
// border points join the first cluster that reaches them.
template <typename Scalar, int Dim>
ClusterLabeling dbscan(const std::vector<Eigen::Matrix<Scalar, Dim, 1>>& points, Scalar eps, int min_pts) {
  constexpr int kUnvisited = -2;
  const std::size_t n = points.size();
  ClusterLabeling out;
  out.labels.assign(n, kUnvisited);

  auto neighbors = [&](std::size_t i) {
    std::vector<std::size_t> nb;
    for (std::size_t j = 0; j < n; ++j) {
      if ((points[i] - points[j]).squaredNorm() <= eps) nb.push_back(j);
    }
    return nb;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (out.labels[i] != kUnvisited) continue;
    std::vector<std::size_t> queue = neighbors(i);
    if (static_cast<int>(queue.size()) < min_pts) {
      out.labels[i] = ClusterLabeling::kNoise;
      continue;
    }
    const int id = out.cluster_count++;
    out.labels[i] = id;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t j = queue[q];
      if (out.labels[j] == ClusterLabeling::kNoise) out.labels[j] = id;
      if (out.labels[j] != kUnvisited) continue;
      out.labels[j] = id;
      std::vector<std::size_t> more = neighbors(j);
      if (static_cast<int>(more.size()) >= min_pts) queue.insert(queue.end(), more.begin(), more.end());
    }
  }
  return out;
}

// Sum of pairwise squared distances of the chosen points.
double pairwise_scatter(const std::vector<PlanePoint>& points, std::span<const int> chosen);

// Size-n subset of `pool` with the least pairwise scatter. Exhaustive when the number of
// subsets is at most `exhaustive_limit`, otherwise nearest-neighbour seeds refined by swaps.
std::vector<int> min_scatter_subset(const std::vector<PlanePoint>& points, std::span<const int> pool, int n,
                                    std::size_t exhaustive_limit = 200000);

struct DbscanOptions {
  double eta = 0.9;
  int max_iter = 50;
  double kappa = 9.0;
};

struct DbscanResolution : Resolution {
  std::vector<int> selected;     // indices into omega.entries()
  std::vector<int> surviving;    // coefficients kept by the angle prefilter
  std::vector<double> eps_trace; // radius of every accepted shrink step, starting with the initial one
  int iterations = 0;
  bool used_fallback = false;
};

DbscanResolution rsd_asd_dbscan(const CandidatePositionSet& omega, const AsdCollection& asd,
                                const DbscanOptions& options = {});

}  // namespace nfloc
