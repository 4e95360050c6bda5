#include "nfloc/disambiguation.hpp"

#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "nfloc/errors.hpp"

namespace nfloc {

double candidate_distance(const CandidatePosition& a, const CandidatePosition& b) {
  if (!a.valid || !b.valid) return kInvalidPairPenalty;
  const double dt = rad2deg(a.theta - b.theta);
  const double dr = a.range - b.range;
  return dt * dt + dr * dr;
}

double cluster_scatter(std::span<const CandidatePosition> cluster) {
  double total = 0.0;
  for (std::size_t a = 0; a < cluster.size(); ++a) {
    for (std::size_t b = a + 1; b < cluster.size(); ++b) total += candidate_distance(cluster[a], cluster[b]);
  }
  return total;
}

MsdcResult msdc(const CandidatePositionSet& omega) {
  MsdcResult out;
  out.scatter.reserve(omega.ambiguity());
  for (int i = 0; i < omega.ambiguity(); ++i) out.scatter.push_back(cluster_scatter(omega.cluster(i)));
  out.coeff = static_cast<int>(std::min_element(out.scatter.begin(), out.scatter.end()) - out.scatter.begin());

  double theta = 0.0, range = 0.0;
  int count = 0;
  for (const auto& c : omega.cluster(out.coeff)) {
    if (!c.valid) continue;
    theta += c.theta;
    range += c.range;
    ++count;
  }
  if (count == 0) throw NumericalError("selected cluster has no valid candidate");
  out.theta = theta / count;
  out.range = range / count;
  return out;
}

std::vector<double> asd_scores(const AsdCollection& asd) {
  std::vector<double> s(asd.ambiguity, 0.0);
  for (int i = 0; i < asd.ambiguity; ++i) {
    const auto angles = asd.coefficient(i);
    const PlanePoint ref = polarize(angles[0].theta);
    for (std::size_t l = 1; l < angles.size(); ++l) s[i] += (polarize(angles[l].theta) - ref).squaredNorm();
  }
  return s;
}

std::vector<int> asd_prefilter(std::span<const double> scores, double kappa) {
  if (scores.empty()) return {};
  const double lowest = *std::min_element(scores.begin(), scores.end());
  const double threshold = kappa * (lowest + 1e-12);
  std::vector<int> keep;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] <= threshold || scores[i] == lowest) keep.push_back(static_cast<int>(i));
  }
  return keep;
}

std::vector<int> asd_prefilter(const AsdCollection& asd, double kappa) {
  const std::vector<double> s = asd_scores(asd);
  return asd_prefilter(std::span<const double>(s), kappa);
}

double pairwise_scatter(const std::vector<PlanePoint>& points, std::span<const int> chosen) {
  // sum over pairs equals n * sum of squared deviations from the centroid
  if (chosen.empty()) return 0.0;
  PlanePoint mean = PlanePoint::Zero();
  for (int i : chosen) mean += points[i];
  mean /= static_cast<double>(chosen.size());
  double dev = 0.0;
  for (int i : chosen) dev += (points[i] - mean).squaredNorm();
  return static_cast<double>(chosen.size()) * dev;
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

std::vector<int> exhaustive_subset(const std::vector<PlanePoint>& points, std::span<const int> pool, int n) {
  std::vector<int> pick(n);
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<int> best, chosen(n);
  double best_scatter = std::numeric_limits<double>::infinity();
  const int m = static_cast<int>(pool.size());
  while (true) {
    for (int k = 0; k < n; ++k) chosen[k] = pool[pick[k]];
    const double s = pairwise_scatter(points, chosen);
    if (s < best_scatter) {
      best_scatter = s;
      best = chosen;
    }
    int k = n - 1;
    while (k >= 0 && pick[k] == m - n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int j = k + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

std::vector<int> greedy_subset(const std::vector<PlanePoint>& points, std::span<const int> pool, int n) {
  std::vector<int> best;
  double best_scatter = std::numeric_limits<double>::infinity();
  for (int seed : pool) {
    std::vector<int> order(pool.begin(), pool.end());
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return (points[a] - points[seed]).squaredNorm() < (points[b] - points[seed]).squaredNorm();
    });
    std::vector<int> chosen(order.begin(), order.begin() + n);
    std::vector<int> rest(order.begin() + n, order.end());
    double current = pairwise_scatter(points, chosen);
    bool improved = true;
    while (improved) {
      improved = false;
      for (int a = 0; a < n && !improved; ++a) {
        for (std::size_t b = 0; b < rest.size() && !improved; ++b) {
          std::swap(chosen[a], rest[b]);
          const double s = pairwise_scatter(points, chosen);
          if (s < current) {
            current = s;
            improved = true;
          } else {
            std::swap(chosen[a], rest[b]);
          }
        }
      }
    }
    if (current < best_scatter) {
      best_scatter = current;
      best = chosen;
    }
  }
  std::sort(best.begin(), best.end());
  return best;
}

}  // namespace

std::vector<int> min_scatter_subset(const std::vector<PlanePoint>& points, std::span<const int> pool, int n,
                                    std::size_t exhaustive_limit) {
  if (n <= 0 || static_cast<int>(pool.size()) < n) throw std::invalid_argument("pool smaller than requested subset");
  if (binomial(pool.size(), n) <= static_cast<double>(exhaustive_limit)) return exhaustive_subset(points, pool, n);
  return greedy_subset(points, pool, n);
}

DbscanResolution rsd_asd_dbscan(const CandidatePositionSet& omega, const AsdCollection& asd,
                                const DbscanOptions& options) {
  if (!(options.eta > 0.0 && options.eta < 1.0)) throw std::invalid_argument("shrink factor must lie in (0, 1)");
  const int n = omega.pairs();
  DbscanResolution out;
  out.surviving = asd_prefilter(asd, options.kappa);
  if (out.surviving.empty()) throw ConvergenceFailure("no ambiguity coefficient survived the angle prefilter");

  // Range scatter diagram; invalid candidates have no finite range and stay out of it.
  std::vector<PlanePoint> points;
  std::vector<int> entry_of;
  // initial radius from the complete clusters; partial clusters only when none is complete
  double eps_complete = std::numeric_limits<double>::infinity();
  double eps_partial = std::numeric_limits<double>::infinity();
  double magnitude = 1.0;
  for (int i : out.surviving) {
    const auto cluster = omega.cluster(i);
    const std::size_t first = points.size();
    for (std::size_t k = 0; k < cluster.size(); ++k) {
      if (!cluster[k].valid) continue;
      points.push_back(polarize(cluster[k].range));
      entry_of.push_back(i * n + static_cast<int>(k));
      magnitude = std::max(magnitude, cluster[k].range * cluster[k].range);
    }
    if (points.size() - first < 2) continue;
    double widest = 0.0;
    for (std::size_t a = first; a < points.size(); ++a) {
      for (std::size_t b = a + 1; b < points.size(); ++b) widest = std::max(widest, (points[a] - points[b]).squaredNorm());
    }
    double& slot = points.size() - first == static_cast<std::size_t>(n) ? eps_complete : eps_partial;
    slot = std::min(slot, widest);
  }
  if (static_cast<int>(points.size()) < n) throw ConvergenceFailure("fewer valid candidates than pairs");
  double eps = std::isfinite(eps_complete) ? eps_complete : eps_partial;
  if (!std::isfinite(eps)) eps = 0.0;
  // coincident points (noiseless data) would give a zero radius
  eps = std::max(eps, 1e-12 * magnitude);

  std::vector<int> current(points.size());
  std::iota(current.begin(), current.end(), 0);
  double accepted = eps;
  double eta = options.eta;
  out.eps_trace.push_back(eps);
  bool done = false;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    ++out.iterations;
    std::vector<PlanePoint> subset;
    subset.reserve(current.size());
    for (int k : current) subset.push_back(points[k]);
    const ClusterLabeling lab = dbscan(subset, eps, n);

    std::vector<int> sizes(lab.cluster_count, 0);
    for (int label : lab.labels) {
      if (label >= 0) ++sizes[label];
    }
    int largest = -1;
    for (int c = 0; c < lab.cluster_count; ++c) {
      if (largest < 0 || sizes[c] > sizes[largest]) largest = c;
    }
    const int size = largest < 0 ? 0 : sizes[largest];

    if (size == n) {
      std::vector<int> members;
      for (std::size_t k = 0; k < current.size(); ++k) {
        if (lab.labels[k] == largest) members.push_back(current[k]);
      }
      current = members;
      done = true;
      break;
    }
    if (size < n) {
      // overshoot: return to the last radius that kept a large enough cluster, shrink more gently
      eta = (1.0 + eta) / 2.0;
      eps = eta * accepted;
      continue;
    }
    std::vector<int> members;
    for (std::size_t k = 0; k < current.size(); ++k) {
      if (lab.labels[k] == largest) members.push_back(current[k]);
    }
    current = members;
    accepted = eps;
    if (out.eps_trace.back() != eps) out.eps_trace.push_back(eps);
    eps = eta * accepted;
  }

  if (!done) {
    out.used_fallback = true;
    current = min_scatter_subset(points, current, n);
  }

  double theta = 0.0, range = 0.0;
  std::map<int, int> votes;
  for (int k : current) {
    const CandidatePosition& c = omega.entries()[entry_of[k]];
    out.selected.push_back(entry_of[k]);
    theta += c.theta;
    range += points[k].norm();
    ++votes[c.coeff];
  }
  std::sort(out.selected.begin(), out.selected.end());
  out.theta = theta / n;
  out.range = range / n;
  int best_votes = -1;
  for (const auto& [coeff, count] : votes) {
    if (count > best_votes) {
      best_votes = count;
      out.coeff = coeff;
    }
  }
  return out;
}

}  // namespace nfloc
