#include "nfloc/pipeline.hpp"

#include <stdexcept>

namespace nfloc {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kMsdc:
      return "msdc";
    case Method::kRsdAsdDbscan:
      return "rsd-asd-dbscan";
    case Method::kRegNet:
      return "regnet";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kMsdc, Method::kRsdAsdDbscan, Method::kRegNet}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

Estimate locate(Method method, const ArrayConfig& cfg, const std::vector<AmbiguousAngleSet>& sets,
                const RegNetParams* model, const DbscanOptions& dbscan) {
  switch (method) {
    case Method::kMsdc: {
      const MsdcResult r = msdc(build_candidate_set(sets, cfg));
      return {r.theta, r.range, r.coeff};
    }
    case Method::kRsdAsdDbscan: {
      const CandidatePositionSet omega = build_candidate_set(sets, cfg);
      const DbscanResolution r = rsd_asd_dbscan(omega, asd_angle_sets(sets.front(), sets, cfg), dbscan);
      return {r.theta, r.range, r.coeff};
    }
    case Method::kRegNet: {
      if (model == nullptr) throw std::invalid_argument("the network method needs a trained model");
      const RegNetEstimate e = regnet_infer(*model, sets);
      return {e.theta, regnet_range(e.theta, e.per_group, cfg), nearest_coefficient(sets.front(), e.per_group(0))};
    }
  }
  throw std::invalid_argument("unknown method");
}

}  // namespace nfloc
