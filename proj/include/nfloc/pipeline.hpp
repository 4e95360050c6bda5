#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nfloc/array_model.hpp"
#include "nfloc/calibration.hpp"
#include "nfloc/disambiguation.hpp"
#include "nfloc/regnet.hpp"
#include "nfloc/subspace_doa.hpp"

namespace nfloc {

enum class Method { kMsdc = 0, kRsdAsdDbscan = 1, kRegNet = 2 };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct Estimate {
  double theta = 0.0;
  double range = 0.0;
  int coeff = 0;  // ambiguity coefficient the method settled on
};

// Resolves one snapshot batch's ambiguous sets into a position. `model` is required for
// the network method and ignored otherwise.
Estimate locate(Method method, const ArrayConfig& cfg, const std::vector<AmbiguousAngleSet>& sets,
                const RegNetParams* model = nullptr, const DbscanOptions& dbscan = {});

}  // namespace nfloc
