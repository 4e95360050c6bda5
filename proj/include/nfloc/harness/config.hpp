#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nfloc/array_model.hpp"
#include "nfloc/disambiguation.hpp"
#include "nfloc/pipeline.hpp"
#include "nfloc/regnet.hpp"

namespace nfloc {

struct TrainingBlock {
  double theta_min_deg = -90.0;
  double theta_max_deg = 90.0;
  double theta_step_deg = 1.0;
  std::vector<double> snr_db = {0.0, 5.0, 10.0, 15.0, 20.0};
  int trials_per_point = 20;
  int snapshots = 100;
  RangeSampling ranges = RangeSampling::kUniformFresnel;
  double fixed_range_m = 20.0;
  TrainConfig train;
};

struct ExperimentConfig {
  // array
  int M = 240;
  int Ms = 3;
  int L = 5;
  double carrier_ghz = 30.0;
  Wavefront wavefront = Wavefront::kGroupPlanar;
  std::vector<double> alpha;  // per-group analog phase, radians; empty means zeros
  // emitter
  double theta_deg = 60.0;
  double range_m = 20.0;
  // sweep
  std::vector<double> snr_db = {12.0};
  std::vector<int> snapshots = {100};
  int trials = 500;
  std::vector<Method> methods = {Method::kMsdc};
  std::uint64_t seed = 1;
  std::string output;
  std::string regnet_model;
  DbscanOptions dbscan;
  // CRLB sweep: group counts L to evaluate; empty means every valid grouping
  std::vector<int> crlb_groups;
  TrainingBlock training;

  ArrayConfig array() const;
  EmitterPosition emitter() const { return {deg2rad(theta_deg), range_m}; }
  BeamformerSetting beamformer() const;
};

// Parses the YAML experiment description. Unknown keys and invalid values raise
// ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

}  // namespace nfloc
