#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nfloc/harness/config.hpp"
#include "nfloc/regnet.hpp"

namespace nfloc {

inline const char* const kSweepHeader =
    "method,snr_db,snapshots,trials,rmse_theta_deg,rmse_r_m,success_rate,crlb_theta_deg,crlb_r_m";
inline const char* const kCrlbHeader = "L,G,snr_db,crlb_theta_deg,crlb_r_m";

struct TrialResult {
  double theta = 0.0;
  double range = 0.0;
  bool success = false;  // settled on the coefficient that contains the true angle
  bool failed = false;   // the method raised a numerical failure and gave no estimate
};

struct SweepRow {
  Method method = Method::kMsdc;
  double snr_db = 0.0;
  int snapshots = 0;
  int trials = 0;
  double rmse_theta_deg = 0.0;
  double rmse_r_m = 0.0;
  double success_rate = 0.0;
  double crlb_theta_deg = 0.0;  // square root of the bound
  double crlb_r_m = 0.0;
  int failures = 0;  // trials without an estimate; excluded from the RMSE, counted as unresolved
};

// Standard deviations implied by the bound, in degrees and meters; zero without noise.
std::pair<double, double> crlb_std(const ArrayConfig& cfg, const EmitterPosition& pos, double snr_db, int T);

// One Monte Carlo trial with its own seed substream (method, snr index, T index, trial).
TrialResult run_trial(const ExperimentConfig& cfg, Method method, std::size_t snr_index, std::size_t t_index,
                      std::size_t trial, const RegNetParams* model);

std::string run_locate(const ExperimentConfig& cfg, const RegNetParams* model);

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const RegNetParams* model, int workers);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct CrlbRow {
  int L = 0;
  int G = 0;
  double snr_db = 0.0;
  std::optional<double> crlb_theta_deg;  // empty when the Fisher matrix is singular
  std::optional<double> crlb_r_m;
};

std::vector<CrlbRow> run_crlb_sweep(const ExperimentConfig& cfg);
std::string crlb_csv(const std::vector<CrlbRow>& rows);

std::vector<TrainingSample> run_gen_dataset(const ExperimentConfig& cfg, int workers);
std::string dataset_csv(const std::vector<TrainingSample>& data, int groups, int ambiguity);
std::vector<TrainingSample> parse_dataset_csv(const std::string& text, int groups, int ambiguity);

TrainResult run_train(const ExperimentConfig& cfg, const std::vector<TrainingSample>& data);
std::string loss_csv(const TrainResult& result);

// Throws ConfigError when the model does not fit the configured array.
void check_model_fits(const RegNetParams& model, const ExperimentConfig& cfg);

}  // namespace nfloc
