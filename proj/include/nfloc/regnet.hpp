#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nfloc/array_model.hpp"
#include "nfloc/subspace_doa.hpp"

namespace nfloc {

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Fully connected network: ReLU on hidden layers, affine output.
struct MlnnParams {
  std::vector<DenseLayer> layers;

  std::vector<int> dims() const;  // input, hidden..., output
};

struct PerceptronParams {
  Eigen::VectorXd weight;
  double bias = 0.0;
};

struct RegNetParams {
  MlnnParams mlnn;
  PerceptronParams perceptron;
};

// Zero-filled parameters for the dimension chain input -> hidden... -> output.
RegNetParams make_regnet(const std::vector<int>& dims);
// He-uniform hidden layers, Glorot-uniform output layer, perceptron initialized to the mean.
RegNetParams init_regnet(const std::vector<int>& dims, std::uint64_t seed);

Eigen::VectorXd mlnn_forward(const MlnnParams& p, const Eigen::VectorXd& x);
double perceptron_forward(const PerceptronParams& p, const Eigen::VectorXd& v);

// Inputs and targets are angles scaled by 2/pi.
struct TrainingSample {
  Eigen::VectorXd input;          // L*Ms candidate angles
  Eigen::VectorXd target_groups;  // L per-group true angles
  double target_theta = 0.0;      // reference-point angle
};

// Weights of the two loss terms: mean squared error of the per-group head and of the
// fused angle, where the perceptron reads the network output.
struct LossWeights {
  double mlnn = 1.0;
  double fused = 1.0;
};

struct LossTerms {
  double mlnn = 0.0;
  double fused = 0.0;
};

struct LossAndGradients {
  LossTerms loss;
  double total = 0.0;
  RegNetParams grad;  // same shapes as the parameters
};

LossAndGradients loss_and_gradients(const RegNetParams& p, std::span<const TrainingSample> batch,
                                    const LossWeights& weights = {});

LossTerms evaluate_loss(const RegNetParams& p, std::span<const TrainingSample> batch);

Eigen::VectorXd flatten(const RegNetParams& p);
void unflatten(const Eigen::VectorXd& flat, RegNetParams& p);

enum class TrainMode { kSequential, kJoint };

struct TrainConfig {
  std::vector<int> hidden = {12, 8};
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.1;
  TrainMode mode = TrainMode::kSequential;
  std::uint64_t seed = 1;
};

struct EpochLoss {
  int epoch = 0;
  LossTerms train;
  LossTerms validation;
};

struct TrainResult {
  RegNetParams params;  // lowest validation loss seen
  std::vector<EpochLoss> history;
  int best_epoch = 0;
};

// Sequential mode alternates an epoch of the per-group head with an epoch of the
// perceptron on the frozen head output; joint mode minimizes the summed loss.
TrainResult train(std::span<const TrainingSample> dataset, int groups, const TrainConfig& cfg);

// Adam on a flat parameter vector; entries with mask 0 are left untouched.
class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const Eigen::VectorXd& mask);

 private:
  Eigen::VectorXd m_, v_;
  double lr_, b1_, b2_, eps_;
  double b1t_ = 1.0, b2t_ = 1.0;
};

// Network input: groups in order, each group's candidates sorted ascending, scaled by 2/pi.
Eigen::VectorXd regnet_input(const std::vector<AmbiguousAngleSet>& sets);

struct RegNetEstimate {
  Eigen::VectorXd per_group;  // radians
  double theta = 0.0;         // radians
};

RegNetEstimate regnet_infer(const RegNetParams& p, const std::vector<AmbiguousAngleSet>& sets);

// Range from the fused angle and per-group angles, averaged over non-degenerate pairs.
double regnet_range(double theta_hat, const Eigen::VectorXd& per_group, const ArrayConfig& cfg);

enum class RangeSampling { kUniformFresnel, kFixed };

struct DatasetOptions {
  int snapshots = 100;
  RangeSampling ranges = RangeSampling::kUniformFresnel;
  double fixed_range = 20.0;
  Wavefront wavefront = Wavefront::kGroupPlanar;
  int workers = 1;
};

// One sample per (theta, snr, trial), each drawn from its own seed substream.
std::vector<TrainingSample> generate_dataset(const ArrayConfig& cfg, const std::vector<double>& theta_grid,
                                             const std::vector<double>& snr_list, int trials_per_point,
                                             std::uint64_t seed, const DatasetOptions& options = {});

// Binary model file: magic, version, dimension chain, then float64 row-major weights and
// biases per layer, then perceptron weights and bias. Little-endian.
void save_model(const RegNetParams& p, const std::string& path);
RegNetParams load_model(const std::string& path);

}  // namespace nfloc
