#include "nfloc/regnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "nfloc/calibration.hpp"
#include "nfloc/errors.hpp"
#include "nfloc/parallel.hpp"
#include "nfloc/rng.hpp"

namespace nfloc {

static_assert(std::endian::native == std::endian::little, "model files are written in host byte order");

namespace {

constexpr double kAngleScale = 2.0 / kPi;

bool all_finite(const RegNetParams& p) { return flatten(p).allFinite(); }

void check_dims(const MlnnParams& p) {
  for (std::size_t h = 0; h < p.layers.size(); ++h) {
    const auto& layer = p.layers[h];
    if (layer.weight.rows() != layer.bias.size()) throw std::invalid_argument("layer bias does not match weight rows");
    if (h > 0 && layer.weight.cols() != p.layers[h - 1].weight.rows()) {
      throw std::invalid_argument("adjacent layer dimensions do not match");
    }
  }
}

}  // namespace

std::vector<int> MlnnParams::dims() const {
  std::vector<int> d;
  if (layers.empty()) return d;
  d.push_back(static_cast<int>(layers.front().weight.cols()));
  for (const auto& layer : layers) d.push_back(static_cast<int>(layer.weight.rows()));
  return d;
}

RegNetParams make_regnet(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("network needs at least an input and an output size");
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
  RegNetParams p;
  for (std::size_t h = 1; h < dims.size(); ++h) {
    p.mlnn.layers.push_back({Eigen::MatrixXd::Zero(dims[h], dims[h - 1]), Eigen::VectorXd::Zero(dims[h])});
  }
  p.perceptron.weight = Eigen::VectorXd::Zero(dims.back());
  return p;
}

RegNetParams init_regnet(const std::vector<int>& dims, std::uint64_t seed) {
  RegNetParams p = make_regnet(dims);
  std::mt19937_64 rng(seed);
  for (std::size_t h = 0; h < p.mlnn.layers.size(); ++h) {
    auto& W = p.mlnn.layers[h].weight;
    const bool output = h + 1 == p.mlnn.layers.size();
    const double limit = output ? std::sqrt(6.0 / static_cast<double>(W.cols() + W.rows()))
                                : std::sqrt(6.0 / static_cast<double>(W.cols()));
    std::uniform_real_distribution<double> uni(-limit, limit);
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = uni(rng);
    }
  }
  p.perceptron.weight.setConstant(1.0 / static_cast<double>(dims.back()));
  return p;
}

Eigen::VectorXd mlnn_forward(const MlnnParams& p, const Eigen::VectorXd& x) {
  check_dims(p);
  if (p.layers.empty() || x.size() != p.layers.front().weight.cols()) {
    throw std::invalid_argument("input size does not match the network");
  }
  Eigen::VectorXd a = x;
  for (std::size_t h = 0; h < p.layers.size(); ++h) {
    Eigen::VectorXd z = p.layers[h].weight * a + p.layers[h].bias;
    a = h + 1 < p.layers.size() ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

double perceptron_forward(const PerceptronParams& p, const Eigen::VectorXd& v) {
  if (v.size() != p.weight.size()) throw std::invalid_argument("perceptron input size mismatch");
  return p.weight.dot(v) + p.bias;
}

LossAndGradients loss_and_gradients(const RegNetParams& p, std::span<const TrainingSample> batch,
                                    const LossWeights& weights) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  check_dims(p.mlnn);
  const std::size_t H = p.mlnn.layers.size();
  const double B = static_cast<double>(batch.size());
  const double out_dim = static_cast<double>(p.mlnn.layers.back().weight.rows());

  LossAndGradients res;
  res.grad = make_regnet(p.mlnn.dims());
  std::vector<Eigen::VectorXd> act(H + 1), pre(H);

  for (const TrainingSample& s : batch) {
    if (s.target_groups.size() != p.mlnn.layers.back().weight.rows()) {
      throw std::invalid_argument("target size does not match the network output");
    }
    act[0] = s.input;
    for (std::size_t h = 0; h < H; ++h) {
      pre[h] = p.mlnn.layers[h].weight * act[h] + p.mlnn.layers[h].bias;
      act[h + 1] = h + 1 < H ? Eigen::VectorXd(pre[h].cwiseMax(0.0)) : pre[h];
    }
    const Eigen::VectorXd& y = act[H];
    const double fused = perceptron_forward(p.perceptron, y);
    const Eigen::VectorXd err = y - s.target_groups;
    const double ferr = fused - s.target_theta;
    res.loss.mlnn += err.squaredNorm();
    res.loss.fused += ferr * ferr;

    const double dfused = weights.fused * 2.0 * ferr / B;
    res.grad.perceptron.weight += dfused * y;
    res.grad.perceptron.bias += dfused;
    Eigen::VectorXd delta = weights.mlnn * 2.0 * err / (out_dim * B) + dfused * p.perceptron.weight;
    for (std::size_t h = H; h-- > 0;) {
      res.grad.mlnn.layers[h].weight.noalias() += delta * act[h].transpose();
      res.grad.mlnn.layers[h].bias += delta;
      if (h > 0) {
        Eigen::VectorXd back = p.mlnn.layers[h].weight.transpose() * delta;
        delta = back.cwiseProduct((pre[h - 1].array() > 0.0).cast<double>().matrix());
      }
    }
  }
  res.loss.mlnn /= out_dim * B;
  res.loss.fused /= B;
  res.total = weights.mlnn * res.loss.mlnn + weights.fused * res.loss.fused;
  return res;
}

LossTerms evaluate_loss(const RegNetParams& p, std::span<const TrainingSample> batch) {
  LossTerms t;
  if (batch.empty()) return t;
  for (const TrainingSample& s : batch) {
    const Eigen::VectorXd y = mlnn_forward(p.mlnn, s.input);
    const double f = perceptron_forward(p.perceptron, y);
    t.mlnn += (y - s.target_groups).squaredNorm() / static_cast<double>(y.size());
    t.fused += (f - s.target_theta) * (f - s.target_theta);
  }
  t.mlnn /= static_cast<double>(batch.size());
  t.fused /= static_cast<double>(batch.size());
  return t;
}

Eigen::VectorXd flatten(const RegNetParams& p) {
  Eigen::Index n = p.perceptron.weight.size() + 1;
  for (const auto& layer : p.mlnn.layers) n += layer.weight.size() + layer.bias.size();
  Eigen::VectorXd flat(n);
  Eigen::Index k = 0;
  for (const auto& layer : p.mlnn.layers) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) flat(k++) = layer.weight(i, j);
    }
    flat.segment(k, layer.bias.size()) = layer.bias;
    k += layer.bias.size();
  }
  flat.segment(k, p.perceptron.weight.size()) = p.perceptron.weight;
  k += p.perceptron.weight.size();
  flat(k) = p.perceptron.bias;
  return flat;
}

void unflatten(const Eigen::VectorXd& flat, RegNetParams& p) {
  if (flat.size() != flatten(p).size()) throw std::invalid_argument("flat parameter size mismatch");
  Eigen::Index k = 0;
  for (auto& layer : p.mlnn.layers) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = flat(k++);
    }
    layer.bias = flat.segment(k, layer.bias.size());
    k += layer.bias.size();
  }
  p.perceptron.weight = flat.segment(k, p.perceptron.weight.size());
  k += p.perceptron.weight.size();
  p.perceptron.bias = flat(k);
}

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)),
      lr_(learning_rate),
      b1_(beta1),
      b2_(beta2),
      eps_(epsilon) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const Eigen::VectorXd& mask) {
  b1t_ *= b1_;
  b2t_ *= b2_;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    if (mask(i) == 0.0) continue;
    m_(i) = b1_ * m_(i) + (1.0 - b1_) * grad(i);
    v_(i) = b2_ * v_(i) + (1.0 - b2_) * grad(i) * grad(i);
    const double mhat = m_(i) / (1.0 - b1t_);
    const double vhat = v_(i) / (1.0 - b2t_);
    params(i) -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

TrainResult train(std::span<const TrainingSample> dataset, int groups, const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("empty training set");
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");

  std::vector<int> dims{static_cast<int>(dataset.front().input.size())};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(groups);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(substream_seed(cfg.seed, {1}));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = 0;
  if (dataset.size() >= 2) {
    n_val = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(cfg.validation_fraction * dataset.size())),
                                    1, dataset.size() - 1);
  }
  std::vector<TrainingSample> val, tr;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_val ? val : tr).push_back(dataset[order[k]]);
  if (val.empty()) val = tr;

  TrainResult result;
  RegNetParams params = init_regnet(dims, substream_seed(cfg.seed, {0}));
  Eigen::VectorXd flat = flatten(params);
  const Eigen::Index n_perc = params.perceptron.weight.size() + 1;
  Eigen::VectorXd head_mask = Eigen::VectorXd::Ones(flat.size());
  head_mask.tail(n_perc).setZero();
  const Eigen::VectorXd fuse_mask = Eigen::VectorXd::Ones(flat.size()) - head_mask;
  const Eigen::VectorXd all_mask = Eigen::VectorXd::Ones(flat.size());
  Adam head_opt(flat.size(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  Adam fuse_opt(flat.size(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);

  std::mt19937_64 shuffle_rng(substream_seed(cfg.seed, {2}));
  std::vector<std::size_t> idx(tr.size());
  std::iota(idx.begin(), idx.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<TrainingSample> batch;

  auto pass = [&](const LossWeights& w, Adam& opt, const Eigen::VectorXd& mask) {
    for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
      batch.clear();
      const std::size_t stop = std::min(idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t k = start; k < stop; ++k) batch.push_back(tr[idx[k]]);
      const LossAndGradients lg = loss_and_gradients(params, batch, w);
      if (!std::isfinite(lg.total)) throw Divergence("training loss is not finite");
      opt.step(flat, flatten(lg.grad), mask);
      unflatten(flat, params);
    }
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), shuffle_rng);
    if (cfg.mode == TrainMode::kJoint) {
      pass({1.0, 1.0}, head_opt, all_mask);
    } else {
      pass({1.0, 0.0}, head_opt, head_mask);
      pass({0.0, 1.0}, fuse_opt, fuse_mask);
    }
    EpochLoss e{epoch, evaluate_loss(params, tr), evaluate_loss(params, val)};
    if (!std::isfinite(e.train.mlnn + e.train.fused) || !std::isfinite(e.validation.mlnn + e.validation.fused)) {
      throw Divergence("training loss is not finite at epoch " + std::to_string(epoch));
    }
    result.history.push_back(e);
    const double score = e.validation.mlnn + e.validation.fused;
    if (score < best) {
      best = score;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

Eigen::VectorXd regnet_input(const std::vector<AmbiguousAngleSet>& sets) {
  std::vector<double> values;
  for (const auto& set : sets) {
    std::vector<double> group;
    for (const auto& a : set.angles) group.push_back(a.theta * kAngleScale);
    std::sort(group.begin(), group.end());
    values.insert(values.end(), group.begin(), group.end());
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

RegNetEstimate regnet_infer(const RegNetParams& p, const std::vector<AmbiguousAngleSet>& sets) {
  if (p.mlnn.layers.empty() || !all_finite(p)) throw NumericalError("network parameters are missing or not finite");
  const Eigen::VectorXd y = mlnn_forward(p.mlnn, regnet_input(sets));
  RegNetEstimate out;
  out.per_group = y / kAngleScale;
  out.theta = perceptron_forward(p.perceptron, y) / kAngleScale;
  return out;
}

double regnet_range(double theta_hat, const Eigen::VectorXd& per_group, const ArrayConfig& cfg) {
  if (per_group.size() != cfg.L) throw std::invalid_argument("need one angle per group");
  double total = 0.0;
  int count = 0;
  for (int l1 = 0; l1 < cfg.L; ++l1) {
    for (int l2 = l1 + 1; l2 < cfg.L; ++l2) {
      const double s = std::sin(per_group(l1) - per_group(l2));
      if (std::abs(s) < 1e-12) continue;
      total += cfg.pair_baseline(l1, l2) * std::cos(per_group(l1)) * std::cos(per_group(l2)) / (std::cos(theta_hat) * s);
      ++count;
    }
  }
  if (count == 0) throw AllPairsDegenerate("every group pair sees parallel rays");
  return total / count;
}

std::vector<TrainingSample> generate_dataset(const ArrayConfig& cfg, const std::vector<double>& theta_grid,
                                             const std::vector<double>& snr_list, int trials_per_point,
                                             std::uint64_t seed, const DatasetOptions& options) {
  for (double t : theta_grid) {
    if (!(std::abs(t) <= kPi / 2.0)) throw std::invalid_argument("training angles must lie in [-pi/2, pi/2]");
  }
  if (trials_per_point < 0) throw std::invalid_argument("trial count must be non-negative");
  const std::size_t per_theta = snr_list.size() * static_cast<std::size_t>(trials_per_point);
  std::vector<TrainingSample> out(theta_grid.size() * per_theta);
  const FresnelInterval fr = fresnel_interval(cfg);
  const BeamformerSetting bf = BeamformerSetting::zeros(cfg.L);

  parallel_for(out.size(), options.workers, [&](std::size_t k) {
    const std::size_t p = k / per_theta;
    const std::size_t s = (k % per_theta) / trials_per_point;
    const std::size_t t = k % trials_per_point;
    std::mt19937_64 rng(substream_seed(seed, {p, s, t}));
    EmitterPosition pos{theta_grid[p], options.fixed_range};
    if (options.ranges == RangeSampling::kUniformFresnel) {
      pos.range = std::uniform_real_distribution<double>(fr.r_min, fr.r_max)(rng);
    }
    const GroupSnapshots snaps =
        synthesize(cfg, pos, bf, snr_list[s], options.snapshots, rng(), {1.0, options.wavefront});
    TrainingSample sample;
    sample.input = regnet_input(estimate_ambiguous_sets(snaps, cfg));
    sample.target_groups.resize(cfg.L);
    for (int l = 0; l < cfg.L; ++l) sample.target_groups(l) = group_true_angle(cfg, l, pos) * kAngleScale;
    sample.target_theta = pos.theta * kAngleScale;
    out[k] = std::move(sample);
  });
  return out;
}

namespace {

constexpr char kMagic[8] = {'N', 'F', 'L', 'R', 'G', 'N', 'E', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f, const std::string& path) {
  T v{};
  if (!f.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ConfigError("truncated model file: " + path);
  return v;
}

}  // namespace

void save_model(const RegNetParams& p, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open model file for writing: " + path);
  f.write(kMagic, sizeof(kMagic));
  put(f, kVersion);
  const std::vector<int> dims = p.mlnn.dims();
  put(f, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) put(f, static_cast<std::uint32_t>(d));
  for (const auto& layer : p.mlnn.layers) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) put(f, layer.weight(i, j));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put(f, layer.bias(i));
  }
  for (Eigen::Index i = 0; i < p.perceptron.weight.size(); ++i) put(f, p.perceptron.weight(i));
  put(f, p.perceptron.bias);
  if (!f) throw std::runtime_error("failed writing model file: " + path);
}

RegNetParams load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open model file: " + path);
  char magic[sizeof(kMagic)];
  if (!f.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError("not a model file: " + path);
  }
  const auto version = get<std::uint32_t>(f, path);
  if (version != kVersion) throw ConfigError("unsupported model file version " + std::to_string(version));
  const auto count = get<std::uint32_t>(f, path);
  if (count < 2 || count > 64) throw ConfigError("invalid layer count in model file: " + path);
  std::vector<int> dims;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto d = get<std::uint32_t>(f, path);
    if (d == 0 || d > 100000) throw ConfigError("invalid layer size in model file: " + path);
    dims.push_back(static_cast<int>(d));
  }
  RegNetParams p = make_regnet(dims);
  for (auto& layer : p.mlnn.layers) {
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) layer.weight(i, j) = get<double>(f, path);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = get<double>(f, path);
  }
  for (Eigen::Index i = 0; i < p.perceptron.weight.size(); ++i) p.perceptron.weight(i) = get<double>(f, path);
  p.perceptron.bias = get<double>(f, path);
  if (f.peek() != std::char_traits<char>::eof()) throw ConfigError("trailing bytes in model file: " + path);
  if (!all_finite(p)) throw ConfigError("model file holds non-finite parameters: " + path);
  return p;
}

}  // namespace nfloc
