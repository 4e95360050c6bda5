#include "nfloc/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nfloc/errors.hpp"

namespace nfloc {

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    std::ostringstream os;
    os << origin_;
    if (node.IsDefined() && node.Mark().line >= 0) os << ":" << node.Mark().line + 1;
    os << ": " << message;
    throw ConfigError(os.str());
  }

  void expect_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, what + " must be a mapping");
  }

  void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& what) const {
    expect_map(node, what);
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  double real(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a number");
    const std::string s = node.Scalar();
    if (s == "inf" || s == "+inf" || s == ".inf" || s == "+.inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-.inf") return -std::numeric_limits<double>::infinity();
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be a number, got '" + s + "'");
    }
  }

  long long integer(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be an integer");
    try {
      return node.as<long long>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be an integer, got '" + node.Scalar() + "'");
    }
  }

  std::uint64_t unsigned64(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a non-negative integer");
    try {
      return node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail(node, what + " must be a non-negative integer, got '" + node.Scalar() + "'");
    }
  }

  std::string text(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, what + " must be a string");
    return node.Scalar();
  }

  std::vector<double> reals(const YAML::Node& node, const std::string& what) const {
    if (node.IsScalar()) return {real(node, what)};
    if (!node.IsSequence() || node.size() == 0) fail(node, what + " must be a non-empty list of numbers");
    std::vector<double> out;
    for (const auto& item : node) out.push_back(real(item, what));
    return out;
  }

  std::vector<long long> integers(const YAML::Node& node, const std::string& what) const {
    if (node.IsScalar()) return {integer(node, what)};
    if (!node.IsSequence() || node.size() == 0) fail(node, what + " must be a non-empty list of integers");
    std::vector<long long> out;
    for (const auto& item : node) out.push_back(integer(item, what));
    return out;
  }

 private:
  std::string origin_;
};

int positive_int(const Reader& rd, const YAML::Node& node, const std::string& what) {
  const long long v = rd.integer(node, what);
  if (v < 1 || v > std::numeric_limits<int>::max()) rd.fail(node, what + " must be a positive integer");
  return static_cast<int>(v);
}

void read_array(const Reader& rd, const YAML::Node& node, ExperimentConfig& cfg) {
  rd.check_keys(node, {"M", "Ms", "L", "carrier_ghz", "wavefront", "alpha"}, "array");
  if (node["M"]) cfg.M = positive_int(rd, node["M"], "array.M");
  if (node["Ms"]) cfg.Ms = positive_int(rd, node["Ms"], "array.Ms");
  if (node["L"]) cfg.L = positive_int(rd, node["L"], "array.L");
  if (node["carrier_ghz"]) {
    cfg.carrier_ghz = rd.real(node["carrier_ghz"], "array.carrier_ghz");
    if (!(cfg.carrier_ghz > 0.0) || !std::isfinite(cfg.carrier_ghz)) {
      rd.fail(node["carrier_ghz"], "array.carrier_ghz must be positive");
    }
  }
  if (node["wavefront"]) {
    const std::string w = rd.text(node["wavefront"], "array.wavefront");
    if (w == "group-planar") {
      cfg.wavefront = Wavefront::kGroupPlanar;
    } else if (w == "spherical") {
      cfg.wavefront = Wavefront::kSpherical;
    } else {
      rd.fail(node["wavefront"], "array.wavefront must be 'group-planar' or 'spherical'");
    }
  }
  if (node["alpha"]) cfg.alpha = rd.reals(node["alpha"], "array.alpha");

  try {
    const ArrayConfig a = cfg.array();
    validate_for_localization(a);
  } catch (const ConfigError& e) {
    rd.fail(node["Ms"] ? node["Ms"] : node, e.what());
  }
  if (!cfg.alpha.empty() && static_cast<int>(cfg.alpha.size()) != cfg.L) {
    rd.fail(node["alpha"], "array.alpha needs one phase per group");
  }
}

void read_sweep(const Reader& rd, const YAML::Node& node, ExperimentConfig& cfg) {
  rd.check_keys(node, {"snr_db", "snapshots", "trials"}, "sweep");
  if (node["snr_db"]) {
    cfg.snr_db = rd.reals(node["snr_db"], "sweep.snr_db");
    for (double s : cfg.snr_db) {
      if (std::isnan(s) || s == -std::numeric_limits<double>::infinity()) {
        rd.fail(node["snr_db"], "sweep.snr_db entries must be finite or +inf");
      }
    }
  }
  if (node["snapshots"]) {
    cfg.snapshots.clear();
    for (long long t : rd.integers(node["snapshots"], "sweep.snapshots")) {
      if (t < 1 || t > 10000000) rd.fail(node["snapshots"], "sweep.snapshots entries must be positive");
      cfg.snapshots.push_back(static_cast<int>(t));
    }
  }
  if (node["trials"]) cfg.trials = positive_int(rd, node["trials"], "sweep.trials");
}

void read_training(const Reader& rd, const YAML::Node& node, TrainingBlock& t) {
  rd.check_keys(node,
                {"theta_min_deg", "theta_max_deg", "theta_step_deg", "snr_db", "trials_per_point", "snapshots",
                 "ranges", "fixed_range_m", "hidden", "epochs", "batch_size", "learning_rate", "beta1", "beta2",
                 "epsilon", "validation_fraction", "mode"},
                "training");
  if (node["theta_min_deg"]) t.theta_min_deg = rd.real(node["theta_min_deg"], "training.theta_min_deg");
  if (node["theta_max_deg"]) t.theta_max_deg = rd.real(node["theta_max_deg"], "training.theta_max_deg");
  if (node["theta_step_deg"]) t.theta_step_deg = rd.real(node["theta_step_deg"], "training.theta_step_deg");
  if (!(t.theta_min_deg >= -90.0 && t.theta_max_deg <= 90.0 && t.theta_min_deg <= t.theta_max_deg)) {
    rd.fail(node, "training angle range must lie within [-90, 90] degrees");
  }
  if (!(t.theta_step_deg > 0.0)) rd.fail(node["theta_step_deg"], "training.theta_step_deg must be positive");
  if (node["snr_db"]) t.snr_db = rd.reals(node["snr_db"], "training.snr_db");
  if (node["trials_per_point"]) t.trials_per_point = positive_int(rd, node["trials_per_point"], "training.trials_per_point");
  if (node["snapshots"]) t.snapshots = positive_int(rd, node["snapshots"], "training.snapshots");
  if (node["ranges"]) {
    const std::string r = rd.text(node["ranges"], "training.ranges");
    if (r == "uniform") {
      t.ranges = RangeSampling::kUniformFresnel;
    } else if (r == "fixed") {
      t.ranges = RangeSampling::kFixed;
    } else {
      rd.fail(node["ranges"], "training.ranges must be 'uniform' or 'fixed'");
    }
  }
  if (node["fixed_range_m"]) {
    t.fixed_range_m = rd.real(node["fixed_range_m"], "training.fixed_range_m");
    if (!(t.fixed_range_m > 0.0)) rd.fail(node["fixed_range_m"], "training.fixed_range_m must be positive");
  }
  if (node["hidden"]) {
    t.train.hidden.clear();
    for (long long h : rd.integers(node["hidden"], "training.hidden")) {
      if (h < 1 || h > 4096) rd.fail(node["hidden"], "training.hidden sizes must be positive");
      t.train.hidden.push_back(static_cast<int>(h));
    }
  }
  if (node["epochs"]) t.train.epochs = positive_int(rd, node["epochs"], "training.epochs");
  if (node["batch_size"]) t.train.batch_size = positive_int(rd, node["batch_size"], "training.batch_size");
  auto positive_real = [&](const char* key, double& out) {
    if (!node[key]) return;
    out = rd.real(node[key], std::string("training.") + key);
    if (!(out > 0.0) || !std::isfinite(out)) rd.fail(node[key], std::string("training.") + key + " must be positive");
  };
  positive_real("learning_rate", t.train.learning_rate);
  positive_real("beta1", t.train.beta1);
  positive_real("beta2", t.train.beta2);
  positive_real("epsilon", t.train.epsilon);
  if (t.train.beta1 >= 1.0 || t.train.beta2 >= 1.0) rd.fail(node, "Adam moment decays must be below 1");
  if (node["validation_fraction"]) {
    t.train.validation_fraction = rd.real(node["validation_fraction"], "training.validation_fraction");
    if (!(t.train.validation_fraction > 0.0 && t.train.validation_fraction < 1.0)) {
      rd.fail(node["validation_fraction"], "training.validation_fraction must lie in (0, 1)");
    }
  }
  if (node["mode"]) {
    const std::string m = rd.text(node["mode"], "training.mode");
    if (m == "sequential") {
      t.train.mode = TrainMode::kSequential;
    } else if (m == "joint") {
      t.train.mode = TrainMode::kJoint;
    } else {
      rd.fail(node["mode"], "training.mode must be 'sequential' or 'joint'");
    }
  }
}

}  // namespace

ArrayConfig ExperimentConfig::array() const { return ArrayConfig::from_grouping(M, Ms, L, carrier_ghz * 1e9); }

BeamformerSetting ExperimentConfig::beamformer() const {
  if (alpha.empty()) return BeamformerSetting::zeros(L);
  return {Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()))};
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  Reader rd(origin);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  ExperimentConfig cfg;
  if (root.IsNull()) return cfg;
  rd.check_keys(root,
                {"array", "emitter", "sweep", "methods", "seed", "output", "regnet_model", "dbscan", "crlb",
                 "training"},
                "top level");

  if (root["array"]) read_array(rd, root["array"], cfg);

  if (const YAML::Node e = root["emitter"]) {
    rd.check_keys(e, {"theta_deg", "range_m"}, "emitter");
    if (e["theta_deg"]) cfg.theta_deg = rd.real(e["theta_deg"], "emitter.theta_deg");
    if (e["range_m"]) cfg.range_m = rd.real(e["range_m"], "emitter.range_m");
    if (!(std::abs(cfg.theta_deg) <= 90.0)) rd.fail(e["theta_deg"], "emitter.theta_deg must lie in [-90, 90]");
    if (!(cfg.range_m > 0.0) || !std::isfinite(cfg.range_m)) rd.fail(e["range_m"], "emitter.range_m must be positive");
  }

  if (root["sweep"]) read_sweep(rd, root["sweep"], cfg);

  if (const YAML::Node m = root["methods"]) {
    if (!m.IsSequence() || m.size() == 0) rd.fail(m, "methods must be a non-empty list");
    cfg.methods.clear();
    for (const auto& item : m) {
      const auto parsed = parse_method(rd.text(item, "method"));
      if (!parsed) rd.fail(item, "unknown method '" + item.Scalar() + "' (msdc, rsd-asd-dbscan, regnet)");
      cfg.methods.push_back(*parsed);
    }
  }

  if (root["seed"]) cfg.seed = rd.unsigned64(root["seed"], "seed");
  if (root["output"]) cfg.output = rd.text(root["output"], "output");
  if (root["regnet_model"]) cfg.regnet_model = rd.text(root["regnet_model"], "regnet_model");

  if (const YAML::Node d = root["dbscan"]) {
    rd.check_keys(d, {"eta", "max_iter", "kappa"}, "dbscan");
    if (d["eta"]) {
      cfg.dbscan.eta = rd.real(d["eta"], "dbscan.eta");
      if (!(cfg.dbscan.eta > 0.0 && cfg.dbscan.eta < 1.0)) rd.fail(d["eta"], "dbscan.eta must lie in (0, 1)");
    }
    if (d["max_iter"]) cfg.dbscan.max_iter = positive_int(rd, d["max_iter"], "dbscan.max_iter");
    if (d["kappa"]) {
      cfg.dbscan.kappa = rd.real(d["kappa"], "dbscan.kappa");
      if (!(cfg.dbscan.kappa >= 1.0)) rd.fail(d["kappa"], "dbscan.kappa must be at least 1");
    }
  }

  if (const YAML::Node c = root["crlb"]) {
    rd.check_keys(c, {"groups"}, "crlb");
    if (c["groups"]) {
      for (long long l : rd.integers(c["groups"], "crlb.groups")) {
        if (l < 1 || (cfg.M / cfg.Ms) % l != 0) {
          rd.fail(c["groups"], "crlb.groups entry " + std::to_string(l) + " does not divide K=" +
                                   std::to_string(cfg.M / cfg.Ms));
        }
        cfg.crlb_groups.push_back(static_cast<int>(l));
      }
    }
  }

  if (root["training"]) read_training(rd, root["training"], cfg.training);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace nfloc
