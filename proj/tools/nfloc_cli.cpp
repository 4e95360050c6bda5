#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nfloc/errors.hpp"
#include "nfloc/harness/config.hpp"
#include "nfloc/harness/csv.hpp"
#include "nfloc/harness/experiments.hpp"
#include "nfloc/regnet.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "experiment YAML file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "output path (stdout when omitted)");
  cmd->add_option("--seed", f.seed, "master seed, overrides the config");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials per point, overrides the config")->check(CLI::PositiveNumber);
  cmd->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
}

nfloc::ExperimentConfig load(const CommonFlags& f) {
  nfloc::ExperimentConfig cfg = nfloc::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (!f.out.empty()) cfg.output = f.out;
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw nfloc::ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<nfloc::RegNetParams> maybe_model(const nfloc::ExperimentConfig& cfg, const std::string& path,
                                               bool required) {
  const std::string p = path.empty() ? cfg.regnet_model : path;
  if (p.empty()) {
    if (required) throw nfloc::ConfigError("no model file given (--model or regnet_model)");
    return std::nullopt;
  }
  nfloc::RegNetParams model = nfloc::load_model(p);
  nfloc::check_model_fits(model, cfg);
  return model;
}

void warn_outside_fresnel(const nfloc::ExperimentConfig& cfg) {
  const nfloc::FresnelInterval fr = nfloc::fresnel_interval(cfg.array());
  if (cfg.range_m < fr.r_min || cfg.range_m > fr.r_max) {
    std::cerr << "warning: emitter range " << cfg.range_m << " m is outside the Fresnel interval [" << fr.r_min << ", "
              << fr.r_max << "] m\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field emitter localization with a grouped hybrid array"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string model_path;
  std::string dataset_path;
  std::string loss_path;

  auto* locate = app.add_subcommand("locate", "single trial per method, printed with the bound");
  add_common(locate, flags);
  locate->add_option("--model", model_path, "trained network file");

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo RMSE sweep to CSV");
  add_common(sweep, flags);
  sweep->add_option("--model", model_path, "trained network file");

  auto* crlb = app.add_subcommand("crlb-sweep", "bound versus SNR for several groupings");
  add_common(crlb, flags);

  auto* gen = app.add_subcommand("gen-dataset", "generate network training samples to CSV");
  add_common(gen, flags);

  auto* train = app.add_subcommand("train", "train the network and write the model file");
  add_common(train, flags);
  train->add_option("--dataset", dataset_path, "training CSV from gen-dataset (generated when omitted)");
  train->add_option("--loss", loss_path, "per-epoch loss CSV (default: <model>.loss.csv)");

  auto* eval = app.add_subcommand("eval", "sweep with a trained network");
  add_common(eval, flags);
  eval->add_option("--model", model_path, "trained network file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    nfloc::ExperimentConfig cfg = load(flags);
    warn_outside_fresnel(cfg);

    if (*locate) {
      const auto model = maybe_model(cfg, model_path, false);
      for (auto m : cfg.methods) {
        if (m == nfloc::Method::kRegNet && !model) throw nfloc::ConfigError("method regnet needs a model");
      }
      nfloc::write_text(cfg.output, nfloc::run_locate(cfg, model ? &*model : nullptr));
    } else if (*sweep || *eval) {
      const auto model = maybe_model(cfg, model_path, static_cast<bool>(*eval));
      if (*eval && std::find(cfg.methods.begin(), cfg.methods.end(), nfloc::Method::kRegNet) == cfg.methods.end()) {
        cfg.methods.push_back(nfloc::Method::kRegNet);
      }
      const auto rows = nfloc::run_sweep(cfg, model ? &*model : nullptr, flags.workers);
      for (const auto& r : rows) {
        if (r.failures > 0) {
          std::cerr << "warning: " << nfloc::method_name(r.method) << " at snr_db=" << r.snr_db
                    << " snapshots=" << r.snapshots << ": " << r.failures << " of " << r.trials
                    << " trials gave no estimate\n";
        }
      }
      nfloc::write_text(cfg.output, nfloc::sweep_csv(rows));
    } else if (*crlb) {
      const auto rows = nfloc::run_crlb_sweep(cfg);
      for (const auto& r : rows) {
        if (!r.crlb_theta_deg) std::cerr << "warning: singular Fisher matrix for L=" << r.L << "\n";
      }
      nfloc::write_text(cfg.output, nfloc::crlb_csv(rows));
    } else if (*gen) {
      const auto data = nfloc::run_gen_dataset(cfg, flags.workers);
      nfloc::write_text(cfg.output, nfloc::dataset_csv(data, cfg.L, cfg.Ms));
    } else if (*train) {
      const std::string model_out = flags.out.empty() ? cfg.regnet_model : flags.out;
      if (model_out.empty()) throw nfloc::ConfigError("no model output path (--out or regnet_model)");
      const auto data = dataset_path.empty() ? nfloc::run_gen_dataset(cfg, flags.workers)
                                             : nfloc::parse_dataset_csv(read_file(dataset_path), cfg.L, cfg.Ms);
      const nfloc::TrainResult result = nfloc::run_train(cfg, data);
      nfloc::save_model(result.params, model_out);
      nfloc::write_text(loss_path.empty() ? model_out + ".loss.csv" : loss_path, nfloc::loss_csv(result));
    }
  } catch (const nfloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nfloc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
