#include "nfloc/harness/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "nfloc/crlb.hpp"
#include "nfloc/errors.hpp"
#include "nfloc/harness/csv.hpp"
#include "nfloc/parallel.hpp"
#include "nfloc/pipeline.hpp"
#include "nfloc/rng.hpp"

namespace nfloc {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::pair<double, double> crlb_std(const ArrayConfig& cfg, const EmitterPosition& pos, double snr_db, int T) {
  if (std::isinf(snr_db) && snr_db > 0) return {0.0, 0.0};
  try {
    const CrlbReport rep = crlb(cfg, pos, std::pow(10.0, snr_db / 10.0), T);
    return {rad2deg(std::sqrt(rep.crlb_theta)), std::sqrt(rep.crlb_r)};
  } catch (const SingularFim&) {
    return {std::nan(""), std::nan("")};
  }
}

TrialResult run_trial(const ExperimentConfig& cfg, Method method, std::size_t snr_index, std::size_t t_index,
                      std::size_t trial, const RegNetParams* model) {
  const ArrayConfig array = cfg.array();
  const EmitterPosition pos = cfg.emitter();
  const std::uint64_t seed =
      substream_seed(cfg.seed, {static_cast<std::uint64_t>(method), snr_index, t_index, trial});
  const GroupSnapshots snaps = synthesize(array, pos, cfg.beamformer(), cfg.snr_db.at(snr_index),
                                          cfg.snapshots.at(t_index), seed, {1.0, cfg.wavefront});
  const std::vector<AmbiguousAngleSet> sets = estimate_ambiguous_sets(snaps, array);
  const int true_coeff = nearest_coefficient(sets.front(), pos.theta);
  const Estimate e = locate(method, array, sets, model, cfg.dbscan);
  return {e.theta, e.range, e.coeff == true_coeff};
}

std::string run_locate(const ExperimentConfig& cfg, const RegNetParams* model) {
  const ArrayConfig array = cfg.array();
  const EmitterPosition pos = cfg.emitter();
  const double snr = cfg.snr_db.front();
  const int T = cfg.snapshots.front();
  const auto [sd_theta, sd_range] = crlb_std(array, pos, snr, T);

  std::ostringstream os;
  os << "truth theta_deg=" << fixed6(cfg.theta_deg) << " range_m=" << fixed6(cfg.range_m)
     << " snr_db=" << format_number(snr) << " snapshots=" << T << '\n';
  os << "crlb_std theta_deg=" << fixed6(sd_theta) << " range_m=" << fixed6(sd_range) << '\n';
  for (Method m : cfg.methods) {
    const TrialResult r = run_trial(cfg, m, 0, 0, 0, model);
    os << method_name(m) << " theta_deg=" << fixed6(rad2deg(r.theta)) << " range_m=" << fixed6(r.range)
       << " resolved=" << (r.success ? "yes" : "no") << '\n';
  }
  return os.str();
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const RegNetParams* model, int workers) {
  const ArrayConfig array = cfg.array();
  const EmitterPosition pos = cfg.emitter();
  std::vector<SweepRow> rows;
  for (Method m : cfg.methods) {
    if (m == Method::kRegNet && model == nullptr) throw ConfigError("method regnet needs a model (regnet_model)");
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
      for (std::size_t ti = 0; ti < cfg.snapshots.size(); ++ti) {
        std::vector<TrialResult> results(cfg.trials);
        parallel_for(results.size(), workers, [&](std::size_t k) {
          try {
            results[k] = run_trial(cfg, m, si, ti, k, model);
          } catch (const NumericalError&) {
            results[k].failed = true;
          }
        });

        double se_theta = 0.0, se_range = 0.0;
        int hits = 0, failures = 0;
        for (const TrialResult& r : results) {
          if (r.failed) {
            ++failures;
            continue;
          }
          const double dt = rad2deg(r.theta - pos.theta);
          const double dr = r.range - pos.range;
          se_theta += dt * dt;
          se_range += dr * dr;
          hits += r.success ? 1 : 0;
        }
        SweepRow row;
        row.method = m;
        row.snr_db = cfg.snr_db[si];
        row.snapshots = cfg.snapshots[ti];
        row.trials = cfg.trials;
        const int completed = cfg.trials - failures;
        row.rmse_theta_deg = completed > 0 ? std::sqrt(se_theta / completed) : std::nan("");
        row.rmse_r_m = completed > 0 ? std::sqrt(se_range / completed) : std::nan("");
        row.failures = failures;
        row.success_rate = static_cast<double>(hits) / cfg.trials;
        std::tie(row.crlb_theta_deg, row.crlb_r_m) = crlb_std(array, pos, row.snr_db, row.snapshots);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const SweepRow& r : rows) {
    out += join_row({std::string(method_name(r.method)), format_number(r.snr_db), std::to_string(r.snapshots),
                     std::to_string(r.trials), format_number(r.rmse_theta_deg), format_number(r.rmse_r_m),
                     format_number(r.success_rate), format_number(r.crlb_theta_deg), format_number(r.crlb_r_m)});
  }
  return out;
}

std::vector<CrlbRow> run_crlb_sweep(const ExperimentConfig& cfg) {
  const int K = cfg.M / cfg.Ms;
  std::vector<int> groups = cfg.crlb_groups;
  if (groups.empty()) {
    for (int G : valid_group_sizes(cfg.M, cfg.Ms)) groups.insert(groups.begin(), K / G);
  }
  const EmitterPosition pos = cfg.emitter();
  const int T = cfg.snapshots.front();
  std::vector<CrlbRow> rows;
  for (int L : groups) {
    const ArrayConfig array = ArrayConfig::from_grouping(cfg.M, cfg.Ms, L, cfg.carrier_ghz * 1e9);
    for (double snr : cfg.snr_db) {
      CrlbRow row{L, array.G, snr, std::nullopt, std::nullopt};
      if (std::isfinite(snr)) {
        try {
          const CrlbReport rep = crlb(array, pos, std::pow(10.0, snr / 10.0), T);
          row.crlb_theta_deg = rad2deg(std::sqrt(rep.crlb_theta));
          row.crlb_r_m = std::sqrt(rep.crlb_r);
        } catch (const SingularFim&) {
        }
      } else {
        row.crlb_theta_deg = 0.0;
        row.crlb_r_m = 0.0;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::string crlb_csv(const std::vector<CrlbRow>& rows) {
  std::string out = std::string(kCrlbHeader) + "\n";
  for (const CrlbRow& r : rows) {
    out += join_row({std::to_string(r.L), std::to_string(r.G), format_number(r.snr_db),
                     r.crlb_theta_deg ? format_number(*r.crlb_theta_deg) : "singular",
                     r.crlb_r_m ? format_number(*r.crlb_r_m) : "singular"});
  }
  return out;
}

std::vector<TrainingSample> run_gen_dataset(const ExperimentConfig& cfg, int workers) {
  const TrainingBlock& t = cfg.training;
  std::vector<double> grid;
  const long count = static_cast<long>(std::floor((t.theta_max_deg - t.theta_min_deg) / t.theta_step_deg + 1e-9)) + 1;
  for (long k = 0; k < count; ++k) grid.push_back(deg2rad(t.theta_min_deg + k * t.theta_step_deg));
  DatasetOptions opt;
  opt.snapshots = t.snapshots;
  opt.ranges = t.ranges;
  opt.fixed_range = t.fixed_range_m;
  opt.wavefront = cfg.wavefront;
  opt.workers = workers;
  return generate_dataset(cfg.array(), grid, t.snr_db, t.trials_per_point, cfg.seed, opt);
}

std::string dataset_csv(const std::vector<TrainingSample>& data, int groups, int ambiguity) {
  std::vector<std::string> header;
  for (int k = 0; k < groups * ambiguity; ++k) header.push_back("input_" + std::to_string(k));
  for (int l = 0; l < groups; ++l) header.push_back("target_group_" + std::to_string(l));
  header.push_back("target_theta");
  std::string out = join_row(header);
  for (const TrainingSample& s : data) {
    std::vector<std::string> cells;
    for (Eigen::Index k = 0; k < s.input.size(); ++k) cells.push_back(format_number(s.input(k), 17));
    for (Eigen::Index l = 0; l < s.target_groups.size(); ++l) cells.push_back(format_number(s.target_groups(l), 17));
    cells.push_back(format_number(s.target_theta, 17));
    out += join_row(cells);
  }
  return out;
}

std::vector<TrainingSample> parse_dataset_csv(const std::string& text, int groups, int ambiguity) {
  std::istringstream in(text);
  std::string line;
  const int width = groups * ambiguity + groups + 1;
  if (!std::getline(in, line)) throw ConfigError("dataset file is empty");
  std::vector<TrainingSample> data;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("dataset line " + std::to_string(line_no) + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(v.size()) != width) {
      throw ConfigError("dataset line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " columns for L=" + std::to_string(groups) + ", Ms=" + std::to_string(ambiguity));
    }
    TrainingSample s;
    s.input = Eigen::Map<Eigen::VectorXd>(v.data(), groups * ambiguity);
    s.target_groups = Eigen::Map<Eigen::VectorXd>(v.data() + groups * ambiguity, groups);
    s.target_theta = v.back();
    data.push_back(std::move(s));
  }
  if (data.empty()) throw ConfigError("dataset has no samples");
  return data;
}

TrainResult run_train(const ExperimentConfig& cfg, const std::vector<TrainingSample>& data) {
  TrainConfig tc = cfg.training.train;
  tc.seed = cfg.seed;
  return train(data, cfg.L, tc);
}

std::string loss_csv(const TrainResult& result) {
  std::string out = "epoch,train_mlnn,train_fused,val_mlnn,val_fused\n";
  for (const EpochLoss& e : result.history) {
    out += join_row({std::to_string(e.epoch), format_number(e.train.mlnn), format_number(e.train.fused),
                     format_number(e.validation.mlnn), format_number(e.validation.fused)});
  }
  return out;
}

void check_model_fits(const RegNetParams& model, const ExperimentConfig& cfg) {
  const std::vector<int> dims = model.mlnn.dims();
  if (dims.size() < 2 || dims.front() != cfg.L * cfg.Ms || dims.back() != cfg.L ||
      model.perceptron.weight.size() != cfg.L) {
    const int in = dims.empty() ? 0 : dims.front();
    const int out = dims.empty() ? 0 : dims.back();
    throw ConfigError("model was trained for " + std::to_string(in) + " inputs and " + std::to_string(out) +
                      " groups, but the array has L=" + std::to_string(cfg.L) + ", Ms=" + std::to_string(cfg.Ms) +
                      " (" + std::to_string(cfg.L * cfg.Ms) + " inputs)");
  }
}

}  // namespace nfloc
