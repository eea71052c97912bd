#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "mudinet/baselines.hpp"
#include "mudinet/config.hpp"
#include "mudinet/dataset_io.hpp"
#include "mudinet/metrics.hpp"
#include "mudinet/model.hpp"
#include "mudinet/scene_io.hpp"

namespace mudinet {

struct SweepRow {
  std::string setting;
  std::string method;
  std::size_t seed_index = 0;
  double me_m = 0.0;
  double rmse_m = 0.0;
  std::size_t epochs = 0;
  double wall_s = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;      // fixed (setting, method, seed) order
  std::vector<std::string> dataset_files;
  std::string results_csv;
  std::string cdf_csv;
};

namespace sweepdetail {

inline std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_setting(SweepAxis axis, double v) {
  char buf[64];
  if (axis == SweepAxis::Snr) {
    std::snprintf(buf, sizeof(buf), "snr%g", v);
  } else {
    std::snprintf(buf, sizeof(buf), "bw%g", v);
  }
  return buf;
}

struct CellOutcome {
  SweepRow row;
  std::vector<std::pair<double, double>> cdf;
  std::vector<EpochStats> history;
};

// Test-set predictions pooled over every sample and step.
template <class PredictFn>
MetricsReport evaluate(const DatasetSplit& split, PredictFn&& predict) {
  std::vector<std::array<double, 2>> predictions;
  std::vector<std::array<double, 2>> labels;
  for (const auto& sample : split.test) {
    const auto pred = predict(sample);
    for (std::size_t t = 0; t < sample.steps; ++t) {
      predictions.push_back(pred[t]);
      labels.push_back({static_cast<double>(sample.labels[2 * t]),
                        static_cast<double>(sample.labels[2 * t + 1])});
    }
  }
  return compute_metrics(predictions, labels);
}

}  // namespace sweepdetail

// One (setting, method, seed) cell: train on the shared per-setting dataset,
// evaluate on its test split.
inline sweepdetail::CellOutcome run_sweep_cell(const ExperimentConfig& cfg,
                                               const DatasetSplit& split,
                                               const std::string& setting_label,
                                               const std::string& method,
                                               std::size_t seed_index,
                                               std::uint64_t cell_seed) {
  sweepdetail::CellOutcome out;
  out.row.setting = setting_label;
  out.row.method = method;
  out.row.seed_index = seed_index;
  out.row.epochs = cfg.epochs;
  const auto start = std::chrono::steady_clock::now();
  try {
    const std::size_t taps = split.train.front().taps;
    const std::size_t steps = split.train.front().steps;
    MetricsReport report;
    if (method == "mudinet") {
      MudiNet model(model_config_from(cfg.raw, taps, steps), cell_seed);
      const TrainResult tr = model.train(split, cfg.epochs, cfg.batch, derive_seed(cell_seed, 1));
      out.history = tr.history;
      report = sweepdetail::evaluate(split, [&](const Sample& s) { return model.predict(s); });
    } else if (method == "mlp" || method == "tf") {
      BaselineConfig bc;
      bc.kind = method == "mlp" ? BaselineKind::Mlp : BaselineKind::Transformer;
      bc.base = model_config_from(cfg.raw, taps, steps);
      Baseline model(bc, cell_seed);
      const TrainResult tr = model.train(split, cfg.epochs, cfg.batch, derive_seed(cell_seed, 1));
      out.history = tr.history;
      report = sweepdetail::evaluate(split, [&](const Sample& s) { return model.predict(s); });
    } else if (method == "constant") {
      const auto mean = constant_mean_predictor(split.train);
      report = sweepdetail::evaluate(split, [&](const Sample& s) {
        return std::vector<std::array<double, 2>>(s.steps, mean);
      });
    } else {
      throw std::runtime_error("unknown method: " + method);
    }
    out.row.me_m = report.me_m;
    out.row.rmse_m = report.rmse_m;
    out.cdf = std::move(report.cdf);
  } catch (const std::exception& e) {
    out.row.failed = true;
    out.row.error = e.what();
    out.row.me_m = std::nan("");
    out.row.rmse_m = std::nan("");
  }
  out.row.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Full sweep: one shared dataset per setting, every method and seed trained
// against it. Cells run on a small thread pool; results merge in the fixed
// config order, so re-running with identical seeds reproduces every metric
// regardless of scheduling. Per-cell failures are recorded and the sweep
// continues.
inline SweepResult run_sweep(const ExperimentConfig& cfg, std::uint64_t master_seed,
                             const std::string& out_dir) {
  namespace fs = std::filesystem;
  const Scene scene = load_scene(cfg.scene_path);
  fs::create_directories(out_dir);

  SweepResult result;
  std::ofstream log(fs::path(out_dir) / "sweep.log");

  // Stage 1: one dataset per setting, shared by every method at that setting.
  std::vector<std::shared_ptr<const DatasetSplit>> datasets;
  for (std::size_t si = 0; si < cfg.settings.size(); ++si) {
    ChannelParams params = cfg.channel;
    std::optional<double> snr;
    SynthesisOptions synth;
    if (cfg.axis == SweepAxis::Snr) {
      snr = cfg.settings[si];
    } else {
      params.bandwidth_hz = cfg.settings[si];
    }
    synth.include_noise = cfg.noise;
    if (!cfg.noise) snr.reset();  // noise-free runs use the configured tx power

    const std::uint64_t data_seed = derive_seed(master_seed, 0xda7a0000ull + si);
    auto samples = generate_samples(scene, params, cfg.dataset_size, cfg.trajectory_steps, snr,
                                    data_seed, synth);
    RandomStream split_rng(derive_seed(data_seed, 0x5e17));
    auto split = std::make_shared<DatasetSplit>(
        normalize_split(std::move(samples), cfg.train_frac, split_rng));

    const std::string label = sweepdetail::format_setting(cfg.axis, cfg.settings[si]);
    const std::string file = (fs::path(out_dir) / ("dataset_" + label + ".mdnt")).string();
    save_dataset(*split, file);
    result.dataset_files.push_back(file);
    log << "dataset " << label << " -> " << file << " (train " << split->train.size()
        << ", test " << split->test.size() << ")\n";
    datasets.push_back(std::move(split));
  }

  // Stage 2: enumerate cells in fixed order; run them on the pool.
  struct Cell {
    std::size_t setting_index;
    std::size_t method_index;
    std::size_t seed_index;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t si = 0; si < cfg.settings.size(); ++si) {
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      for (std::size_t ki = 0; ki < cfg.seeds; ++ki) {
        const std::uint64_t cell_id =
            (si * cfg.methods.size() + mi) * cfg.seeds + ki;
        cells.push_back({si, mi, ki, derive_seed(master_seed, 0xce110000ull + cell_id)});
      }
    }
  }

  std::vector<sweepdetail::CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min<std::size_t>(std::max<std::size_t>(cfg.jobs, 1),
                                                    cells.size());
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      outcomes[i] = run_sweep_cell(
          cfg, *datasets[cell.setting_index],
          sweepdetail::format_setting(cfg.axis, cfg.settings[cell.setting_index]),
          cfg.methods[cell.method_index], cell.seed_index, cell.seed);
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Stage 3: ordered merge.
  result.results_csv = (fs::path(out_dir) / "results.csv").string();
  result.cdf_csv = (fs::path(out_dir) / "cdf.csv").string();
  std::ofstream rows_out(result.results_csv);
  std::ofstream cdf_out(result.cdf_csv);
  rows_out << "setting,method,seed,me_m,rmse_m,epochs,wall_s\n";
  cdf_out << "setting,method,seed,error_m,cum_prob\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& o = outcomes[i];
    rows_out << o.row.setting << ',' << o.row.method << ',' << o.row.seed_index << ','
             << sweepdetail::format_full(o.row.me_m) << ','
             << sweepdetail::format_full(o.row.rmse_m) << ',' << o.row.epochs << ','
             << sweepdetail::format_full(o.row.wall_s) << '\n';
    for (const auto& [err, prob] : o.cdf) {
      cdf_out << o.row.setting << ',' << o.row.method << ',' << o.row.seed_index << ','
              << sweepdetail::format_full(err) << ',' << sweepdetail::format_full(prob) << '\n';
    }
    if (!o.history.empty()) {
      const std::string hist = (fs::path(out_dir) / ("history_" + o.row.setting + "_" +
                                                     o.row.method + "_s" +
                                                     std::to_string(o.row.seed_index) + ".csv"))
                                   .string();
      write_history_csv(o.history, hist);
    }
    if (o.row.failed) {
      log << "cell (" << o.row.setting << ", " << o.row.method << ", seed "
          << o.row.seed_index << ") failed: " << o.row.error << "\n";
    }
    result.rows.push_back(o.row);
  }
  return result;
}

}  // namespace mudinet
