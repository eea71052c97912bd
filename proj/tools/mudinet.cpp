// Command-line front end: scene generation, dataset synthesis, training,
// evaluation, and experiment sweeps.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "mudinet/baselines.hpp"
#include "mudinet/config.hpp"
#include "mudinet/dataset_io.hpp"
#include "mudinet/metrics.hpp"
#include "mudinet/model.hpp"
#include "mudinet/scene_io.hpp"
#include "mudinet/sweep.hpp"

namespace fs = std::filesystem;
using namespace mudinet;

namespace {

std::uint64_t resolve_seed(std::optional<std::uint64_t> cli_seed) {
  if (cli_seed) return *cli_seed;
  if (const char* env = std::getenv("MUDINET_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

ConfigMap maybe_config(const std::string& path) {
  if (path.empty()) return {};
  return load_config(path);
}

MetricsReport evaluate_checkpoint(const std::string& checkpoint_path, const DatasetSplit& split) {
  const ad::ParamSet all = ad::load_params(checkpoint_path);
  const double kind = checkpoint_kind(all);
  std::vector<std::array<double, 2>> predictions, labels;
  auto collect = [&](auto&& predict) {
    for (const auto& sample : split.test) {
      const auto pred = predict(sample);
      for (std::size_t t = 0; t < sample.steps; ++t) {
        predictions.push_back(pred[t]);
        labels.push_back({static_cast<double>(sample.labels[2 * t]),
                          static_cast<double>(sample.labels[2 * t + 1])});
      }
    }
  };
  if (kind == kKindMudinet) {
    const MudiNet model = load_mudinet_checkpoint(checkpoint_path);
    collect([&](const Sample& s) { return model.predict(s); });
  } else {
    const Baseline model = load_baseline_checkpoint(checkpoint_path);
    collect([&](const Sample& s) { return model.predict(s); });
  }
  return compute_metrics(predictions, labels);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MudiNet indoor-positioning laboratory"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed_opt;
  app.add_option("--seed", seed_opt, "master seed (falls back to MUDINET_SEED, then 0)");

  // gen-scene
  auto* gen_scene = app.add_subcommand("gen-scene", "write a scene description file");
  std::string preset = "two-room";
  std::string scene_out = "scene.txt";
  std::vector<double> region_spec;
  gen_scene->add_option("--preset", preset, "open | single-wall | two-room")
      ->check(CLI::IsMember({"open", "single-wall", "two-room"}));
  gen_scene->add_option("--out", scene_out, "output scene file");
  gen_scene->add_option("--region", region_spec,
                        "append a scatterer region: cx cy sigma_x sigma_y [truncation]")
      ->expected(4, 5);

  // gen-dataset
  auto* gen_dataset = app.add_subcommand("gen-dataset", "synthesize a labeled CIR dataset");
  std::string ds_scene, ds_out = "dataset.mdnt", ds_config;
  std::optional<double> ds_snr;
  std::size_t ds_count = 200;
  gen_dataset->add_option("--scene", ds_scene, "scene file")->required();
  gen_dataset->add_option("--snr", ds_snr, "target SNR in dB (omit for no power control)");
  gen_dataset->add_option("--count", ds_count, "number of trajectories");
  gen_dataset->add_option("--out", ds_out, "output dataset file");
  gen_dataset->add_option("--config", ds_config, "channel/experiment config file");

  // train
  auto* train = app.add_subcommand("train", "train one model on a dataset");
  std::string tr_dataset, tr_method = "mudinet", tr_config, tr_out = "run";
  train->add_option("--dataset", tr_dataset, "dataset file")->required();
  train->add_option("--method", tr_method, "mudinet | mlp | tf")
      ->check(CLI::IsMember({"mudinet", "mlp", "tf"}));
  train->add_option("--config", tr_config, "model/training config file");
  train->add_option("--out", tr_out, "output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset's test split");
  std::string ev_checkpoint, ev_dataset, ev_out;
  eval->add_option("--checkpoint", ev_checkpoint, "checkpoint file")->required();
  eval->add_option("--dataset", ev_dataset, "dataset file")->required();
  eval->add_option("--out", ev_out, "output directory for metrics.csv and cdf.csv");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an SNR or bandwidth sweep");
  std::string sw_config, sw_out = "sweep_out";
  sweep->add_option("--config", sw_config, "experiment config file")->required();
  sweep->add_option("--out", sw_out, "output directory");

  // dump-cir
  auto* dump = app.add_subcommand("dump-cir", "synthesize one CIR and dump it as binary");
  std::string dc_scene, dc_out = "cir.bin", dc_config;
  double dc_x = 0.0, dc_y = 0.0;
  dump->add_option("--scene", dc_scene, "scene file")->required();
  dump->add_option("--x", dc_x, "UE x (m)")->required();
  dump->add_option("--y", dc_y, "UE y (m)")->required();
  dump->add_option("--out", dc_out, "output file");
  dump->add_option("--config", dc_config, "channel config file");

  CLI11_PARSE(app, argc, argv);
  const std::uint64_t seed = resolve_seed(seed_opt);

  try {
    if (gen_scene->parsed()) {
      Scene scene;
      if (preset == "open") {
        scene = make_open_scene();
      } else if (preset == "single-wall") {
        scene = make_single_wall_scene();
      } else {
        scene = make_two_room_scene();
      }
      if (!region_spec.empty()) {
        ScattererRegion r{{region_spec[0], region_spec[1]}, region_spec[2], region_spec[3],
                          region_spec.size() > 4 ? region_spec[4] : 3.0};
        scene.regions.push_back(r);
      }
      validate_scene(scene);
      save_scene(scene, scene_out);
      std::cout << "wrote " << scene_out << " (" << scene.walls.size() << " walls, "
                << scene.regions.size() << " regions)\n";
    } else if (gen_dataset->parsed()) {
      const ConfigMap cfg = maybe_config(ds_config);
      const ChannelParams params = channel_params_from(cfg);
      const Scene scene = load_scene(ds_scene);
      const std::size_t steps = cfg_size(cfg, "trajectory_steps", 110);
      SynthesisOptions synth;
      synth.include_noise = cfg_bool(cfg, "noise", true);
      auto samples = generate_samples(scene, params, ds_count, steps, ds_snr, seed, synth);
      RandomStream split_rng(derive_seed(seed, 0x5e17));
      const double train_frac = cfg_double(cfg, "train_frac", 0.8);
      const DatasetSplit split = normalize_split(std::move(samples), train_frac, split_rng);
      save_dataset(split, ds_out);
      std::cout << "wrote " << ds_out << " (train " << split.train.size() << ", test "
                << split.test.size() << ", T " << steps << ", taps " << params.max_taps
                << ")\n";
    } else if (train->parsed()) {
      const ConfigMap cfg = maybe_config(tr_config);
      const DatasetSplit split = load_dataset(tr_dataset);
      const std::size_t taps = split.train.front().taps;
      const std::size_t steps = split.train.front().steps;
      const std::size_t epochs = cfg_size(cfg, "epochs", 300);
      const std::size_t batch = cfg_size(cfg, "batch", 128);
      fs::create_directories(tr_out);
      const std::string ckpt = (fs::path(tr_out) / "checkpoint.mdpw").string();
      const std::string hist = (fs::path(tr_out) / "history.csv").string();
      TrainResult result;
      if (tr_method == "mudinet") {
        MudiNet model(model_config_from(cfg, taps, steps), seed);
        result = model.train(split, epochs, batch, derive_seed(seed, 1));
        save_checkpoint(model, ckpt);
      } else {
        BaselineConfig bc;
        bc.kind = tr_method == "mlp" ? BaselineKind::Mlp : BaselineKind::Transformer;
        bc.base = model_config_from(cfg, taps, steps);
        Baseline model(bc, seed);
        result = model.train(split, epochs, batch, derive_seed(seed, 1));
        save_checkpoint(model, ckpt);
      }
      write_history_csv(result.history, hist);
      std::cout << "trained " << tr_method << " for " << result.history.size() << " epochs"
                << (result.diverged ? " (diverged, rolled back)" : "") << "\n"
                << "checkpoint: " << ckpt << "\nhistory: " << hist << "\n";
    } else if (eval->parsed()) {
      const DatasetSplit split = load_dataset(ev_dataset);
      const MetricsReport report = evaluate_checkpoint(ev_checkpoint, split);
      std::cout << "me_m " << report.me_m << "\nrmse_m " << report.rmse_m << "\n";
      if (!ev_out.empty()) {
        fs::create_directories(ev_out);
        std::ofstream metrics(fs::path(ev_out) / "metrics.csv");
        metrics << "me_m,rmse_m\n" << report.me_m << ',' << report.rmse_m << '\n';
        std::ofstream cdf(fs::path(ev_out) / "cdf.csv");
        cdf << "error_m,cum_prob\n";
        for (const auto& [e, p] : report.cdf) cdf << e << ',' << p << '\n';
        std::cout << "wrote " << ev_out << "/metrics.csv and cdf.csv\n";
      }
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = experiment_from(load_config(sw_config));
      const SweepResult result = run_sweep(cfg, seed, sw_out);
      std::size_t failed = 0;
      for (const auto& r : result.rows) failed += r.failed ? 1 : 0;
      std::cout << "sweep complete: " << result.rows.size() << " rows (" << failed
                << " failed)\nresults: " << result.results_csv << "\ncdf: " << result.cdf_csv
                << "\n";
      if (failed > 0) return 2;
    } else if (dump->parsed()) {
      const ConfigMap cfg = maybe_config(dc_config);
      const ChannelParams params = channel_params_from(cfg);
      const Scene scene = load_scene(dc_scene);
      RandomStream rng(seed);
      const CIRVector cir = synthesize_cir(scene, {dc_x, dc_y}, params, rng);
      save_cir(cir, dc_out);
      std::cout << "wrote " << dc_out << " (" << cir.taps.size() << " taps, "
                << cir.tap_spacing_s << " s spacing)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
