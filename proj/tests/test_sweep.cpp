#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mudinet/sweep.hpp"

using namespace mudinet;
namespace fs = std::filesystem;

namespace {

std::string small_config_text(const std::string& scene_path, const std::string& methods,
                              const std::string& settings_line) {
  return "scene = " + scene_path + "\n" + settings_line + "\n" +
         "methods = " + methods +
         "\n"
         "seeds = 1\n"
         "dataset_size = 6\n"
         "trajectory_steps = 4\n"
         "epochs = 2\n"
         "batch = 8\n"
         "max_taps = 48\n"
         "attn_dim = 8\n"
         "latent_s = 2\n"
         "latent_d = 2\n"
         "latent_u = 4\n"
         "hidden_width = 12\n"
         "hidden_layers = 1\n";
}

ExperimentConfig config_from_text(const std::string& text) {
  std::istringstream in(text);
  return experiment_from(parse_config(in));
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// results.csv with the wall_s column blanked (wall time legitimately varies).
std::string results_without_wall(const fs::path& p) {
  std::ifstream in(p);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto cut = line.rfind(',');
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}

}  // namespace

TEST_CASE("single-cell sweep emits exactly one row", "[sweep]") {
  const fs::path dir = fresh_dir("mudinet_sweep_single");
  const fs::path scene_file = dir / "scene.txt";
  save_scene(make_two_room_scene(), scene_file.string());

  const auto cfg =
      config_from_text(small_config_text(scene_file.string(), "constant", "snr_list = 10"));
  const SweepResult result = run_sweep(cfg, 42, (dir / "out").string());
  REQUIRE(result.rows.size() == 1);
  CHECK_FALSE(result.rows[0].failed);
  CHECK(result.rows[0].method == "constant");
  CHECK(result.rows[0].setting == "snr10");
  CHECK(result.rows[0].me_m > 0.0);
  CHECK(fs::exists(result.results_csv));
  CHECK(fs::exists(result.cdf_csv));
  REQUIRE(result.dataset_files.size() == 1);
  CHECK(fs::exists(result.dataset_files[0]));

  std::ifstream in(result.results_csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "setting,method,seed,me_m,rmse_m,epochs,wall_s");
  fs::remove_all(dir);
}

TEST_CASE("methods share one dataset file per setting", "[sweep]") {
  const fs::path dir = fresh_dir("mudinet_sweep_shared");
  const fs::path scene_file = dir / "scene.txt";
  save_scene(make_two_room_scene(), scene_file.string());

  const auto cfg = config_from_text(
      small_config_text(scene_file.string(), "constant,mlp", "snr_list = 10"));
  const SweepResult result = run_sweep(cfg, 7, (dir / "out").string());
  REQUIRE(result.rows.size() == 2);
  REQUIRE(result.dataset_files.size() == 1);  // one dataset for both methods
  const std::string bytes = file_bytes(result.dataset_files[0]);

  // A re-run regenerates the identical dataset file.
  const SweepResult again = run_sweep(cfg, 7, (dir / "out2").string());
  CHECK(file_bytes(again.dataset_files[0]) == bytes);
  fs::remove_all(dir);
}

TEST_CASE("sweep reruns and thread counts reproduce metrics bit-identically", "[sweep]") {
  const fs::path dir = fresh_dir("mudinet_sweep_determinism");
  const fs::path scene_file = dir / "scene.txt";
  save_scene(make_two_room_scene(), scene_file.string());

  std::string text = small_config_text(scene_file.string(), "mlp,constant",
                                       "snr_list = 0, 20");
  const auto serial = config_from_text(text + "jobs = 1\n");
  const auto parallel = config_from_text(text + "jobs = 2\n");

  const SweepResult a = run_sweep(serial, 99, (dir / "a").string());
  const SweepResult b = run_sweep(serial, 99, (dir / "b").string());
  const SweepResult c = run_sweep(parallel, 99, (dir / "c").string());
  REQUIRE(a.rows.size() == 4);

  const std::string ra = results_without_wall(a.results_csv);
  CHECK(results_without_wall(b.results_csv) == ra);
  CHECK(results_without_wall(c.results_csv) == ra);
  CHECK(file_bytes(a.cdf_csv) == file_bytes(b.cdf_csv));
  CHECK(file_bytes(a.cdf_csv) == file_bytes(c.cdf_csv));
  fs::remove_all(dir);
}

TEST_CASE("per-cell failures are recorded and the sweep continues", "[sweep]") {
  const fs::path dir = fresh_dir("mudinet_sweep_failure");
  const fs::path scene_file = dir / "scene.txt";
  save_scene(make_two_room_scene(), scene_file.string());

  const auto cfg = config_from_text(
      small_config_text(scene_file.string(), "bogus,constant", "snr_list = 10"));
  const SweepResult result = run_sweep(cfg, 3, (dir / "out").string());
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].failed);
  CHECK(std::isnan(result.rows[0].me_m));
  CHECK_FALSE(result.rows[1].failed);

  std::ifstream log(dir / "out" / "sweep.log");
  const std::string log_text((std::istreambuf_iterator<char>(log)), {});
  CHECK(log_text.find("unknown method: bogus") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("bandwidth sweeps run noise-free at the configured power", "[sweep]") {
  const fs::path dir = fresh_dir("mudinet_sweep_bw");
  const fs::path scene_file = dir / "scene.txt";
  save_scene(make_two_room_scene(), scene_file.string());

  const auto cfg = config_from_text(
      small_config_text(scene_file.string(), "constant", "bandwidth_list = 50e6, 100e6") +
      "noise = off\n");
  const SweepResult result = run_sweep(cfg, 11, (dir / "out").string());
  REQUIRE(result.rows.size() == 2);
  CHECK(result.rows[0].setting == "bw5e+07");
  CHECK(result.rows[1].setting == "bw1e+08");
  // Noise-free datasets record no SNR target.
  const DatasetSplit split = load_dataset(result.dataset_files[0]);
  CHECK(std::isnan(split.train[0].snr_db));
  fs::remove_all(dir);
}
