#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "mudinet/config.hpp"

using namespace mudinet;

TEST_CASE("config parser handles key=value with comments", "[config]") {
  std::istringstream in(
      "# experiment\n"
      "bandwidth_hz = 50e6\n"
      "max_taps=64   # small grid\n"
      "\n"
      "methods = mudinet, mlp\n"
      "snr_list = -10, 0, 20\n"
      "noise = on\n");
  const ConfigMap m = parse_config(in);
  CHECK(cfg_double(m, "bandwidth_hz", 0.0) == 50e6);
  CHECK(cfg_size(m, "max_taps", 0) == 64);
  CHECK(cfg_size(m, "missing", 7) == 7);
  CHECK(cfg_bool(m, "noise", false));
  const auto methods = cfg_string_list(m, "methods", {});
  REQUIRE(methods == std::vector<std::string>{"mudinet", "mlp"});
  const auto snrs = cfg_list(m, "snr_list");
  REQUIRE(snrs == std::vector<double>{-10.0, 0.0, 20.0});
}

TEST_CASE("config parser rejects malformed lines", "[config]") {
  {
    std::istringstream in("novalue\n");
    CHECK_THROWS_WITH(parse_config(in), Catch::Matchers::ContainsSubstring("key = value"));
  }
  {
    std::istringstream in("= 3\n");
    CHECK_THROWS_WITH(parse_config(in), Catch::Matchers::ContainsSubstring("empty key"));
  }
  {
    std::istringstream in("bandwidth_hz = fast\n");
    const ConfigMap m = parse_config(in);
    CHECK_THROWS_WITH(cfg_double(m, "bandwidth_hz", 0.0),
                      Catch::Matchers::ContainsSubstring("not a number"));
  }
  {
    std::istringstream in("noise = maybe\n");
    const ConfigMap m = parse_config(in);
    CHECK_THROWS_AS(cfg_bool(m, "noise", true), std::runtime_error);
  }
}

TEST_CASE("channel params from config mirror the parameter table", "[config]") {
  std::istringstream in(
      "bandwidth_hz = 100e6\n"
      "sampling_factor = 4\n"
      "reflection_factor = 0.25\n"
      "carrier_hz = 2.4e9\n"
      "tx_power = 1\n"
      "background_noise = 1e-10\n"
      "spread_gain_db = 20\n"
      "max_taps = 300\n"
      "power_convention = bistatic-product\n");
  const ChannelParams p = channel_params_from(parse_config(in));
  CHECK(p.bandwidth_hz == 100e6);
  CHECK(p.reflection_factor == 0.25);
  CHECK(p.power_convention == PowerConvention::BistaticProduct);
  CHECK(p.tap_length_m() == 0.75);

  std::istringstream bad("power_convention = telepathy\n");
  CHECK_THROWS_WITH(channel_params_from(parse_config(bad)),
                    Catch::Matchers::ContainsSubstring("power_convention"));
}

TEST_CASE("model config from config validates the prior ordering", "[config]") {
  std::istringstream in(
      "attn_dim = 32\n"
      "latent_s = 8\n"
      "prior_eps_s = 0.2\n"
      "prior_eps_d = 0.6\n"
      "prior_eps_u = 1.2\n");
  const ModelConfig c = model_config_from(parse_config(in), 64, 30);
  CHECK(c.taps == 64);
  CHECK(c.steps == 30);
  CHECK(c.attn_dim == 32);
  CHECK(c.latent_s == 8);
  CHECK(c.prior_eps_d == 0.6);

  std::istringstream bad("prior_eps_u = 0.05\n");
  CHECK_THROWS_AS(model_config_from(parse_config(bad), 64, 30), std::invalid_argument);
}

TEST_CASE("experiment config chooses the sweep axis", "[config]") {
  {
    std::istringstream in(
        "scene = room.txt\n"
        "snr_list = -10, 0, 20\n"
        "methods = mudinet, mlp, tf, constant\n"
        "seeds = 3\n"
        "dataset_size = 200\n"
        "trajectory_steps = 30\n"
        "epochs = 60\n"
        "batch = 32\n");
    const ExperimentConfig e = experiment_from(parse_config(in));
    CHECK(e.axis == SweepAxis::Snr);
    CHECK(e.settings == std::vector<double>{-10.0, 0.0, 20.0});
    CHECK(e.methods.size() == 4);
    CHECK(e.seeds == 3);
    CHECK(e.trajectory_steps == 30);
    CHECK(e.noise);
  }
  {
    std::istringstream in(
        "scene = room.txt\n"
        "bandwidth_list = 25e6, 50e6, 100e6\n"
        "noise = off\n");
    const ExperimentConfig e = experiment_from(parse_config(in));
    CHECK(e.axis == SweepAxis::Bandwidth);
    CHECK(e.settings.size() == 3);
    CHECK_FALSE(e.noise);
  }
  {
    std::istringstream in(
        "scene = room.txt\n"
        "snr_list = 0\n"
        "bandwidth_list = 25e6\n");
    CHECK_THROWS_WITH(experiment_from(parse_config(in)),
                      Catch::Matchers::ContainsSubstring("not both"));
  }
  {
    std::istringstream in("scene = room.txt\n");
    CHECK_THROWS_WITH(experiment_from(parse_config(in)),
                      Catch::Matchers::ContainsSubstring("empty sweep settings"));
  }
}
