#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mudinet/channel.hpp"
#include "mudinet/model.hpp"

namespace mudinet {

// Experiment/config files are flat `key = value` text; '#' starts a comment.
// Keys mirror the simulation parameter table (bandwidth_hz, sampling_factor,
// reflection_factor, carrier_hz, speed_of_light, tx_power, background_noise,
// spread_gain_db, max_taps, trajectory_steps, ...) plus experiment and model
// keys documented in the README.
using ConfigMap = std::map<std::string, std::string>;

namespace cfgdetail {
inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}
}  // namespace cfgdetail

inline ConfigMap parse_config(std::istream& in) {
  ConfigMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = cfgdetail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = cfgdetail::trim(trimmed.substr(0, eq));
    const std::string value = cfgdetail::trim(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
    }
    map[key] = value;
  }
  return map;
}

inline ConfigMap load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

inline double cfg_double(const ConfigMap& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': not a number: " + it->second);
  }
}

inline std::size_t cfg_size(const ConfigMap& m, const std::string& key, std::size_t fallback) {
  const double v = cfg_double(m, key, static_cast<double>(fallback));
  if (v < 0.0) throw std::runtime_error("config key '" + key + "': must be nonnegative");
  return static_cast<std::size_t>(v);
}

inline std::string cfg_string(const ConfigMap& m, const std::string& key,
                              const std::string& fallback) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

inline bool cfg_bool(const ConfigMap& m, const std::string& key, bool fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  if (it->second == "on" || it->second == "true" || it->second == "1") return true;
  if (it->second == "off" || it->second == "false" || it->second == "0") return false;
  throw std::runtime_error("config key '" + key + "': expected on/off, got " + it->second);
}

inline std::vector<double> cfg_list(const ConfigMap& m, const std::string& key) {
  const auto it = m.find(key);
  std::vector<double> out;
  if (it == m.end()) return out;
  std::istringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const std::string t = cfgdetail::trim(tok);
    if (t.empty()) continue;
    out.push_back(cfg_double({{key, t}}, key, 0.0));
  }
  return out;
}

inline std::vector<std::string> cfg_string_list(const ConfigMap& m, const std::string& key,
                                                const std::vector<std::string>& fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  std::vector<std::string> out;
  std::istringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const std::string t = cfgdetail::trim(tok);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

inline ChannelParams channel_params_from(const ConfigMap& m) {
  ChannelParams p;
  p.bandwidth_hz = cfg_double(m, "bandwidth_hz", p.bandwidth_hz);
  p.sampling_factor = cfg_double(m, "sampling_factor", p.sampling_factor);
  p.reflection_factor = cfg_double(m, "reflection_factor", p.reflection_factor);
  p.carrier_hz = cfg_double(m, "carrier_hz", p.carrier_hz);
  p.speed_of_light = cfg_double(m, "speed_of_light", p.speed_of_light);
  p.tx_power = cfg_double(m, "tx_power", p.tx_power);
  p.background_noise = cfg_double(m, "background_noise", p.background_noise);
  p.spread_gain_db = cfg_double(m, "spread_gain_db", p.spread_gain_db);
  p.max_taps = cfg_size(m, "max_taps", p.max_taps);
  p.p_obs = cfg_double(m, "p_obs", p.p_obs);
  p.diffuse_samples = cfg_size(m, "diffuse_samples", p.diffuse_samples);
  const std::string conv = cfg_string(m, "power_convention", "friis-total");
  if (conv == "friis-total") {
    p.power_convention = PowerConvention::FriisTotal;
  } else if (conv == "bistatic-product") {
    p.power_convention = PowerConvention::BistaticProduct;
  } else {
    throw std::runtime_error("config key 'power_convention': unknown value " + conv);
  }
  validate_params(p);
  return p;
}

inline ModelConfig model_config_from(const ConfigMap& m, std::size_t taps, std::size_t steps) {
  ModelConfig c;
  c.taps = taps;
  c.steps = steps;
  c.attn_dim = cfg_size(m, "attn_dim", c.attn_dim);
  c.latent_s = cfg_size(m, "latent_s", c.latent_s);
  c.latent_d = cfg_size(m, "latent_d", c.latent_d);
  c.latent_u = cfg_size(m, "latent_u", c.latent_u);
  c.hidden_width = cfg_size(m, "hidden_width", c.hidden_width);
  c.hidden_layers = cfg_size(m, "hidden_layers", c.hidden_layers);
  c.prior_eps_s = cfg_double(m, "prior_eps_s", c.prior_eps_s);
  c.prior_eps_d = cfg_double(m, "prior_eps_d", c.prior_eps_d);
  c.prior_eps_u = cfg_double(m, "prior_eps_u", c.prior_eps_u);
  c.kl_weight = cfg_double(m, "kl_weight", c.kl_weight);
  c.kl_anneal_frac = cfg_double(m, "kl_anneal_frac", c.kl_anneal_frac);
  validate_config(c);
  return c;
}

// Which quantity a sweep iterates over.
enum class SweepAxis { Snr, Bandwidth };

struct ExperimentConfig {
  std::string scene_path;
  SweepAxis axis = SweepAxis::Snr;
  std::vector<double> settings;          // dB values or Hz values
  std::vector<std::string> methods;      // mudinet | mlp | tf | constant
  std::size_t seeds = 1;                 // training seeds per cell
  std::size_t dataset_size = 200;
  std::size_t trajectory_steps = 110;    // T
  std::size_t epochs = 60;
  std::size_t batch = 32;
  double train_frac = 0.8;
  bool noise = true;
  std::size_t jobs = 1;
  ChannelParams channel;
  ConfigMap raw;  // retained for model construction per dataset dims
};

inline ExperimentConfig experiment_from(const ConfigMap& m) {
  ExperimentConfig e;
  e.raw = m;
  e.scene_path = cfg_string(m, "scene", "");
  e.channel = channel_params_from(m);
  const auto snrs = cfg_list(m, "snr_list");
  const auto bws = cfg_list(m, "bandwidth_list");
  if (!snrs.empty() && !bws.empty()) {
    throw std::runtime_error("config: give either snr_list or bandwidth_list, not both");
  }
  if (!bws.empty()) {
    e.axis = SweepAxis::Bandwidth;
    e.settings = bws;
  } else {
    e.axis = SweepAxis::Snr;
    e.settings = snrs;
  }
  if (e.settings.empty()) throw std::runtime_error("config: empty sweep settings");
  e.methods = cfg_string_list(m, "methods", {"mudinet"});
  if (e.methods.empty()) throw std::runtime_error("config: empty method list");
  e.seeds = cfg_size(m, "seeds", e.seeds);
  if (e.seeds < 1) throw std::runtime_error("config: seeds must be >= 1");
  e.dataset_size = cfg_size(m, "dataset_size", e.dataset_size);
  e.trajectory_steps = cfg_size(m, "trajectory_steps", e.trajectory_steps);
  e.epochs = cfg_size(m, "epochs", e.epochs);
  e.batch = cfg_size(m, "batch", e.batch);
  e.train_frac = cfg_double(m, "train_frac", e.train_frac);
  e.noise = cfg_bool(m, "noise", e.noise);
  e.jobs = cfg_size(m, "jobs", e.jobs);
  if (e.jobs < 1) e.jobs = 1;
  return e;
}

}  // namespace mudinet
