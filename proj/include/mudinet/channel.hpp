#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mudinet/geometry.hpp"
#include "mudinet/rng.hpp"

namespace mudinet {

// Which free-space attenuation the specular paths use.
//   FriisTotal:      P * L^order * (lambda / (4 pi * total_length))^2
//   BistaticProduct: P * L^order * (lambda / (4 pi))^2 / prod(segment_lengths)
enum class PowerConvention { FriisTotal, BistaticProduct };

struct ChannelParams {
  double bandwidth_hz = 100e6;
  double sampling_factor = 4.0;
  double reflection_factor = 0.25;  // L, per reflection
  double carrier_hz = 2.4e9;
  double speed_of_light = 3.0e8;
  double tx_power = 1.0;
  double background_noise = 1e-10;  // P_BN
  double spread_gain_db = 20.0;     // G_ss
  std::size_t max_taps = 300;
  PowerConvention power_convention = PowerConvention::FriisTotal;
  double p_obs = 0.8;               // per-scatterer observation probability
  std::size_t diffuse_samples = 500;  // scatterer draws per region per CIR

  double tap_spacing_s() const { return 1.0 / (bandwidth_hz * sampling_factor); }
  double tap_length_m() const { return speed_of_light * tap_spacing_s(); }
  double wavelength_m() const { return speed_of_light / carrier_hz; }
};

inline void validate_params(const ChannelParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("ChannelParams: ") + name + " must be > 0");
  };
  positive(p.bandwidth_hz, "bandwidth_hz");
  positive(p.sampling_factor, "sampling_factor");
  positive(p.reflection_factor, "reflection_factor");
  positive(p.carrier_hz, "carrier_hz");
  positive(p.speed_of_light, "speed_of_light");
  positive(p.tx_power, "tx_power");
  positive(p.background_noise, "background_noise");
  if (p.max_taps < 1) throw std::invalid_argument("ChannelParams: max_taps must be >= 1");
  if (p.p_obs < 0.0 || p.p_obs > 1.0) throw std::invalid_argument("ChannelParams: p_obs must be in [0, 1]");
  if (p.diffuse_samples < 1) throw std::invalid_argument("ChannelParams: diffuse_samples must be >= 1");
}

// Tap-power vector of one CIR observation, linear power per delay bin.
struct CIRVector {
  std::vector<double> taps;
  double tap_spacing_s = 0.0;
};

enum class PathKind { Direct, Specular, Diffuse };

struct PathContribution {
  std::size_t tap_index = 0;
  double power = 0.0;
  PathKind kind = PathKind::Direct;
};

// Delay bin of a path length on the tap grid; nullopt when the grid cannot
// hold it (caller decides drop vs fail). Defaults: 2.5 ns per tap, 0.75 m.
inline std::optional<std::size_t> tap_index(double path_length_m, const ChannelParams& params) {
  if (path_length_m < 0.0) throw std::invalid_argument("tap_index: negative path length");
  const double idx = std::round(path_length_m / params.tap_length_m());
  if (idx >= static_cast<double>(params.max_taps)) return std::nullopt;
  return static_cast<std::size_t>(idx);
}

namespace detail {
inline double pow_order(double base, int order) {
  double v = 1.0;
  for (int i = 0; i < order; ++i) v *= base;
  return v;
}
}  // namespace detail

// Received linear power of a specular path under the configured convention.
inline double path_power(double total_length, std::span<const double> segment_lengths,
                         int order, const ChannelParams& params) {
  if (!(total_length > 0.0)) throw std::invalid_argument("path_power: total_length must be > 0");
  if (order != static_cast<int>(segment_lengths.size()) - 1) {
    throw std::invalid_argument("path_power: order must equal segment count minus 1");
  }
  const double lambda = params.wavelength_m();
  const double att = detail::pow_order(params.reflection_factor, order);
  switch (params.power_convention) {
    case PowerConvention::FriisTotal: {
      const double k = lambda / (4.0 * std::numbers::pi * total_length);
      return params.tx_power * att * k * k;
    }
    case PowerConvention::BistaticProduct: {
      const double k = lambda / (4.0 * std::numbers::pi);
      double denom = 1.0;
      for (double s : segment_lengths) {
        if (!(s > 0.0)) throw std::invalid_argument("path_power: segment lengths must be > 0");
        denom *= s;
      }
      return params.tx_power * att * k * k / denom;
    }
  }
  throw std::logic_error("path_power: unknown power convention");
}

inline double path_power(const SpecularPath& path, const ChannelParams& params) {
  return path_power(path.total_length, std::span<const double>(path.segment_lengths),
                    path.order, params);
}

// Specular tap contributions (direct + reflections up to max_order);
// deterministic, paths beyond the tap grid dropped.
inline std::vector<PathContribution> specular_contributions(const Scene& scene, Point2D ue,
                                                            const ChannelParams& params,
                                                            int max_order = 2,
                                                            const PathOptions& opts = {}) {
  std::vector<PathContribution> out;
  for (const auto& path : specular_paths(scene, ue, max_order, opts)) {
    const auto tap = tap_index(path.total_length, params);
    if (!tap) continue;
    out.push_back({*tap, path_power(path, params),
                   path.order == 0 ? PathKind::Direct : PathKind::Specular});
  }
  return out;
}

// Per-scatterer diffuse contributions. Each point is observed independently
// with probability p_obs; an observed point at bistatic ranges (r_d, r_t)
// contributes weight * L^2 * P * (lambda/4pi)^2 / (r_d * r_t) at the tap of
// r_d + r_t. The tap-wise sum is the Monte-Carlo delay-power profile of the
// region.
inline std::vector<PathContribution> diffuse_contributions(std::span<const ScattererPoint> points,
                                                           Point2D tx, Point2D ue,
                                                           const ChannelParams& params,
                                                           RandomStream& rng) {
  std::vector<PathContribution> out;
  const double lambda_factor = params.wavelength_m() / (4.0 * std::numbers::pi);
  const double base = params.reflection_factor * params.reflection_factor * params.tx_power *
                      lambda_factor * lambda_factor;
  for (const auto& pt : points) {
    const bool observed = rng.uniform() < params.p_obs;
    if (!observed) continue;
    const double rd = distance(pt.pos, tx);
    const double rt = distance(pt.pos, ue);
    if (rd <= 1e-12 || rt <= 1e-12) {
      std::cerr << "diffuse_contributions: scatterer coincident with tx or ue, skipped\n";
      continue;
    }
    const auto tap = tap_index(rd + rt, params);
    if (!tap) continue;
    out.push_back({*tap, pt.weight * base / (rd * rt), PathKind::Diffuse});
  }
  return out;
}

struct SynthesisOptions {
  bool include_diffuse = true;
  bool include_noise = true;
  int max_order = 2;
  PathOptions paths{};
};

// One CIR observation: specular + optional diffuse tap powers plus per-tap
// exponential noise power of mean P_BN. Diffuse and noise randomness come
// from independent child streams of the caller's stream, so toggling either
// component never shifts the other's draws.
inline CIRVector synthesize_cir(const Scene& scene, Point2D ue, const ChannelParams& params,
                                RandomStream& rng, const SynthesisOptions& opts = {}) {
  CIRVector cir;
  cir.tap_spacing_s = params.tap_spacing_s();
  cir.taps.assign(params.max_taps, 0.0);

  RandomStream diffuse_rng(rng.fork_seed());
  RandomStream noise_rng(rng.fork_seed());

  for (const auto& c : specular_contributions(scene, ue, params, opts.max_order, opts.paths)) {
    cir.taps[c.tap_index] += c.power;
  }
  if (opts.include_diffuse) {
    for (const auto& region : scene.regions) {
      const auto points = sample_scatterers(region, params.diffuse_samples, diffuse_rng);
      for (const auto& c : diffuse_contributions(std::span<const ScattererPoint>(points),
                                                 scene.tx, ue, params, diffuse_rng)) {
        cir.taps[c.tap_index] += c.power;
      }
    }
  }
  if (opts.include_noise) {
    for (auto& t : cir.taps) t += noise_rng.exponential(params.background_noise);
  }
  return cir;
}

// First-path (shortest valid specular path) tap power, noise-free, at the
// configured transmit power.
inline double first_path_power(const Scene& scene, Point2D ue, const ChannelParams& params,
                               int max_order = 2, const PathOptions& opts = {}) {
  const auto paths = specular_paths(scene, ue, max_order, opts);
  if (paths.empty()) throw std::runtime_error("first_path_power: no valid path from tx to ue");
  const auto fp_tap = tap_index(paths[0].total_length, params);
  if (!fp_tap) throw std::runtime_error("first_path_power: first path beyond tap grid");
  double power = 0.0;
  for (const auto& c : specular_contributions(scene, ue, params, max_order, opts)) {
    if (c.tap_index == *fp_tap) power += c.power;
  }
  return power;
}

// SNR bookkeeping used for power control:
//   SNR = 10 log10(P_FP / P_BN) - G_ss.
inline double measure_snr_db(const Scene& scene, Point2D start, const ChannelParams& params,
                             int max_order = 2, const PathOptions& opts = {}) {
  const double p_fp = first_path_power(scene, start, params, max_order, opts);
  return 10.0 * std::log10(p_fp / params.background_noise) - params.spread_gain_db;
}

// Transmit power that puts the first-path SNR at the trajectory start on the
// requested target. P_FP scales linearly in the transmit power, so
// P_tx = P_BN * 10^((target + G_ss)/10) / g_FP with g_FP the unit-power gain.
inline double solve_tx_power(const Scene& scene, Point2D start, double target_snr_db,
                             const ChannelParams& params, int max_order = 2,
                             const PathOptions& opts = {}) {
  ChannelParams unit = params;
  unit.tx_power = 1.0;
  const double g_fp = first_path_power(scene, start, unit, max_order, opts);
  const double required_fp =
      params.background_noise * std::pow(10.0, (target_snr_db + params.spread_gain_db) / 10.0);
  return required_fp / g_fp;
}

}  // namespace mudinet
