#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mudinet/channel.hpp"
#include "mudinet/geometry.hpp"
#include "mudinet/rng.hpp"

namespace mudinet {

// UE track sampled at 1 Hz and constant speed, so consecutive positions are
// exactly speed * 1 s apart.
struct Trajectory {
  std::vector<Point2D> positions;  // size T
  std::vector<double> headings;    // size T; headings[i] moved position i-1 -> i
  double speed = 1.0;              // m/s
};

namespace detail {

// Step segment contacts a wall (inclusive of wall endpoints).
inline bool step_contacts_wall(Point2D a, Point2D b, std::span<const WallSegment> walls) {
  for (const auto& w : walls) {
    const auto hit = segment_intersection(a, b, w.a, w.b);
    if (hit && hit->first >= 0.0 && hit->first <= 1.0 && hit->second >= 0.0 &&
        hit->second <= 1.0) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Deterministic trajectory roll-out from a start pose and per-step heading
// increments. Returns nullopt when a step would contact a wall or leave the
// bounds (the whole trajectory is discarded).
inline std::optional<Trajectory> roll_trajectory(const Scene& scene, Point2D start,
                                                 double initial_heading,
                                                 std::span<const double> heading_increments,
                                                 double speed = 1.0) {
  if (!scene.bounds.contains(start)) return std::nullopt;
  Trajectory traj;
  traj.speed = speed;
  traj.positions.push_back(start);
  traj.headings.push_back(initial_heading);
  double heading = initial_heading;
  for (double inc : heading_increments) {
    heading += inc;
    const Point2D prev = traj.positions.back();
    const Point2D next = prev + Point2D{std::cos(heading), std::sin(heading)} * speed;
    if (!scene.bounds.contains(next)) return std::nullopt;
    if (detail::step_contacts_wall(prev, next, scene.walls)) return std::nullopt;
    traj.positions.push_back(next);
    traj.headings.push_back(heading);
  }
  return traj;
}

// One random trajectory attempt: start uniform over the bounds, initial
// orientation uniform over [0, 2pi), per-second heading increment uniform
// over [-pi/2, pi/2]. Rejection (wall contact) is a normal outcome; the
// caller retries with fresh draws.
inline std::optional<Trajectory> generate_trajectory(const Scene& scene, std::size_t steps,
                                                     RandomStream& rng) {
  if (steps < 1) throw std::invalid_argument("generate_trajectory: steps must be >= 1");
  const Point2D start{rng.uniform(scene.bounds.lo.x, scene.bounds.hi.x),
                      rng.uniform(scene.bounds.lo.y, scene.bounds.hi.y)};
  const double heading0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> increments(steps - 1);
  for (auto& inc : increments) {
    inc = rng.uniform(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
  }
  return roll_trajectory(scene, start, heading0, increments);
}

// One trajectory's worth of inputs and labels. x rows are log10 power-delay
// profiles (floored at P_BN); normalization happens at dataset level.
struct Sample {
  std::size_t steps = 0;
  std::size_t taps = 0;
  double tap_spacing_s = 0.0;
  std::vector<float> x;       // steps * taps, row-major
  std::vector<float> labels;  // steps * 2 (meters)
  double snr_db = 0.0;        // NaN when no power control was applied
  std::uint64_t seed = 0;

  float x_at(std::size_t t, std::size_t k) const { return x[t * taps + k]; }
};

// Synthesize the labeled multi-time CIR sample for a trajectory. With a
// target SNR the transmit power is solved from the first-path power at the
// trajectory start; otherwise params.tx_power is used unchanged.
inline Sample build_sample(const Trajectory& traj, const Scene& scene,
                           const ChannelParams& params, std::optional<double> target_snr_db,
                           RandomStream& rng, const SynthesisOptions& opts = {}) {
  ChannelParams tuned = params;
  if (target_snr_db) {
    tuned.tx_power = solve_tx_power(scene, traj.positions.front(), *target_snr_db, params,
                                    opts.max_order, opts.paths);
  }
  Sample sample;
  sample.steps = traj.positions.size();
  sample.taps = params.max_taps;
  sample.tap_spacing_s = params.tap_spacing_s();
  sample.snr_db = target_snr_db ? *target_snr_db : std::nan("");
  sample.x.reserve(sample.steps * sample.taps);
  sample.labels.reserve(sample.steps * 2);
  for (const auto& pos : traj.positions) {
    const CIRVector cir = synthesize_cir(scene, pos, tuned, rng, opts);
    for (double tap : cir.taps) {
      sample.x.push_back(static_cast<float>(std::log10(tap + params.background_noise)));
    }
    sample.labels.push_back(static_cast<float>(pos.x));
    sample.labels.push_back(static_cast<float>(pos.y));
  }
  return sample;
}

// Generate `count` accepted samples. Per-sample streams are derived from the
// master seed by the documented splitting rule, so generation order (or a
// parallel schedule over samples) cannot change any sample's content.
inline std::vector<Sample> generate_samples(const Scene& scene, const ChannelParams& params,
                                            std::size_t count, std::size_t steps,
                                            std::optional<double> target_snr_db,
                                            std::uint64_t master_seed,
                                            const SynthesisOptions& opts = {},
                                            std::size_t max_attempts = 100000) {
  std::vector<Sample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t seed = derive_seed(master_seed, i);
    RandomStream stream(seed);
    bool done = false;
    for (std::size_t attempt = 0; attempt < max_attempts && !done; ++attempt) {
      const auto traj = generate_trajectory(scene, steps, stream);
      if (!traj) continue;
      try {
        Sample s = build_sample(*traj, scene, params, target_snr_db, stream, opts);
        s.seed = seed;
        samples.push_back(std::move(s));
        done = true;
      } catch (const std::runtime_error&) {
        // no first path from this start; treat like a rejected trajectory
      }
    }
    if (!done) {
      throw std::runtime_error("generate_samples: no accepted trajectory within attempt budget");
    }
  }
  return samples;
}

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> test;
  double norm_min = 0.0;  // train-set log-power extrema used for scaling
  double norm_max = 1.0;
};

// Shuffle, split train/test, then min-max scale all inputs with statistics
// computed from the training inputs only (test values clamped to [0, 1]).
inline DatasetSplit normalize_split(std::vector<Sample> samples, double train_frac,
                                    RandomStream& rng) {
  if (samples.size() < 2) throw std::invalid_argument("normalize_split: need at least 2 samples");
  if (!(train_frac > 0.0) || !(train_frac < 1.0)) {
    throw std::invalid_argument("normalize_split: train_frac must be in (0, 1)");
  }
  for (std::size_t i = samples.size() - 1; i > 0; --i) {
    const std::size_t j = rng.uniform_index(i + 1);
    std::swap(samples[i], samples[j]);
  }
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_frac * static_cast<double>(samples.size())));
  n_train = std::min(std::max<std::size_t>(n_train, 1), samples.size() - 1);

  DatasetSplit split;
  split.train.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(samples.begin() + static_cast<std::ptrdiff_t>(n_train), samples.end());

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : split.train) {
    for (float v : s.x) {
      lo = std::min(lo, static_cast<double>(v));
      hi = std::max(hi, static_cast<double>(v));
    }
  }
  split.norm_min = lo;
  split.norm_max = hi;
  const double range = hi - lo;
  if (range == 0.0) {
    std::cerr << "normalize_split: constant inputs (max == min), everything maps to 0\n";
  }
  auto scale = [&](Sample& s, bool clamp) {
    for (float& v : s.x) {
      double u = range == 0.0 ? 0.0 : (static_cast<double>(v) - lo) / range;
      if (clamp) u = std::clamp(u, 0.0, 1.0);
      v = static_cast<float>(u);
    }
  };
  for (auto& s : split.train) scale(s, false);
  for (auto& s : split.test) scale(s, true);
  return split;
}

}  // namespace mudinet
