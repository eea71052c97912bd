#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mudinet/binary_io.hpp"
#include "mudinet/channel.hpp"
#include "mudinet/trajectory.hpp"

namespace mudinet {

inline constexpr std::uint32_t kDatasetVersion = 1;

// One MDNT sample container:
//   magic "MDNT", u32 version, u32 sample count, u32 T, u32 taps,
//   f64 tap spacing, f64 norm min, f64 norm max,
//   then per sample: f32 x row-major (T*taps), f32 labels (T*2),
//   f64 snr_db, u64 seed.
inline void write_sample_container(std::ostream& out, const std::vector<Sample>& samples,
                                   double norm_min, double norm_max) {
  if (samples.empty()) throw IoError("dataset: refusing to save an empty sample list");
  const std::uint32_t steps = static_cast<std::uint32_t>(samples.front().steps);
  const std::uint32_t taps = static_cast<std::uint32_t>(samples.front().taps);
  for (const auto& s : samples) {
    if (s.steps != steps || s.taps != taps) {
      throw DimensionError("dataset: samples disagree on (T, taps)");
    }
  }
  out.write("MDNT", 4);
  bin::write_pod(out, kDatasetVersion);
  bin::write_pod(out, static_cast<std::uint32_t>(samples.size()));
  bin::write_pod(out, steps);
  bin::write_pod(out, taps);
  bin::write_pod(out, samples.front().tap_spacing_s);
  bin::write_pod(out, norm_min);
  bin::write_pod(out, norm_max);
  for (const auto& s : samples) {
    if (s.x.size() != static_cast<std::size_t>(steps) * taps ||
        s.labels.size() != static_cast<std::size_t>(steps) * 2) {
      throw DimensionError("dataset: sample tensor sizes disagree with (T, taps)");
    }
    bin::write_array(out, s.x);
    bin::write_array(out, s.labels);
    bin::write_pod(out, s.snr_db);
    bin::write_pod(out, s.seed);
  }
}

struct SampleContainer {
  std::vector<Sample> samples;
  double norm_min = 0.0;
  double norm_max = 1.0;
};

inline SampleContainer read_sample_container(std::istream& in) {
  bin::expect_magic(in, "MDNT", 4, "MDNT dataset");
  const auto version = bin::read_pod<std::uint32_t>(in, "version");
  if (version != kDatasetVersion) {
    throw VersionError("dataset: unsupported version " + std::to_string(version));
  }
  const auto count = bin::read_pod<std::uint32_t>(in, "sample count");
  const auto steps = bin::read_pod<std::uint32_t>(in, "T");
  const auto taps = bin::read_pod<std::uint32_t>(in, "taps");
  if (count == 0 || steps == 0 || taps == 0) {
    throw DimensionError("dataset: zero count, T, or taps in header");
  }
  SampleContainer c;
  const auto tap_spacing = bin::read_pod<double>(in, "tap spacing");
  c.norm_min = bin::read_pod<double>(in, "norm min");
  c.norm_max = bin::read_pod<double>(in, "norm max");
  c.samples.resize(count);
  for (auto& s : c.samples) {
    s.steps = steps;
    s.taps = taps;
    s.tap_spacing_s = tap_spacing;
    s.x.resize(static_cast<std::size_t>(steps) * taps);
    s.labels.resize(static_cast<std::size_t>(steps) * 2);
    bin::read_array(in, s.x, "x");
    bin::read_array(in, s.labels, "labels");
    s.snr_db = bin::read_pod<double>(in, "snr_db");
    s.seed = bin::read_pod<std::uint64_t>(in, "seed");
  }
  return c;
}

// A dataset file is the train container followed by the test container; both
// carry the same (train-derived) normalization statistics.
inline void save_dataset(const DatasetSplit& split, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("dataset: cannot open for writing: " + path);
  write_sample_container(out, split.train, split.norm_min, split.norm_max);
  write_sample_container(out, split.test, split.norm_min, split.norm_max);
  if (!out) throw IoError("dataset: write failed: " + path);
}

inline DatasetSplit load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("dataset: cannot open: " + path);
  SampleContainer train = read_sample_container(in);
  SampleContainer test = read_sample_container(in);
  if (train.samples.front().steps != test.samples.front().steps ||
      train.samples.front().taps != test.samples.front().taps) {
    throw DimensionError("dataset: train/test containers disagree on (T, taps)");
  }
  DatasetSplit split;
  split.train = std::move(train.samples);
  split.test = std::move(test.samples);
  split.norm_min = train.norm_min;
  split.norm_max = train.norm_max;
  return split;
}

// CIR dump: 8-byte magic "MDNTCIR\0", u32 tap count, f64 tap spacing,
// then f32 taps.
inline void save_cir(const CIRVector& cir, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cir: cannot open for writing: " + path);
  out.write("MDNTCIR\0", 8);
  bin::write_pod(out, static_cast<std::uint32_t>(cir.taps.size()));
  bin::write_pod(out, cir.tap_spacing_s);
  for (double t : cir.taps) bin::write_pod(out, static_cast<float>(t));
  if (!out) throw IoError("cir: write failed: " + path);
}

inline CIRVector load_cir(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cir: cannot open: " + path);
  bin::expect_magic(in, "MDNTCIR\0", 8, "MDNT CIR");
  const auto count = bin::read_pod<std::uint32_t>(in, "tap count");
  CIRVector cir;
  cir.tap_spacing_s = bin::read_pod<double>(in, "tap spacing");
  cir.taps.resize(count);
  for (auto& t : cir.taps) t = bin::read_pod<float>(in, "taps");
  return cir;
}

}  // namespace mudinet
