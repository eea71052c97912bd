#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mudinet/binary_io.hpp"
#include "mudinet/tensor.hpp"

namespace mudinet::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Parameter checkpoint:
//   magic "MDPW", u32 version, u32 param count,
//   then per parameter: u32 name length, name bytes, u32 rank (2),
//   u64 rows, u64 cols, f64 data row-major.
inline void save_params(const ParamSet& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
  out.write("MDPW", 4);
  bin::write_pod(out, kCheckpointVersion);
  bin::write_pod(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    bin::write_pod(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    bin::write_pod(out, static_cast<std::uint32_t>(2));
    bin::write_pod(out, static_cast<std::uint64_t>(p.value.rows));
    bin::write_pod(out, static_cast<std::uint64_t>(p.value.cols));
    bin::write_array(out, p.value.values);
  }
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

inline ParamSet load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open: " + path);
  bin::expect_magic(in, "MDPW", 4, "MDPW checkpoint");
  const auto version = bin::read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = bin::read_pod<std::uint32_t>(in, "param count");
  ParamSet params;
  params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = bin::read_pod<std::uint32_t>(in, "name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw TruncatedError("checkpoint: truncated while reading name");
    const auto rank = bin::read_pod<std::uint32_t>(in, "rank");
    if (rank != 2) throw DimensionError("checkpoint: unsupported tensor rank");
    const auto rows = bin::read_pod<std::uint64_t>(in, "rows");
    const auto cols = bin::read_pod<std::uint64_t>(in, "cols");
    Tensor t(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    bin::read_array(in, t.values, "tensor data");
    params.push_back({std::move(name), std::move(t)});
  }
  return params;
}

}  // namespace mudinet::ad
