#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mudinet {

static_assert(std::endian::native == std::endian::little,
              "binary file formats are little-endian");

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MagicError : IoError {
  using IoError::IoError;
};
struct VersionError : IoError {
  using IoError::IoError;
};
struct TruncatedError : IoError {
  using IoError::IoError;
};
struct DimensionError : IoError {
  using IoError::IoError;
};

namespace bin {

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw TruncatedError(std::string("truncated while reading ") + what);
  return v;
}

template <class T>
void write_array(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
void read_array(std::istream& in, std::vector<T>& v, const char* what) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(T)));
  if (!in) throw TruncatedError(std::string("truncated while reading ") + what);
}

inline void expect_magic(std::istream& in, const char* magic, std::size_t len,
                         const char* what) {
  std::vector<char> buf(len);
  in.read(buf.data(), static_cast<std::streamsize>(len));
  if (!in) throw TruncatedError(std::string("truncated while reading ") + what + " magic");
  if (std::memcmp(buf.data(), magic, len) != 0) {
    throw MagicError(std::string("bad magic, not a ") + what + " file");
  }
}

}  // namespace bin
}  // namespace mudinet
