#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mudinet::ad {

// Dense row-major 2D tensor of 64-bit floats. Scalars are 1x1, row vectors
// 1xN. Everything the training stack needs fits in rank 2.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> v)
      : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols) {
      throw std::invalid_argument("Tensor: value count does not match shape");
    }
  }

  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

  std::size_t size() const { return values.size(); }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double item() const {
    if (size() != 1) throw std::logic_error("Tensor: item() on non-scalar");
    return values[0];
  }

  std::vector<std::size_t> shape() const { return {rows, cols}; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

inline std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

struct NamedTensor {
  std::string name;
  Tensor value;
};

using ParamSet = std::vector<NamedTensor>;

inline const Tensor& find_param(const ParamSet& params, const std::string& name) {
  for (const auto& p : params) {
    if (p.name == name) return p.value;
  }
  throw std::invalid_argument("parameter not found: " + name);
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) +
                                " vs " + shape_str(b));
  }
}

}  // namespace mudinet::ad
