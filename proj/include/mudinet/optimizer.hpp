#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mudinet/tensor.hpp"

namespace mudinet::ad {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Tensor> m;  // first moments, parallel to the parameter list
  std::vector<Tensor> v;  // second moments

  static AdamState for_params(const std::vector<Tensor>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
      s.m.emplace_back(p.rows, p.cols);
      s.v.emplace_back(p.rows, p.cols);
    }
    return s;
  }

  static AdamState for_params(const ParamSet& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
      s.m.emplace_back(p.value.rows, p.value.cols);
      s.v.emplace_back(p.value.rows, p.value.cols);
    }
    return s;
  }
};

// Standard bias-corrected Adam update, in place. A non-finite gradient aborts
// the step before any parameter is touched.
inline void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
                      AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "adam_step");
    if (!grads[i].all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient, step aborted");
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m.values[k] = state.beta1 * m.values[k] + (1.0 - state.beta1) * g.values[k];
      v.values[k] = state.beta2 * v.values[k] + (1.0 - state.beta2) * g.values[k] * g.values[k];
      const double mhat = m.values[k] / bc1;
      const double vhat = v.values[k] / bc2;
      p.values[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

inline void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& state,
                      double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i].value, grads[i], "adam_step");
    if (!grads[i].all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient, step aborted");
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].value;
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m.values[k] = state.beta1 * m.values[k] + (1.0 - state.beta1) * g.values[k];
      v.values[k] = state.beta2 * v.values[k] + (1.0 - state.beta2) * g.values[k] * g.values[k];
      const double mhat = m.values[k] / bc1;
      const double vhat = v.values[k] / bc2;
      p.values[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// Geometric decay with a floor: lr = 1e-4 * 0.9^(epoch/2) + 5e-6. Strictly
// decreasing in the epoch, approaching the 5e-6 floor.
inline double lr_schedule(std::size_t epoch) {
  if (epoch > static_cast<std::size_t>(1) << 52) {
    throw std::invalid_argument("lr_schedule: epoch out of range");
  }
  return 1e-4 * std::pow(0.9, static_cast<double>(epoch) / 2.0) + 5e-6;
}

}  // namespace mudinet::ad
