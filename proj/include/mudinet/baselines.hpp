#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mudinet/model.hpp"

namespace mudinet {

enum class BaselineKind { Mlp, Transformer };

// Reference regressors sized against the MudiNet config: the MLP mirrors the
// UE-encoder and position-head stacks on single-time rows; the transformer
// reuses the temporal attention block on full multi-time samples.
struct BaselineConfig {
  BaselineKind kind = BaselineKind::Mlp;
  ModelConfig base;

  // taps -> hidden^L -> latent_u -> hidden^L -> 2 (attention-free MudiNet
  // stack; asserted against the ModelConfig by tests).
  std::vector<std::size_t> mlp_widths() const {
    std::vector<std::size_t> w{base.taps};
    for (std::size_t i = 0; i < base.hidden_layers; ++i) w.push_back(base.hidden_width);
    w.push_back(base.latent_u);
    for (std::size_t i = 0; i < base.hidden_layers; ++i) w.push_back(base.hidden_width);
    w.push_back(2);
    return w;
  }

  // attn_dim -> hidden^L -> 2 per-step head after the attention block.
  std::vector<std::size_t> tf_head_widths() const {
    std::vector<std::size_t> w{base.attn_dim};
    for (std::size_t i = 0; i < base.hidden_layers; ++i) w.push_back(base.hidden_width);
    w.push_back(2);
    return w;
  }
};

inline constexpr double kKindMlp = 1.0;
inline constexpr double kKindTransformer = 2.0;

class Baseline {
 public:
  Baseline(const BaselineConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    validate_config(cfg_.base);
    RandomStream rng(derive_seed(init_seed, 0x62617365ull));
    if (cfg_.kind == BaselineKind::Transformer) {
      nn::add_attention(store_, cfg_.base.taps, cfg_.base.attn_dim, rng);
      const auto widths = cfg_.tf_head_widths();
      nn::add_mlp(store_, "head", widths, rng);
      head_layers_ = widths.size() - 1;
    } else {
      const auto widths = cfg_.mlp_widths();
      nn::add_mlp(store_, "head", widths, rng);
      head_layers_ = widths.size() - 1;
    }
  }

  Baseline(const BaselineConfig& cfg, ad::ParamSet params, const LabelScaler& scaler)
      : cfg_(cfg), scaler_(scaler) {
    validate_config(cfg_.base);
    store_.params = std::move(params);
    store_.rebuild_index();
    head_layers_ = (cfg_.kind == BaselineKind::Transformer ? cfg_.tf_head_widths()
                                                           : cfg_.mlp_widths())
                       .size() -
                   1;
  }

  const BaselineConfig& config() const { return cfg_; }
  const ad::ParamSet& params() const { return store_.params; }
  const LabelScaler& label_scaler() const { return scaler_; }
  void set_label_scaler(const LabelScaler& s) { scaler_ = s; }

  // batch_size counts single-time CIR units for every method. The MLP's
  // training units are rows, so it consumes batch_size of them per step; the
  // transformer's units are whole samples of T rows each, so it consumes
  // max(1, batch_size / T) samples per step. Both train with the shared
  // Adam/schedule and the mean-squared-Euclidean position loss on
  // standardized labels.
  TrainResult train(const DatasetSplit& split, std::size_t epochs, std::size_t batch_size,
                    std::uint64_t seed) {
    if (split.train.empty()) throw std::invalid_argument("train: empty training split");
    scaler_ = LabelScaler::fit(split.train);
    RandomStream rng(seed);
    ad::AdamState adam = ad::AdamState::for_params(store_.params);
    TrainResult result;
    ad::ParamSet last_good = store_.params;

    const std::size_t T = cfg_.base.steps;
    const std::size_t units =
        cfg_.kind == BaselineKind::Mlp ? split.train.size() * T : split.train.size();
    const std::size_t units_per_batch =
        cfg_.kind == BaselineKind::Mlp ? batch_size : std::max<std::size_t>(1, batch_size / T);
    std::vector<std::size_t> order(units);
    for (std::size_t i = 0; i < units; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      const double lr = ad::lr_schedule(epoch);
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_index(i + 1)]);
      }
      LossBreakdown sum;
      std::size_t batches = 0;
      bool bad = false;
      for (std::size_t start = 0; start < order.size() && !bad; start += units_per_batch) {
        const std::size_t count = std::min(units_per_batch, order.size() - start);
        ad::Tape tape;
        const auto bound = store_.bind(tape);
        const ad::Var loss =
            build_batch_loss(tape, bound, split.train, order, start, count);
        const double value = tape.value(loss).item();
        if (!std::isfinite(value)) {
          bad = true;
          break;
        }
        tape.backward(loss);
        std::vector<ad::Tensor> grads;
        grads.reserve(bound.vars.size());
        for (ad::Var v : bound.vars) grads.push_back(tape.grad(v));
        try {
          ad::adam_step(store_.params, grads, adam, lr);
        } catch (const std::runtime_error&) {
          bad = true;
          break;
        }
        sum.pos += value;
        sum.total += value;
        ++batches;
      }
      if (bad) {
        store_.params = last_good;
        store_.rebuild_index();
        result.diverged = true;
        break;
      }
      const double n = static_cast<double>(batches);
      result.history.push_back({{0.0, 0.0, 0.0, 0.0, sum.pos / n, sum.total / n}, lr});
      last_good = store_.params;
    }
    return result;
  }

  // Positions in meters for every step of the sample.
  std::vector<std::array<double, 2>> predict(const Sample& sample) const {
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    ad::Tensor x(sample.steps, sample.taps);
    for (std::size_t i = 0; i < x.size(); ++i) x.values[i] = sample.x[i];
    ad::Var h = tape.input(std::move(x));
    if (cfg_.kind == BaselineKind::Transformer) {
      h = nn::attention_forward(tape, bound, h, 1, sample.steps, cfg_.base.attn_dim);
    }
    const ad::Var out = nn::mlp_forward(tape, bound, "head", head_layers_, h);
    const ad::Tensor& o = tape.value(out);
    std::vector<std::array<double, 2>> result(sample.steps);
    for (std::size_t t = 0; t < sample.steps; ++t) {
      result[t] = scaler_.destandardize(o.at(t, 0), o.at(t, 1));
    }
    return result;
  }

 private:
  BaselineConfig cfg_;
  nn::ParamStore store_;
  LabelScaler scaler_;
  std::size_t head_layers_ = 0;

  ad::Var build_batch_loss(ad::Tape& tape, const nn::ParamStore::Bound& bound,
                           std::span<const Sample> train, std::span<const std::size_t> order,
                           std::size_t start, std::size_t count) const {
    const std::size_t T = cfg_.base.steps;
    const std::size_t taps = cfg_.base.taps;
    if (cfg_.kind == BaselineKind::Mlp) {
      ad::Tensor x(count, taps);
      ad::Tensor y(count, 2);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t unit = order[start + i];
        const Sample& s = train[unit / T];
        const std::size_t t = unit % T;
        for (std::size_t k = 0; k < taps; ++k) x.at(i, k) = s.x[t * taps + k];
        const auto std_xy = scaler_.standardize(s.labels[2 * t], s.labels[2 * t + 1]);
        y.at(i, 0) = std_xy[0];
        y.at(i, 1) = std_xy[1];
      }
      const ad::Var xin = tape.input(std::move(x));
      const ad::Var labels = tape.input(std::move(y));
      const ad::Var out = nn::mlp_forward(tape, bound, "head", head_layers_, xin);
      const ad::Var diff = tape.sub(out, labels);
      return tape.scale(tape.sum_all(tape.mul(diff, diff)), 1.0 / static_cast<double>(count));
    }
    ad::Tensor x(count * T, taps);
    ad::Tensor y(count * T, 2);
    for (std::size_t i = 0; i < count; ++i) {
      const Sample& s = train[order[start + i]];
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < taps; ++k) x.at(i * T + t, k) = s.x[t * taps + k];
        const auto std_xy = scaler_.standardize(s.labels[2 * t], s.labels[2 * t + 1]);
        y.at(i * T + t, 0) = std_xy[0];
        y.at(i * T + t, 1) = std_xy[1];
      }
    }
    const ad::Var xin = tape.input(std::move(x));
    const ad::Var labels = tape.input(std::move(y));
    const ad::Var r = nn::attention_forward(tape, bound, xin, count, T, cfg_.base.attn_dim);
    const ad::Var out = nn::mlp_forward(tape, bound, "head", head_layers_, r);
    const ad::Var diff = tape.sub(out, labels);
    return tape.scale(tape.sum_all(tape.mul(diff, diff)),
                      1.0 / static_cast<double>(count * T));
  }
};

// Per-coordinate mean of the training labels; the no-information floor the
// learned methods must clear.
inline std::array<double, 2> constant_mean_predictor(std::span<const Sample> train) {
  std::array<double, 2> mean{0.0, 0.0};
  double n = 0.0;
  for (const auto& s : train) {
    for (std::size_t t = 0; t < s.steps; ++t) {
      mean[0] += s.labels[2 * t];
      mean[1] += s.labels[2 * t + 1];
      n += 1.0;
    }
  }
  if (n < 1.0) throw std::invalid_argument("constant_mean_predictor: no labels");
  mean[0] /= n;
  mean[1] /= n;
  return mean;
}

inline void save_checkpoint(const Baseline& model, const std::string& path) {
  ad::ParamSet params = model.params();
  append_config_tensors(params, model.config().base, model.label_scaler(),
                        model.config().kind == BaselineKind::Mlp ? kKindMlp : kKindTransformer);
  ad::save_params(params, path);
}

inline Baseline load_baseline_checkpoint(const std::string& path) {
  const ad::ParamSet all = ad::load_params(path);
  const double kind = checkpoint_kind(all);
  if (kind != kKindMlp && kind != kKindTransformer) {
    throw IoError("checkpoint: not a baseline checkpoint: " + path);
  }
  BaselineConfig cfg;
  cfg.kind = kind == kKindMlp ? BaselineKind::Mlp : BaselineKind::Transformer;
  cfg.base = config_from_tensors(all);
  return Baseline(cfg, strip_config_tensors(all), scaler_from_tensors(all));
}

}  // namespace mudinet
