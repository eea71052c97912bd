#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mudinet/autodiff.hpp"
#include "mudinet/checkpoint.hpp"
#include "mudinet/optimizer.hpp"
#include "mudinet/rng.hpp"
#include "mudinet/trajectory.hpp"

namespace mudinet {

struct ModelConfig {
  std::size_t taps = 300;
  std::size_t steps = 110;     // T
  std::size_t attn_dim = 64;   // d
  std::size_t latent_s = 16;
  std::size_t latent_d = 16;
  std::size_t latent_u = 32;
  std::size_t hidden_width = 128;
  std::size_t hidden_layers = 2;
  double prior_eps_s = 0.1;
  double prior_eps_d = 0.5;
  double prior_eps_u = 1.0;
  double kl_weight = 1.0;       // beta on the KL block of the loss
  double kl_anneal_frac = 0.5;  // beta ramps 0 -> kl_weight over this fraction of training
};

// The prior-uncertainty ordering eps_u > eps_d > eps_s is what separates the
// three latent groups; configs violating it are rejected outright.
inline void validate_config(const ModelConfig& c) {
  auto dim = [](std::size_t v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string("ModelConfig: ") + name + " must be >= 1");
  };
  dim(c.taps, "taps");
  dim(c.steps, "steps");
  dim(c.attn_dim, "attn_dim");
  dim(c.latent_s, "latent_s");
  dim(c.latent_d, "latent_d");
  dim(c.latent_u, "latent_u");
  dim(c.hidden_width, "hidden_width");
  dim(c.hidden_layers, "hidden_layers");
  if (!(c.prior_eps_s > 0.0) || !(c.prior_eps_d > c.prior_eps_s) ||
      !(c.prior_eps_u > c.prior_eps_d)) {
    throw std::invalid_argument("ModelConfig: prior stddevs must satisfy eps_u > eps_d > eps_s > 0");
  }
  if (!(c.kl_weight >= 0.0)) throw std::invalid_argument("ModelConfig: kl_weight must be >= 0");
  if (!(c.kl_anneal_frac >= 0.0) || !(c.kl_anneal_frac <= 1.0)) {
    throw std::invalid_argument("ModelConfig: kl_anneal_frac must be in [0, 1]");
  }
}

// Annealed KL weight: ramps linearly from 0 to kl_weight over the first
// kl_anneal_frac of the epoch budget, then stays at kl_weight.
inline double annealed_kl_weight(const ModelConfig& c, std::size_t epoch, std::size_t epochs) {
  if (c.kl_anneal_frac <= 0.0 || epochs == 0) return c.kl_weight;
  const double ramp = c.kl_anneal_frac * static_cast<double>(epochs);
  return c.kl_weight * std::min(1.0, static_cast<double>(epoch) / ramp);
}

// Diagonal Gaussian over rows; variance kept strictly positive by storing
// log-variance.
struct LatentGaussian {
  ad::Tensor mean;
  ad::Tensor log_var;

  ad::Tensor variance() const {
    ad::Tensor v = log_var;
    for (double& x : v.values) x = std::exp(x);
    return v;
  }
};

struct LossBreakdown {
  double rec = 0.0;
  double kl_s = 0.0;
  double kl_d = 0.0;
  double kl_u = 0.0;
  double pos = 0.0;
  double total = 0.0;
};

// Closed-form KL(q || N(0, eps^2 I)), summed over latent dimensions and
// averaged over rows.
inline double kl_gaussian(const LatentGaussian& q, double prior_eps) {
  if (!(prior_eps > 0.0)) throw std::invalid_argument("kl_gaussian: prior_eps must be > 0");
  require_same_shape(q.mean, q.log_var, "kl_gaussian");
  const double e2 = prior_eps * prior_eps;
  double sum = 0.0;
  for (std::size_t i = 0; i < q.mean.size(); ++i) {
    const double s2 = std::exp(q.log_var.values[i]);
    const double mu = q.mean.values[i];
    sum += 0.5 * (s2 / e2 + mu * mu / e2 - 1.0 + std::log(e2) - q.log_var.values[i]);
  }
  return sum / static_cast<double>(q.mean.rows);
}

// z = mean + stddev ⊙ eta with standard-normal eta.
inline ad::Tensor reparameterize(const LatentGaussian& q, const ad::Tensor& eta) {
  require_same_shape(q.mean, eta, "reparameterize");
  ad::Tensor z = q.mean;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z.values[i] += std::exp(0.5 * q.log_var.values[i]) * eta.values[i];
  }
  return z;
}

inline ad::Tensor reparameterize(const LatentGaussian& q, RandomStream& rng) {
  ad::Tensor eta(q.mean.rows, q.mean.cols);
  for (double& v : eta.values) v = rng.normal();
  return reparameterize(q, eta);
}

// Per-coordinate standardization of position labels for the training loss;
// metric reporting de-standardizes back to meters.
struct LabelScaler {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> stddev{1.0, 1.0};

  static LabelScaler fit(std::span<const Sample> samples) {
    LabelScaler s;
    double n = 0.0;
    std::array<double, 2> sum{0.0, 0.0}, sq{0.0, 0.0};
    for (const auto& smp : samples) {
      for (std::size_t t = 0; t < smp.steps; ++t) {
        for (int c = 0; c < 2; ++c) {
          const double v = smp.labels[2 * t + c];
          sum[c] += v;
          sq[c] += v * v;
        }
        n += 1.0;
      }
    }
    if (n < 1.0) throw std::invalid_argument("LabelScaler: no labels");
    for (int c = 0; c < 2; ++c) {
      s.mean[c] = sum[c] / n;
      const double var = sq[c] / n - s.mean[c] * s.mean[c];
      s.stddev[c] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  std::array<double, 2> standardize(double x, double y) const {
    return {(x - mean[0]) / stddev[0], (y - mean[1]) / stddev[1]};
  }
  std::array<double, 2> destandardize(double sx, double sy) const {
    return {sx * stddev[0] + mean[0], sy * stddev[1] + mean[1]};
  }
};

namespace nn {

// Parameter registration/lookup shared by the model and the baselines.
class ParamStore {
 public:
  ad::ParamSet params;

  void add(std::string name, ad::Tensor t) {
    index_[name] = params.size();
    params.push_back({std::move(name), std::move(t)});
  }

  ad::Tensor& at(const std::string& name) { return params[index_.at(name)].value; }
  const ad::Tensor& at(const std::string& name) const { return params[index_.at(name)].value; }

  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < params.size(); ++i) index_[params[i].name] = i;
  }

  // Push every parameter onto a tape; vars are parallel to `params`.
  struct Bound {
    const ParamStore* store = nullptr;
    ad::Tape* tape = nullptr;
    std::vector<ad::Var> vars;

    ad::Var operator[](const std::string& name) const {
      return vars[store->index_.at(name)];
    }
  };

  Bound bind(ad::Tape& tape) const {
    Bound b;
    b.store = this;
    b.tape = &tape;
    b.vars.reserve(params.size());
    for (const auto& p : params) b.vars.push_back(tape.input(p.value));
    return b;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  friend struct Bound;
};

inline ad::Tensor init_weight(std::size_t fan_in, std::size_t fan_out, RandomStream& rng,
                              double gain = 1.0) {
  ad::Tensor w(fan_in, fan_out);
  const double stddev = gain * std::sqrt(1.0 / static_cast<double>(fan_in));
  for (double& v : w.values) v = rng.normal(0.0, stddev);
  return w;
}

// Registers an MLP `prefix/k/{w,b}` with ReLU-ready He gain on hidden layers.
inline void add_mlp(ParamStore& store, const std::string& prefix,
                    std::span<const std::size_t> widths, RandomStream& rng) {
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const bool hidden = k + 2 < widths.size();
    store.add(prefix + "/" + std::to_string(k) + "/w",
              init_weight(widths[k], widths[k + 1], rng, hidden ? std::numbers::sqrt2 : 1.0));
    store.add(prefix + "/" + std::to_string(k) + "/b", ad::Tensor(1, widths[k + 1]));
  }
}

// ReLU between layers, linear output.
inline ad::Var mlp_forward(ad::Tape& tape, const ParamStore::Bound& p, const std::string& prefix,
                           std::size_t layer_count, ad::Var x) {
  ad::Var h = x;
  for (std::size_t k = 0; k < layer_count; ++k) {
    const std::string base = prefix + "/" + std::to_string(k) + "/";
    h = tape.linear(h, p[base + "w"], p[base + "b"]);
    if (k + 1 < layer_count) h = tape.relu(h);
  }
  return h;
}

// Temporal self-attention block shared by MudiNet and the transformer
// baseline: per-sample scaled dot-product attention over the T rows, value
// residual, then layer norm with learned gain/bias.
inline void add_attention(ParamStore& store, std::size_t in_dim, std::size_t d,
                          RandomStream& rng, const std::string& prefix = "attn") {
  store.add(prefix + "/wq", init_weight(in_dim, d, rng));
  store.add(prefix + "/wk", init_weight(in_dim, d, rng));
  store.add(prefix + "/wv", init_weight(in_dim, d, rng));
  ad::Tensor gain(1, d);
  for (double& v : gain.values) v = 1.0;
  store.add(prefix + "/ln_gain", gain);
  store.add(prefix + "/ln_bias", ad::Tensor(1, d));
}

inline ad::Var attention_forward(ad::Tape& tape, const ParamStore::Bound& p, ad::Var x,
                                 std::size_t batch, std::size_t steps, std::size_t d,
                                 const std::string& prefix = "attn") {
  const ad::Var q = tape.matmul(x, p[prefix + "/wq"]);
  const ad::Var k = tape.matmul(x, p[prefix + "/wk"]);
  const ad::Var v = tape.matmul(x, p[prefix + "/wv"]);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<ad::Var> outputs;
  outputs.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const ad::Var qb = tape.slice_rows(q, b * steps, steps);
    const ad::Var kb = tape.slice_rows(k, b * steps, steps);
    const ad::Var vb = tape.slice_rows(v, b * steps, steps);
    const ad::Var score = tape.scale(tape.matmul_nt(qb, kb), inv_sqrt_d);
    const ad::Var weights = tape.softmax_rows(score);
    const ad::Var pooled = tape.matmul(weights, vb);
    outputs.push_back(tape.add(pooled, vb));  // residual from the value path
  }
  const ad::Var stacked = batch == 1 ? outputs[0] : tape.concat_rows(outputs);
  const ad::Var normed = tape.layer_norm_rows(stacked);
  return tape.add_row_broadcast(tape.mul_row_broadcast(normed, p[prefix + "/ln_gain"]),
                                p[prefix + "/ln_bias"]);
}

// In-graph KL(q || N(0, eps^2 I)) with the same row-mean convention as
// kl_gaussian.
inline ad::Var kl_node(ad::Tape& tape, ad::Var mu, ad::Var lv, double eps, std::size_t rows) {
  const double inv_e2 = 1.0 / (eps * eps);
  const ad::Var var_term = tape.scale(tape.exp(lv), inv_e2);
  const ad::Var mean_term = tape.scale(tape.mul(mu, mu), inv_e2);
  const ad::Var shifted = tape.add_const(tape.add(var_term, mean_term),
                                         std::log(eps * eps) - 1.0);
  return tape.scale(tape.sum_all(tape.sub(shifted, lv)), 0.5 / static_cast<double>(rows));
}

}  // namespace nn

// Gaussian noise draws for one reparameterized forward pass.
struct NoiseDraws {
  ad::Tensor eta_s;  // B x latent_s
  ad::Tensor eta_d;  // B x latent_d
  ad::Tensor eta_u;  // (B*T) x latent_u

  static NoiseDraws draw(std::size_t batch, std::size_t steps, const ModelConfig& cfg,
                         RandomStream& rng) {
    NoiseDraws n;
    n.eta_s = ad::Tensor(batch, cfg.latent_s);
    n.eta_d = ad::Tensor(batch, cfg.latent_d);
    n.eta_u = ad::Tensor(batch * steps, cfg.latent_u);
    for (double& v : n.eta_s.values) v = rng.normal();
    for (double& v : n.eta_d.values) v = rng.normal();
    for (double& v : n.eta_u.values) v = rng.normal();
    return n;
  }
};

struct EpochStats {
  LossBreakdown loss;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  bool diverged = false;
};

// Task-guided disentangling positioning network: temporal self-attention
// features feed the environment posteriors q(z_s | r), q(z_d | r); the raw
// per-step inputs feed q(z_u | x); the decoder reconstructs x from all three
// latent groups while the position head reads only (z_u, z_s).
class MudiNet {
 public:
  MudiNet(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    validate_config(cfg_);
    RandomStream rng(derive_seed(init_seed, 0x6d7564696eull));
    nn::add_attention(store_, cfg_.taps, cfg_.attn_dim, rng);

    const auto stack = [&](std::size_t in, std::size_t out) {
      std::vector<std::size_t> widths{in};
      for (std::size_t i = 0; i < cfg_.hidden_layers; ++i) widths.push_back(cfg_.hidden_width);
      widths.push_back(out);
      return widths;
    };
    const auto trunk = [&](std::size_t in) {
      std::vector<std::size_t> widths{in};
      for (std::size_t i = 0; i < cfg_.hidden_layers; ++i) widths.push_back(cfg_.hidden_width);
      return widths;
    };

    auto add_trunk_with_relu_out = [&](const std::string& prefix, std::size_t in) {
      nn::add_mlp(store_, prefix, trunk(in), rng);
    };

    // UE branch: per-step trunk + Gaussian heads.
    add_trunk_with_relu_out("ue", cfg_.taps);
    nn::add_mlp(store_, "ue_mu", std::array<std::size_t, 2>{cfg_.hidden_width, cfg_.latent_u}, rng);
    nn::add_mlp(store_, "ue_lv", std::array<std::size_t, 2>{cfg_.hidden_width, cfg_.latent_u}, rng);
    // Environment branch over the temporal mean of r.
    add_trunk_with_relu_out("env", cfg_.attn_dim);
    nn::add_mlp(store_, "env_s_mu", std::array<std::size_t, 2>{cfg_.hidden_width, cfg_.latent_s}, rng);
    nn::add_mlp(store_, "env_s_lv", std::array<std::size_t, 2>{cfg_.hidden_width, cfg_.latent_s}, rng);
    nn::add_mlp(store_, "env_d_mu", std::array<std::size_t, 2>{cfg_.hidden_width, cfg_.latent_d}, rng);
    nn::add_mlp(store_, "env_d_lv", std::array<std::size_t, 2>{cfg_.hidden_width, cfg_.latent_d}, rng);
    // Symmetric reconstruction and the position head.
    nn::add_mlp(store_, "dec", stack(cfg_.latent_u + cfg_.latent_d + cfg_.latent_s, cfg_.taps), rng);
    nn::add_mlp(store_, "pos", stack(cfg_.latent_u + cfg_.latent_s, 2), rng);

    // Mean heads start near zero so the initial posterior means sit at the
    // prior means and the KL terms cannot dominate the first epochs.
    for (const char* head : {"ue_mu/0/w", "env_s_mu/0/w", "env_d_mu/0/w"}) {
      for (double& v : store_.at(head).values) v *= 0.01;
    }
    // Environment posteriors start at their priors; the UE posterior starts
    // with a tenth of its prior spread so the position head sees a clean
    // signal from the first step (its KL pulls the spread back up during
    // training).
    store_.at("ue_lv/0/b").values.assign(cfg_.latent_u, 2.0 * std::log(0.1 * cfg_.prior_eps_u));
    store_.at("env_s_lv/0/b").values.assign(cfg_.latent_s, 2.0 * std::log(cfg_.prior_eps_s));
    store_.at("env_d_lv/0/b").values.assign(cfg_.latent_d, 2.0 * std::log(cfg_.prior_eps_d));
  }

  MudiNet(const ModelConfig& cfg, ad::ParamSet params, const LabelScaler& scaler)
      : cfg_(cfg), scaler_(scaler) {
    validate_config(cfg_);
    store_.params = std::move(params);
    store_.rebuild_index();
  }

  const ModelConfig& config() const { return cfg_; }
  const ad::ParamSet& params() const { return store_.params; }
  const LabelScaler& label_scaler() const { return scaler_; }
  void set_label_scaler(const LabelScaler& s) { scaler_ = s; }

  // ---- spec-level forward operations ----

  // Self-attention features for one sample, x: T x taps -> r: T x attn_dim.
  ad::Tensor self_attention(const ad::Tensor& x) const {
    if (x.rows == 0) throw std::invalid_argument("self_attention: empty input");
    if (x.cols != cfg_.taps) {
      throw std::invalid_argument("self_attention: input shape " + ad::shape_str(x) +
                                  " does not match taps=" + std::to_string(cfg_.taps));
    }
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    const ad::Var r =
        nn::attention_forward(tape, bound, tape.input(x), 1, x.rows, cfg_.attn_dim);
    return tape.value(r);
  }

  // Environment posteriors from attention features r: T x attn_dim.
  std::pair<LatentGaussian, LatentGaussian> encode_env(const ad::Tensor& r) const {
    if (r.rows == 0) throw std::invalid_argument("encode_env: empty input");
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    const ad::Var pooled = tape.mean_rows_grouped(tape.input(r), r.rows);
    const ad::Var trunk =
        tape.relu(nn::mlp_forward(tape, bound, "env", cfg_.hidden_layers, pooled));
    LatentGaussian qs{tape.value(nn::mlp_forward(tape, bound, "env_s_mu", 1, trunk)),
                      tape.value(nn::mlp_forward(tape, bound, "env_s_lv", 1, trunk))};
    LatentGaussian qd{tape.value(nn::mlp_forward(tape, bound, "env_d_mu", 1, trunk)),
                      tape.value(nn::mlp_forward(tape, bound, "env_d_lv", 1, trunk))};
    return {qs, qd};
  }

  // Per-step UE posterior; rows are independent time steps.
  LatentGaussian encode_ue(const ad::Tensor& x_rows) const {
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    const ad::Var trunk =
        tape.relu(nn::mlp_forward(tape, bound, "ue", cfg_.hidden_layers, tape.input(x_rows)));
    return {tape.value(nn::mlp_forward(tape, bound, "ue_mu", 1, trunk)),
            tape.value(nn::mlp_forward(tape, bound, "ue_lv", 1, trunk))};
  }

  // Reconstruction of per-step profiles from one latent row set.
  ad::Tensor decode(const ad::Tensor& z_u, const ad::Tensor& z_s, const ad::Tensor& z_d) const {
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    ad::Var zs = tape.input(z_s);
    ad::Var zd = tape.input(z_d);
    if (z_s.rows == 1 && z_u.rows > 1) zs = tape.repeat_rows(zs, z_u.rows);
    if (z_d.rows == 1 && z_u.rows > 1) zd = tape.repeat_rows(zd, z_u.rows);
    const ad::Var zc = tape.concat_cols(tape.input(z_u), tape.concat_cols(zd, zs));
    return tape.value(nn::mlp_forward(tape, bound, "dec", cfg_.hidden_layers + 1, zc));
  }

  // Position estimates (standardized label space) from (z_u, z_s); z_d has no
  // data path into this head.
  ad::Tensor position_head(const ad::Tensor& z_u, const ad::Tensor& z_s) const {
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    ad::Var zs = tape.input(z_s);
    if (z_s.rows == 1 && z_u.rows > 1) zs = tape.repeat_rows(zs, z_u.rows);
    const ad::Var zc = tape.concat_cols(tape.input(z_u), zs);
    return tape.value(nn::mlp_forward(tape, bound, "pos", cfg_.hidden_layers + 1, zc));
  }

  // ---- training ----

  LossBreakdown total_loss(std::span<const Sample> batch, RandomStream& rng) const {
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    const NoiseDraws noise = NoiseDraws::draw(batch.size(), cfg_.steps, cfg_, rng);
    const auto g = build_loss_graph(tape, bound, batch, noise, nullptr);
    return extract_losses(tape, g);
  }

  // batch_size counts single-time CIR units, the same accounting every
  // method uses; a multi-time sample contributes T units, so each step here
  // consumes max(1, batch_size / T) whole samples.
  TrainResult train(const DatasetSplit& split, std::size_t epochs, std::size_t batch_size,
                    std::uint64_t seed) {
    if (split.train.empty()) throw std::invalid_argument("train: empty training split");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    const std::size_t samples_per_batch = std::max<std::size_t>(1, batch_size / cfg_.steps);
    scaler_ = LabelScaler::fit(split.train);
    RandomStream rng(seed);
    ad::AdamState adam = ad::AdamState::for_params(store_.params);

    TrainResult result;
    ad::ParamSet last_good = store_.params;
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      const double lr = ad::lr_schedule(epoch);
      const double beta = annealed_kl_weight(cfg_, epoch, epochs);
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[rng.uniform_index(i + 1)]);
      }
      LossBreakdown sum;
      std::size_t batches = 0;
      bool bad = false;
      for (std::size_t start = 0; start < order.size() && !bad; start += samples_per_batch) {
        const std::size_t count = std::min(samples_per_batch, order.size() - start);
        std::vector<Sample> batch;
        batch.reserve(count);
        for (std::size_t k = 0; k < count; ++k) batch.push_back(split.train[order[start + k]]);

        ad::Tape tape;
        const auto bound = store_.bind(tape);
        const NoiseDraws noise = NoiseDraws::draw(count, cfg_.steps, cfg_, rng);
        const auto g = build_loss_graph(tape, bound, batch, noise, nullptr, beta);
        const LossBreakdown lb = extract_losses(tape, g);
        if (!std::isfinite(lb.total)) {
          bad = true;
          break;
        }
        tape.backward(g.total);
        std::vector<ad::Tensor> grads;
        grads.reserve(bound.vars.size());
        for (ad::Var v : bound.vars) grads.push_back(tape.grad(v));
        try {
          ad::adam_step(store_.params, grads, adam, lr);
        } catch (const std::runtime_error&) {
          bad = true;
          break;
        }
        sum.rec += lb.rec;
        sum.kl_s += lb.kl_s;
        sum.kl_d += lb.kl_d;
        sum.kl_u += lb.kl_u;
        sum.pos += lb.pos;
        sum.total += lb.total;
        ++batches;
      }
      if (bad) {
        store_.params = last_good;  // divergence: roll back to the last epoch
        store_.rebuild_index();
        result.diverged = true;
        break;
      }
      const double n = static_cast<double>(batches);
      result.history.push_back(
          {{sum.rec / n, sum.kl_s / n, sum.kl_d / n, sum.kl_u / n, sum.pos / n, sum.total / n},
           lr});
      last_good = store_.params;
    }
    return result;
  }

  // Deterministic inference on one sample using latent means; outputs in
  // meters.
  std::vector<std::array<double, 2>> predict(const Sample& sample) const {
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    const std::size_t steps = sample.steps;
    ad::Tensor x(steps, sample.taps);
    for (std::size_t i = 0; i < x.size(); ++i) x.values[i] = sample.x[i];

    const ad::Var xin = tape.input(x);
    const ad::Var r = nn::attention_forward(tape, bound, xin, 1, steps, cfg_.attn_dim);
    const ad::Var pooled = tape.mean_rows_grouped(r, steps);
    const ad::Var env =
        tape.relu(nn::mlp_forward(tape, bound, "env", cfg_.hidden_layers, pooled));
    const ad::Var z_s = nn::mlp_forward(tape, bound, "env_s_mu", 1, env);
    const ad::Var ue =
        tape.relu(nn::mlp_forward(tape, bound, "ue", cfg_.hidden_layers, xin));
    const ad::Var z_u = nn::mlp_forward(tape, bound, "ue_mu", 1, ue);
    const ad::Var zc = tape.concat_cols(z_u, tape.repeat_rows(z_s, steps));
    const ad::Var pos = nn::mlp_forward(tape, bound, "pos", cfg_.hidden_layers + 1, zc);

    const ad::Tensor& out = tape.value(pos);
    std::vector<std::array<double, 2>> result(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      result[t] = scaler_.destandardize(out.at(t, 0), out.at(t, 1));
    }
    return result;
  }

  // Training-style forward with injected environment draws; returns
  // (positions in standardized space, reconstruction) so tests can check that
  // z_d perturbations leave positions bit-identical while moving x_hat.
  std::pair<ad::Tensor, ad::Tensor> forward_with_draws(const Sample& sample,
                                                       const ad::Tensor& z_s_draw,
                                                       const ad::Tensor& z_d_draw) const {
    ad::Tape tape;
    const auto bound = store_.bind(tape);
    ad::Tensor x(sample.steps, sample.taps);
    for (std::size_t i = 0; i < x.size(); ++i) x.values[i] = sample.x[i];
    const ad::Var xin = tape.input(x);
    const ad::Var ue = tape.relu(nn::mlp_forward(tape, bound, "ue", cfg_.hidden_layers, xin));
    const ad::Var z_u = nn::mlp_forward(tape, bound, "ue_mu", 1, ue);
    const ad::Var zs = tape.repeat_rows(tape.input(z_s_draw), sample.steps);
    const ad::Var zd = tape.repeat_rows(tape.input(z_d_draw), sample.steps);
    const ad::Var dec_in = tape.concat_cols(z_u, tape.concat_cols(zd, zs));
    const ad::Var xhat = nn::mlp_forward(tape, bound, "dec", cfg_.hidden_layers + 1, dec_in);
    const ad::Var pos_in = tape.concat_cols(z_u, zs);
    const ad::Var pos = nn::mlp_forward(tape, bound, "pos", cfg_.hidden_layers + 1, pos_in);
    return {tape.value(pos), tape.value(xhat)};
  }

  // Loss graph on an externally-managed tape; exposed for gradient checks.
  struct LossGraph {
    ad::Var rec, kl_s, kl_d, kl_u, pos, total;
  };

  LossGraph build_loss_graph(ad::Tape& tape, const nn::ParamStore::Bound& bound,
                             std::span<const Sample> batch, const NoiseDraws& noise,
                             const ad::Tensor* z_d_override) const {
    return build_loss_graph(tape, bound, batch, noise, z_d_override, cfg_.kl_weight);
  }

  LossGraph build_loss_graph(ad::Tape& tape, const nn::ParamStore::Bound& bound,
                             std::span<const Sample> batch, const NoiseDraws& noise,
                             const ad::Tensor* z_d_override, double kl_weight) const {
    const std::size_t B = batch.size();
    const std::size_t T = cfg_.steps;
    if (B == 0) throw std::invalid_argument("build_loss_graph: empty batch");
    for (const auto& s : batch) {
      if (s.steps != T || s.taps != cfg_.taps) {
        throw std::invalid_argument("build_loss_graph: sample dims disagree with config");
      }
    }
    ad::Tensor x(B * T, cfg_.taps);
    ad::Tensor y(B * T, 2);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t k = 0; k < cfg_.taps; ++k) {
          x.at(b * T + t, k) = batch[b].x[t * cfg_.taps + k];
        }
        const auto std_xy =
            scaler_.standardize(batch[b].labels[2 * t], batch[b].labels[2 * t + 1]);
        y.at(b * T + t, 0) = std_xy[0];
        y.at(b * T + t, 1) = std_xy[1];
      }
    }

    const ad::Var xin = tape.input(std::move(x));
    const ad::Var labels = tape.input(std::move(y));
    const ad::Var r = nn::attention_forward(tape, bound, xin, B, T, cfg_.attn_dim);
    const ad::Var pooled = tape.mean_rows_grouped(r, T);
    const ad::Var env = tape.relu(nn::mlp_forward(tape, bound, "env", cfg_.hidden_layers, pooled));
    const ad::Var mu_s = nn::mlp_forward(tape, bound, "env_s_mu", 1, env);
    const ad::Var lv_s = nn::mlp_forward(tape, bound, "env_s_lv", 1, env);
    const ad::Var mu_d = nn::mlp_forward(tape, bound, "env_d_mu", 1, env);
    const ad::Var lv_d = nn::mlp_forward(tape, bound, "env_d_lv", 1, env);
    const ad::Var ue = tape.relu(nn::mlp_forward(tape, bound, "ue", cfg_.hidden_layers, xin));
    const ad::Var mu_u = nn::mlp_forward(tape, bound, "ue_mu", 1, ue);
    const ad::Var lv_u = nn::mlp_forward(tape, bound, "ue_lv", 1, ue);

    auto reparam = [&](ad::Var mu, ad::Var lv, const ad::Tensor& eta) {
      return tape.add(mu, tape.mul(tape.exp(tape.scale(lv, 0.5)), tape.input(eta)));
    };
    const ad::Var z_s = reparam(mu_s, lv_s, noise.eta_s);
    const ad::Var z_d = z_d_override ? tape.input(*z_d_override)
                                     : reparam(mu_d, lv_d, noise.eta_d);
    const ad::Var z_u = reparam(mu_u, lv_u, noise.eta_u);

    const ad::Var zs_rows = tape.repeat_rows(z_s, T);
    const ad::Var zd_rows = tape.repeat_rows(z_d, T);
    const ad::Var dec_in = tape.concat_cols(z_u, tape.concat_cols(zd_rows, zs_rows));
    const ad::Var xhat = nn::mlp_forward(tape, bound, "dec", cfg_.hidden_layers + 1, dec_in);
    const ad::Var pos_in = tape.concat_cols(z_u, zs_rows);
    const ad::Var pos_out = nn::mlp_forward(tape, bound, "pos", cfg_.hidden_layers + 1, pos_in);

    LossGraph g;
    g.rec = tape.mse(xhat, xin);
    // KL terms enter the loss as per-dimension rates so their scale is
    // commensurate with the per-entry reconstruction MSE regardless of the
    // configured latent sizes.
    g.kl_s = tape.scale(nn::kl_node(tape, mu_s, lv_s, cfg_.prior_eps_s, B),
                        1.0 / static_cast<double>(cfg_.latent_s));
    g.kl_d = tape.scale(nn::kl_node(tape, mu_d, lv_d, cfg_.prior_eps_d, B),
                        1.0 / static_cast<double>(cfg_.latent_d));
    g.kl_u = tape.scale(nn::kl_node(tape, mu_u, lv_u, cfg_.prior_eps_u, B * T),
                        1.0 / static_cast<double>(cfg_.latent_u));
    const ad::Var diff = tape.sub(pos_out, labels);
    g.pos = tape.scale(tape.sum_all(tape.mul(diff, diff)), 1.0 / static_cast<double>(B * T));
    const ad::Var kl_total = tape.add(tape.add(g.kl_s, g.kl_d), g.kl_u);
    g.total = tape.add(tape.add(g.rec, tape.scale(kl_total, kl_weight)), g.pos);
    return g;
  }

  nn::ParamStore& store() { return store_; }
  const nn::ParamStore& store() const { return store_; }

 private:
  ModelConfig cfg_;
  nn::ParamStore store_;
  LabelScaler scaler_;

  static LossBreakdown extract_losses(const ad::Tape& tape, const LossGraph& g) {
    LossBreakdown lb;
    lb.rec = tape.value(g.rec).item();
    lb.kl_s = tape.value(g.kl_s).item();
    lb.kl_d = tape.value(g.kl_d).item();
    lb.kl_u = tape.value(g.kl_u).item();
    lb.pos = tape.value(g.pos).item();
    lb.total = tape.value(g.total).item();
    return lb;
  }
};

// Training history CSV: epoch, rec, kl_s, kl_d, kl_u, pos, total, lr.
inline void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("history: cannot open for writing: " + path);
  out << "epoch,rec,kl_s,kl_d,kl_u,pos,total,lr\n";
  out.precision(17);
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& h = history[e];
    out << e << ',' << h.loss.rec << ',' << h.loss.kl_s << ',' << h.loss.kl_d << ','
        << h.loss.kl_u << ',' << h.loss.pos << ',' << h.loss.total << ',' << h.lr << '\n';
  }
}

// ---- checkpointing (parameters + config in one MDPW file) ----

inline constexpr double kKindMudinet = 0.0;

inline void append_config_tensors(ad::ParamSet& params, const ModelConfig& cfg,
                                  const LabelScaler& scaler, double kind) {
  params.push_back({"config/dims",
                    ad::Tensor(1, 8,
                               {static_cast<double>(cfg.taps), static_cast<double>(cfg.steps),
                                static_cast<double>(cfg.attn_dim), static_cast<double>(cfg.latent_s),
                                static_cast<double>(cfg.latent_d), static_cast<double>(cfg.latent_u),
                                static_cast<double>(cfg.hidden_width),
                                static_cast<double>(cfg.hidden_layers)})});
  params.push_back({"config/priors",
                    ad::Tensor(1, 5, {cfg.prior_eps_s, cfg.prior_eps_d, cfg.prior_eps_u,
                                      cfg.kl_weight, cfg.kl_anneal_frac})});
  params.push_back({"config/label_scaler",
                    ad::Tensor(1, 4, {scaler.mean[0], scaler.mean[1], scaler.stddev[0],
                                      scaler.stddev[1]})});
  params.push_back({"config/kind", ad::Tensor::scalar(kind)});
}

inline ModelConfig config_from_tensors(const ad::ParamSet& params) {
  const ad::Tensor& dims = ad::find_param(params, "config/dims");
  const ad::Tensor& priors = ad::find_param(params, "config/priors");
  ModelConfig cfg;
  cfg.taps = static_cast<std::size_t>(dims.values[0]);
  cfg.steps = static_cast<std::size_t>(dims.values[1]);
  cfg.attn_dim = static_cast<std::size_t>(dims.values[2]);
  cfg.latent_s = static_cast<std::size_t>(dims.values[3]);
  cfg.latent_d = static_cast<std::size_t>(dims.values[4]);
  cfg.latent_u = static_cast<std::size_t>(dims.values[5]);
  cfg.hidden_width = static_cast<std::size_t>(dims.values[6]);
  cfg.hidden_layers = static_cast<std::size_t>(dims.values[7]);
  cfg.prior_eps_s = priors.values[0];
  cfg.prior_eps_d = priors.values[1];
  cfg.prior_eps_u = priors.values[2];
  cfg.kl_weight = priors.values[3];
  cfg.kl_anneal_frac = priors.values[4];
  return cfg;
}

inline LabelScaler scaler_from_tensors(const ad::ParamSet& params) {
  const ad::Tensor& t = ad::find_param(params, "config/label_scaler");
  LabelScaler s;
  s.mean = {t.values[0], t.values[1]};
  s.stddev = {t.values[2], t.values[3]};
  return s;
}

inline double checkpoint_kind(const ad::ParamSet& params) {
  return ad::find_param(params, "config/kind").item();
}

inline ad::ParamSet strip_config_tensors(const ad::ParamSet& params) {
  ad::ParamSet out;
  for (const auto& p : params) {
    if (p.name.rfind("config/", 0) != 0) out.push_back(p);
  }
  return out;
}

inline void save_checkpoint(const MudiNet& model, const std::string& path) {
  ad::ParamSet params = model.params();
  append_config_tensors(params, model.config(), model.label_scaler(), kKindMudinet);
  ad::save_params(params, path);
}

inline MudiNet load_mudinet_checkpoint(const std::string& path) {
  const ad::ParamSet all = ad::load_params(path);
  if (checkpoint_kind(all) != kKindMudinet) {
    throw IoError("checkpoint: not a MudiNet checkpoint: " + path);
  }
  return MudiNet(config_from_tensors(all), strip_config_tensors(all), scaler_from_tensors(all));
}

}  // namespace mudinet
