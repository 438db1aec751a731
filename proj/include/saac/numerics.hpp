// Copyright 2026 The SAAC Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SAAC_NUMERICS_HPP_
#define SAAC_NUMERICS_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "saac/common.hpp"

namespace saac {

// ---------------------------------------------------------------------------
// Counter-based random number generator (splitmix64).
//
// The generator is a pure function of (state, draw index), so copying an Rng
// freezes its stream: two copies produce identical sequences. Training code
// derives one independent stream per purpose (env, action sampling, replay,
// updates, ...) from a master seed, which keeps runs reproducible and lets
// optional components be disabled without shifting anyone else's draws.
// ---------------------------------------------------------------------------
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed + kGamma)) {}

  // Independent stream keyed by (seed, stream_id).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    Rng r(0);
    r.state_ = mix(mix(seed + kGamma) ^ mix(stream_id * kGamma + 0x1234567u));
    r.has_spare_ = false;
    return r;
  }

  std::uint64_t next_u64() {
    state_ += kGamma;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    SAAC_CHECK(n > 0, "uniform_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Standard normal via Box-Muller; the second draw of each pair is cached,
  // so draw counts stay deterministic.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Fully connected network: tanh hidden layers, identity output.
//
// Parameters live in one flat array (per layer: row-major weights, then
// biases), which keeps optimizers, Polyak averaging, snapshots and gradient
// checks trivial.
// ---------------------------------------------------------------------------
class Mlp {
 public:
  Mlp() = default;

  explicit Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    SAAC_CHECK(sizes_.size() >= 2, "Mlp needs at least input and output sizes");
    int count = 0;
    for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
      SAAC_CHECK(sizes_[k] > 0 && sizes_[k + 1] > 0,
                 "Mlp layer sizes must be positive");
      w_off_.push_back(count);
      count += sizes_[k] * sizes_[k + 1];
      b_off_.push_back(count);
      count += sizes_[k + 1];
    }
    params_.assign(count, 0.0);
  }

  // Fan-in scaled uniform weights, zero biases.
  void init_uniform(Rng& rng) {
    for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
      const int in = sizes_[k];
      const int out = sizes_[k + 1];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      double* w = &params_[w_off_[k]];
      for (int i = 0; i < out * in; ++i) w[i] = rng.uniform(-bound, bound);
      double* b = &params_[b_off_[k]];
      for (int j = 0; j < out; ++j) b[j] = 0.0;
    }
  }

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  int param_count() const { return static_cast<int>(params_.size()); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  int weight_offset(int layer) const { return w_off_[layer]; }
  int bias_offset(int layer) const { return b_off_[layer]; }

  std::vector<double> forward(std::span<const double> input) const {
    SAAC_CHECK(static_cast<int>(input.size()) == input_size(),
               "Mlp::forward: input dimension mismatch");
    std::vector<double> x(input.begin(), input.end());
    std::vector<double> y;
    for (int k = 0; k < num_layers(); ++k) {
      apply_layer(k, x, y);
      x.swap(y);
    }
    return x;
  }

  // Post-activation values per layer; acts[0] is the input.
  struct Trace {
    std::vector<std::vector<double>> acts;
  };

  std::vector<double> forward(std::span<const double> input,
                              Trace& trace) const {
    SAAC_CHECK(static_cast<int>(input.size()) == input_size(),
               "Mlp::forward: input dimension mismatch");
    trace.acts.assign(1, std::vector<double>(input.begin(), input.end()));
    trace.acts.reserve(sizes_.size());
    for (int k = 0; k < num_layers(); ++k) {
      std::vector<double> y;
      apply_layer(k, trace.acts.back(), y);
      trace.acts.push_back(std::move(y));
    }
    return trace.acts.back();
  }

  // Backpropagates output_grad through the trace. Parameter gradients are
  // accumulated into `grad` (pass an empty span to skip them); the return
  // value is the gradient with respect to the input.
  std::vector<double> backward(const Trace& trace,
                               std::span<const double> output_grad,
                               std::span<double> grad) const {
    SAAC_CHECK(trace.acts.size() == sizes_.size(),
               "Mlp::backward: trace does not match network");
    SAAC_CHECK(static_cast<int>(output_grad.size()) == output_size(),
               "Mlp::backward: output gradient dimension mismatch");
    SAAC_CHECK(grad.empty() || static_cast<int>(grad.size()) == param_count(),
               "Mlp::backward: gradient buffer size mismatch");
    std::vector<double> g(output_grad.begin(), output_grad.end());
    std::vector<double> gz, gx;
    for (int k = num_layers() - 1; k >= 0; --k) {
      const int in = sizes_[k];
      const int out = sizes_[k + 1];
      const std::vector<double>& a_in = trace.acts[k];
      const std::vector<double>& a_out = trace.acts[k + 1];
      gz.assign(g.begin(), g.end());
      if (k < num_layers() - 1) {  // tanh' = 1 - tanh^2
        for (int j = 0; j < out; ++j) gz[j] *= 1.0 - a_out[j] * a_out[j];
      }
      const double* w = &params_[w_off_[k]];
      if (!grad.empty()) {
        double* gw = &grad[w_off_[k]];
        double* gb = &grad[b_off_[k]];
        for (int j = 0; j < out; ++j) {
          const double gj = gz[j];
          double* row = gw + j * in;
          for (int i = 0; i < in; ++i) row[i] += gj * a_in[i];
          gb[j] += gj;
        }
      }
      gx.assign(in, 0.0);
      for (int j = 0; j < out; ++j) {
        const double gj = gz[j];
        const double* row = w + j * in;
        for (int i = 0; i < in; ++i) gx[i] += row[i] * gj;
      }
      g.swap(gx);
    }
    return g;
  }

 private:
  void apply_layer(int k, const std::vector<double>& x,
                   std::vector<double>& y) const {
    const int in = sizes_[k];
    const int out = sizes_[k + 1];
    y.assign(out, 0.0);
    const double* w = &params_[w_off_[k]];
    const double* b = &params_[b_off_[k]];
    for (int j = 0; j < out; ++j) {
      const double* row = w + j * in;
      double acc = b[j];
      for (int i = 0; i < in; ++i) acc += row[i] * x[i];
      y[j] = (k < num_layers() - 1) ? std::tanh(acc) : acc;
    }
  }

  std::vector<int> sizes_;
  std::vector<int> w_off_, b_off_;
  std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Adam with bias correction.
// ---------------------------------------------------------------------------
struct AdamState {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m, v;
  std::int64_t step = 0;

  AdamState(int n, double learning_rate)
      : lr(learning_rate), m(n, 0.0), v(n, 0.0) {
    SAAC_CHECK(learning_rate > 0.0, "Adam learning rate must be positive");
  }

  // One descent step. `loss_name` identifies the loss in divergence errors.
  void update(std::span<double> params, std::span<const double> grad,
              const std::string& loss_name) {
    SAAC_CHECK(params.size() == m.size() && grad.size() == m.size(),
               "Adam: shape mismatch");
    for (double g : grad) {
      if (!std::isfinite(g)) {
        throw DivergenceError(loss_name, "non-finite gradient entry");
      }
    }
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.
// ---------------------------------------------------------------------------
struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;
};

// One (parameters, analytic gradient) pair; losses over several networks pass
// one block per network.
struct ParamBlock {
  std::span<double> params;
  std::span<const double> analytic;
};

// Central differences against the supplied analytic gradient. `loss` is
// re-evaluated at perturbed parameters; it must be deterministic (freeze any
// sampling noise by copying the Rng it consumes). Relative error uses
// max(1, |a|, |n|) as denominator so near-zero gradients are compared
// absolutely.
template <typename LossFn>
GradCheckResult grad_check_blocks(LossFn&& loss, std::span<ParamBlock> blocks,
                                  double tolerance, double fd_step = 1e-5) {
  GradCheckResult result;
  std::size_t flat_index = 0;
  for (ParamBlock& block : blocks) {
    SAAC_CHECK(block.params.size() == block.analytic.size(),
               "grad_check: analytic gradient size mismatch");
    for (std::size_t i = 0; i < block.params.size(); ++i, ++flat_index) {
      const double saved = block.params[i];
      block.params[i] = saved + fd_step;
      const double lp = loss();
      block.params[i] = saved - fd_step;
      const double lm = loss();
      block.params[i] = saved;
      const double numeric = (lp - lm) / (2.0 * fd_step);
      const double analytic = block.analytic[i];
      const double denom =
          std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_index = flat_index;
      }
    }
  }
  result.pass = result.max_rel_error < tolerance;
  return result;
}

template <typename LossFn>
GradCheckResult grad_check(LossFn&& loss, std::span<double> params,
                           std::span<const double> analytic, double tolerance,
                           double fd_step = 1e-5) {
  ParamBlock block{params, analytic};
  return grad_check_blocks(loss, std::span<ParamBlock>(&block, 1), tolerance,
                           fd_step);
}

// ---------------------------------------------------------------------------
// Flat-array helpers shared by optimizers and target networks.
// ---------------------------------------------------------------------------
inline bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace saac

#endif  // SAAC_NUMERICS_HPP_
