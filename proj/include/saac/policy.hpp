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

#ifndef SAAC_POLICY_HPP_
#define SAAC_POLICY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "saac/common.hpp"
#include "saac/numerics.hpp"

namespace saac {

// One stochastic draw from a policy. The pre-squash value and noise are kept
// so losses can differentiate through the sample (reparameterization).
struct ActionSample {
  std::vector<double> action;
  double log_prob = 0.0;
  std::vector<double> pre_squash;  // u with action = shift + scale * tanh(u)
  std::vector<double> noise;       // eps with u = mu + sigma * eps
};

namespace internal {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)

// log(1 - tanh(u)^2), stable for large |u|.
inline double log_one_minus_tanh_sq(double u) {
  const double au = std::fabs(u);
  return 2.0 * (std::numbers::ln2 - au - std::log1p(std::exp(-2.0 * au)));
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Squashed Gaussian policy.
//
// A tanh-headed trunk maps the state to (mu, log_sigma) over action
// dimensions; actions are a = shift + scale * tanh(mu + sigma * eps). The
// density includes the exact tanh Jacobian correction. log_sigma is clamped
// to [-20, 2] (gradients pass through only when unclamped), and the
// pre-squash value is clamped to |u| <= 18 so tanh never saturates to the
// bound in double precision: sampled actions are strictly interior.
// ---------------------------------------------------------------------------
class SquashedGaussianPolicy {
 public:
  static constexpr double kLogSigmaMin = -20.0;
  static constexpr double kLogSigmaMax = 2.0;
  static constexpr double kPreSquashMax = 18.0;

  SquashedGaussianPolicy(int state_dim, int action_dim,
                         const std::vector<int>& hidden,
                         std::vector<double> action_low,
                         std::vector<double> action_high, Rng& init_rng)
      : low_(std::move(action_low)),
        high_(std::move(action_high)),
        action_dim_(action_dim) {
    SAAC_CHECK(state_dim > 0 && action_dim > 0, "policy dimensions");
    SAAC_CHECK(static_cast<int>(low_.size()) == action_dim &&
                   static_cast<int>(high_.size()) == action_dim,
               "policy: action bound dimensions");
    scale_.resize(action_dim_);
    shift_.resize(action_dim_);
    for (int d = 0; d < action_dim_; ++d) {
      SAAC_CHECK(low_[d] < high_[d], "policy: empty action interval");
      scale_[d] = 0.5 * (high_[d] - low_[d]);
      shift_[d] = 0.5 * (high_[d] + low_[d]);
    }
    std::vector<int> sizes;
    sizes.push_back(state_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(2 * action_dim);  // mu then log_sigma
    trunk_ = Mlp(sizes);
    trunk_.init_uniform(init_rng);
  }

  int state_dim() const { return trunk_.input_size(); }
  int action_dim() const { return action_dim_; }
  Mlp& trunk() { return trunk_; }
  const Mlp& trunk() const { return trunk_; }

  // Replaces the trunk (snapshot loading); head dimensions must match.
  void set_trunk(Mlp trunk) {
    SAAC_CHECK(trunk.input_size() == trunk_.input_size() &&
                   trunk.output_size() == 2 * action_dim_,
               "set_trunk: network dimensions do not match the policy");
    trunk_ = std::move(trunk);
  }
  std::span<const double> action_low() const { return low_; }
  std::span<const double> action_high() const { return high_; }

  // Trunk forward retaining everything the gradient path needs.
  struct SampleEval {
    Mlp::Trace trace;
    std::vector<double> mu, log_sigma, sigma;
    std::vector<std::uint8_t> clamped;  // log_sigma clamp active per dim
    std::vector<double> noise, pre_squash, action;
    double log_prob = 0.0;
  };

  SampleEval sample_detailed(std::span<const double> state, Rng& rng) const {
    SampleEval ev;
    heads(state, &ev.trace, ev.mu, ev.log_sigma, &ev.clamped);
    const int d = action_dim_;
    ev.sigma.resize(d);
    ev.noise.resize(d);
    ev.pre_squash.resize(d);
    ev.action.resize(d);
    double logp = 0.0;
    for (int i = 0; i < d; ++i) {
      ev.sigma[i] = std::exp(ev.log_sigma[i]);
      const double eps = rng.normal();
      ev.noise[i] = eps;
      const double u = ev.mu[i] + ev.sigma[i] * eps;
      ev.pre_squash[i] = u;
      // The action map saturates at |u| = kPreSquashMax so tanh never
      // rounds to the bound; the density keeps the exact unclamped u.
      const double uc = std::clamp(u, -kPreSquashMax, kPreSquashMax);
      ev.action[i] = shift_[i] + scale_[i] * std::tanh(uc);
      logp += -internal::kHalfLog2Pi - ev.log_sigma[i] - 0.5 * eps * eps;
      logp -= std::log(scale_[i]) + internal::log_one_minus_tanh_sq(u);
    }
    ev.log_prob = logp;
    return ev;
  }

  ActionSample sample_action(std::span<const double> state, Rng& rng) const {
    SampleEval ev = sample_detailed(state, rng);
    return ActionSample{std::move(ev.action), ev.log_prob,
                        std::move(ev.pre_squash), std::move(ev.noise)};
  }

  // Squashed mean, used for deterministic evaluation.
  std::vector<double> mean_action(std::span<const double> state) const {
    std::vector<double> mu, ls;
    heads(state, nullptr, mu, ls, nullptr);
    std::vector<double> a(action_dim_);
    for (int i = 0; i < action_dim_; ++i) {
      a[i] = shift_[i] + scale_[i] * std::tanh(mu[i]);
    }
    return a;
  }

  // Exact density at an arbitrary interior action. Actions on or outside the
  // bounds have no finite pre-squash coordinate and are rejected.
  double log_prob(std::span<const double> state,
                  std::span<const double> action) const {
    SAAC_CHECK(static_cast<int>(action.size()) == action_dim_,
               "log_prob: action dimension");
    std::vector<double> mu, ls;
    heads(state, nullptr, mu, ls, nullptr);
    double logp = 0.0;
    for (int i = 0; i < action_dim_; ++i) {
      const double squashed = (action[i] - shift_[i]) / scale_[i];
      if (!(squashed > -1.0 && squashed < 1.0)) {
        throw std::domain_error(
            "log_prob: action on or outside the bound (atanh undefined)");
      }
      const double u = std::atanh(squashed);
      const double sigma = std::exp(ls[i]);
      const double z = (u - mu[i]) / sigma;
      logp += -internal::kHalfLog2Pi - ls[i] - 0.5 * z * z;
      logp -= std::log(scale_[i]) + std::log1p(-squashed * squashed);
    }
    return logp;
  }

  // Density at the action whose shared pre-squash coordinates are u. Both
  // players use the same bounds, so u identifies the action for either
  // policy without an atanh round trip.
  double log_prob_pre_squash(std::span<const double> state,
                             std::span<const double> u) const {
    std::vector<double> mu, ls;
    heads(state, nullptr, mu, ls, nullptr);
    double logp = 0.0;
    for (int i = 0; i < action_dim_; ++i) {
      const double sigma = std::exp(ls[i]);
      const double z = (u[i] - mu[i]) / sigma;
      logp += -internal::kHalfLog2Pi - ls[i] - 0.5 * z * z;
      logp -= std::log(scale_[i]) + internal::log_one_minus_tanh_sq(u[i]);
    }
    return logp;
  }

  // Same, also writing d log_prob / d u (this policy's parameters held
  // fixed). Used for the repulsion term, where the gradient reaches the
  // learner only through the sampled action path.
  double log_prob_pre_squash_grad(std::span<const double> state,
                                  std::span<const double> u,
                                  std::span<double> grad_u) const {
    std::vector<double> mu, ls;
    heads(state, nullptr, mu, ls, nullptr);
    double logp = 0.0;
    for (int i = 0; i < action_dim_; ++i) {
      const double sigma = std::exp(ls[i]);
      const double z = (u[i] - mu[i]) / sigma;
      logp += -internal::kHalfLog2Pi - ls[i] - 0.5 * z * z;
      logp -= std::log(scale_[i]) + internal::log_one_minus_tanh_sq(u[i]);
      grad_u[i] = -z / sigma + 2.0 * std::tanh(u[i]);
    }
    return logp;
  }

  // Partials of log pi(a|s) at a reparameterized sample, with u, mu and
  // log_sigma treated as independent inputs; the caller composes the chain
  // via backward_sample. Derivation: log pi = logN(u; mu, sigma)
  // - sum log(scale (1 - tanh(u)^2)) with u = mu + sigma eps.
  void log_prob_partials(const SampleEval& ev, std::span<double> d_u,
                         std::span<double> d_mu,
                         std::span<double> d_log_sigma) const {
    for (int i = 0; i < action_dim_; ++i) {
      const double eps = ev.noise[i];
      d_u[i] = -eps / ev.sigma[i] + 2.0 * std::tanh(ev.pre_squash[i]);
      d_mu[i] = eps / ev.sigma[i];
      d_log_sigma[i] = -1.0 + eps * eps;
    }
  }

  // Accumulates trunk-parameter gradients for one sample. grad_u is dL/du;
  // grad_mu and grad_log_sigma are the direct (fixed-u) contributions. The
  // chain u = mu + sigma * eps gives
  //   dL/dmu        = grad_u + grad_mu
  //   dL/dlog_sigma = grad_u * sigma * eps + grad_log_sigma  (zero if clamped)
  void backward_sample(const SampleEval& ev, std::span<const double> grad_u,
                       std::span<const double> grad_mu,
                       std::span<const double> grad_log_sigma,
                       std::span<double> grad_params) const {
    std::vector<double> out(2 * action_dim_);
    for (int i = 0; i < action_dim_; ++i) {
      out[i] = grad_u[i] + grad_mu[i];
      double gls = grad_u[i] * ev.sigma[i] * ev.noise[i] + grad_log_sigma[i];
      if (ev.clamped[i]) gls = 0.0;
      out[action_dim_ + i] = gls;
    }
    trunk_.backward(ev.trace, out, grad_params);
  }

  // d action / d u for one dimension of a sample (zero past the saturation
  // cap, matching the clamped action map).
  double action_jacobian(const SampleEval& ev, int dim) const {
    if (std::fabs(ev.pre_squash[dim]) > kPreSquashMax) return 0.0;
    const double t = std::tanh(ev.pre_squash[dim]);
    return scale_[dim] * (1.0 - t) * (1.0 + t);
  }

  // Clamped (mu, log_sigma) heads without gradient bookkeeping.
  void moments(std::span<const double> state, std::vector<double>& mu,
               std::vector<double>& log_sigma) const {
    heads(state, nullptr, mu, log_sigma, nullptr);
  }

 private:
  void heads(std::span<const double> state, Mlp::Trace* trace,
             std::vector<double>& mu, std::vector<double>& log_sigma,
             std::vector<std::uint8_t>* clamped) const {
    std::vector<double> out;
    if (trace != nullptr) {
      out = trunk_.forward(state, *trace);
    } else {
      out = trunk_.forward(state);
    }
    if (!all_finite(out)) {
      throw DivergenceError("policy", "non-finite trunk output");
    }
    mu.assign(out.begin(), out.begin() + action_dim_);
    log_sigma.assign(out.begin() + action_dim_, out.end());
    if (clamped != nullptr) clamped->assign(action_dim_, 0);
    for (int i = 0; i < action_dim_; ++i) {
      if (log_sigma[i] < kLogSigmaMin) {
        log_sigma[i] = kLogSigmaMin;
        if (clamped != nullptr) (*clamped)[i] = 1;
      } else if (log_sigma[i] > kLogSigmaMax) {
        log_sigma[i] = kLogSigmaMax;
        if (clamped != nullptr) (*clamped)[i] = 1;
      }
    }
  }

  Mlp trunk_;
  std::vector<double> low_, high_, scale_, shift_;
  int action_dim_ = 0;
};

// Monte-Carlo estimate of E_s KL(pi_a(.|s) || pi_b(.|s)) over a batch of
// states, n_samples draws per state, actions from pi_a. The tanh Jacobians
// cancel in the log ratio, so the estimate is computed pre-squash.
inline double kl_estimate(const SquashedGaussianPolicy& pi_a,
                          const SquashedGaussianPolicy& pi_b,
                          const std::vector<std::vector<double>>& states,
                          Rng& rng, int n_samples) {
  SAAC_CHECK(pi_a.action_dim() == pi_b.action_dim(),
             "kl_estimate: policies must share the action space");
  SAAC_CHECK(!states.empty() && n_samples > 0, "kl_estimate: empty input");
  const int d = pi_a.action_dim();
  double total = 0.0;
  std::vector<double> mu_a, ls_a, mu_b, ls_b;
  for (const std::vector<double>& s : states) {
    pi_a.moments(s, mu_a, ls_a);
    pi_b.moments(s, mu_b, ls_b);
    for (int n = 0; n < n_samples; ++n) {
      for (int i = 0; i < d; ++i) {
        const double za = rng.normal();
        const double u = mu_a[i] + std::exp(ls_a[i]) * za;
        const double zb = (u - mu_b[i]) / std::exp(ls_b[i]);
        total += (ls_b[i] - ls_a[i]) + 0.5 * (zb * zb - za * za);
      }
    }
  }
  return total / (static_cast<double>(states.size()) * n_samples);
}

}  // namespace saac

#endif  // SAAC_POLICY_HPP_
