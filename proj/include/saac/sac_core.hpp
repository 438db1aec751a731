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

#ifndef SAAC_SAC_CORE_HPP_
#define SAAC_SAC_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "saac/common.hpp"
#include "saac/numerics.hpp"
#include "saac/policy.hpp"
#include "saac/replay.hpp"

namespace saac {

inline std::vector<double> concat_state_action(std::span<const double> state,
                                               std::span<const double> action) {
  std::vector<double> x;
  x.reserve(state.size() + action.size());
  x.insert(x.end(), state.begin(), state.end());
  x.insert(x.end(), action.begin(), action.end());
  return x;
}

// ---------------------------------------------------------------------------
// Twin scalar critics over (state ++ action), with the usual min-of-heads
// trick against overestimation. Target copies are plain value copies updated
// by Polyak averaging, so no gradient can reach them.
// ---------------------------------------------------------------------------
class TwinCritic {
 public:
  TwinCritic(int state_dim, int action_dim, const std::vector<int>& hidden,
             Rng& init_rng)
      : state_dim_(state_dim), action_dim_(action_dim) {
    std::vector<int> sizes;
    sizes.push_back(state_dim + action_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    q1_ = Mlp(sizes);
    q2_ = Mlp(sizes);
    q1_.init_uniform(init_rng);
    q2_.init_uniform(init_rng);
  }

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  Mlp& q1() { return q1_; }
  Mlp& q2() { return q2_; }
  const Mlp& q1() const { return q1_; }
  const Mlp& q2() const { return q2_; }

  double value1(std::span<const double> s, std::span<const double> a) const {
    return q1_.forward(concat_state_action(s, a))[0];
  }
  double value2(std::span<const double> s, std::span<const double> a) const {
    return q2_.forward(concat_state_action(s, a))[0];
  }
  double min_value(std::span<const double> s, std::span<const double> a) const {
    return std::min(value1(s, a), value2(s, a));
  }

  // Min-head value plus its gradient with respect to the action (the
  // gradient flows through the selected head only).
  double min_value_grad_action(std::span<const double> s,
                               std::span<const double> a,
                               std::span<double> dq_da) const {
    const std::vector<double> x = concat_state_action(s, a);
    Mlp::Trace t1, t2;
    const double v1 = q1_.forward(x, t1)[0];
    const double v2 = q2_.forward(x, t2)[0];
    const Mlp& head = v1 <= v2 ? q1_ : q2_;
    const Mlp::Trace& trace = v1 <= v2 ? t1 : t2;
    const double one = 1.0;
    std::vector<double> gx =
        head.backward(trace, std::span<const double>(&one, 1), {});
    for (int i = 0; i < action_dim_; ++i) dq_da[i] = gx[state_dim_ + i];
    return std::min(v1, v2);
  }

 private:
  Mlp q1_, q2_;
  int state_dim_ = 0, action_dim_ = 0;
};

// Learned entropy temperature with its target.
struct EntropyTemp {
  double log_alpha = 0.0;
  double target_entropy = 0.0;  // H-bar
  double alpha() const { return std::exp(log_alpha); }
};

// ---------------------------------------------------------------------------
// Soft Bellman target
//   y = r + gamma * (1 - terminated) * (min Q_target(s', a') - alpha log pi(a'|s'))
// with a' drawn fresh from the policy. No gradient flows anywhere: the result
// is a plain vector of constants.
// ---------------------------------------------------------------------------
template <typename Policy, typename RewardFn>
std::vector<double> soft_target_with(const std::vector<Transition>& batch,
                                     const Policy& policy,
                                     const TwinCritic& target_critic,
                                     double alpha, double gamma, Rng& rng,
                                     RewardFn&& reward_of) {
  SAAC_CHECK(!batch.empty(), "soft_target: empty batch");
  std::vector<double> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& tr = batch[b];
    double v = reward_of(tr);
    if (!tr.terminated) {
      const ActionSample next = policy.sample_action(tr.next_state, rng);
      v += gamma * (target_critic.min_value(tr.next_state, next.action) -
                    alpha * next.log_prob);
    }
    if (!std::isfinite(v)) {
      throw DivergenceError("soft_target", "non-finite target value");
    }
    y[b] = v;
  }
  return y;
}

template <typename Policy>
std::vector<double> soft_target(const std::vector<Transition>& batch,
                                const Policy& policy,
                                const TwinCritic& target_critic, double alpha,
                                double gamma, Rng& rng) {
  return soft_target_with(batch, policy, target_critic, alpha, gamma, rng,
                          [](const Transition& tr) { return tr.reward; });
}

// Mean over the batch and over both heads of 0.5 (Q - y)^2. Gradients go
// into the online heads only (targets are constants).
inline double critic_loss(const std::vector<Transition>& batch,
                          const TwinCritic& critic,
                          std::span<const double> targets,
                          std::vector<double>* grad_q1,
                          std::vector<double>* grad_q2) {
  SAAC_CHECK(batch.size() == targets.size(), "critic_loss: target size");
  const double inv = 1.0 / (2.0 * static_cast<double>(batch.size()));
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::vector<double> x =
        concat_state_action(batch[b].state, batch[b].action);
    Mlp::Trace t1, t2;
    const double v1 = critic.q1().forward(x, t1)[0];
    const double v2 = critic.q2().forward(x, t2)[0];
    const double d1 = v1 - targets[b];
    const double d2 = v2 - targets[b];
    loss += inv * 0.5 * (d1 * d1 + d2 * d2);
    if (grad_q1 != nullptr) {
      const double g1 = inv * d1;
      critic.q1().backward(t1, std::span<const double>(&g1, 1), *grad_q1);
    }
    if (grad_q2 != nullptr) {
      const double g2 = inv * d2;
      critic.q2().backward(t2, std::span<const double>(&g2, 1), *grad_q2);
    }
  }
  return loss;
}

namespace internal {

// A snapshot whose sigma sits at the clamp floor has density-gradient
// components of order 1/sigma^2; one such spike poisons Adam's second
// moments for thousands of steps. The repulsion value is exact; only its
// gradient through the sampled action is clamped.
constexpr double kSnapshotGradClip = 100.0;

// Shared actor-loss path:
//   mean_b [ alpha log pi(a|s) - Q(s, a)
//            - beta (log pi_old_self(a|s) - log pi_old_other(a|s)) ]
// with a reparameterized and the repulsion log-ratio evaluated at frozen
// snapshots (gradient reaches the learner only through the action path).
// The beta == 0 case executes exactly the base arithmetic, so disabling the
// repulsion reproduces plain SAC bit for bit.
//
// QFn: double(state, action, span dq_da) evaluating Q and its action
// gradient without accumulating critic gradients.
template <typename QFn>
double actor_loss_core(const std::vector<Transition>& batch,
                       const SquashedGaussianPolicy& policy, QFn&& q_fn,
                       double alpha, double beta,
                       const SquashedGaussianPolicy* old_self,
                       const SquashedGaussianPolicy* old_other, Rng& rng,
                       std::vector<double>* grad) {
  SAAC_CHECK(!batch.empty(), "actor loss: empty batch");
  const int d = policy.action_dim();
  const double inv = 1.0 / static_cast<double>(batch.size());
  const bool repulsion = beta != 0.0 && old_self != nullptr &&
                         old_other != nullptr;
  double loss = 0.0;
  std::vector<double> dq_da(d), g_u(d), g_mu(d), g_ls(d);
  std::vector<double> d_u(d), d_mu(d), d_ls(d);
  std::vector<double> g_self(d), g_other(d);
  for (const Transition& tr : batch) {
    const SquashedGaussianPolicy::SampleEval ev =
        policy.sample_detailed(tr.state, rng);
    const double q = q_fn(tr.state, ev.action, dq_da);
    loss += inv * (alpha * ev.log_prob - q);
    if (repulsion) {
      const double lp_self =
          old_self->log_prob_pre_squash_grad(tr.state, ev.pre_squash, g_self);
      const double lp_other = old_other->log_prob_pre_squash_grad(
          tr.state, ev.pre_squash, g_other);
      loss += inv * (-beta) * (lp_self - lp_other);
      for (int i = 0; i < d; ++i) {
        g_self[i] = std::clamp(g_self[i], -kSnapshotGradClip,
                               kSnapshotGradClip);
        g_other[i] = std::clamp(g_other[i], -kSnapshotGradClip,
                                kSnapshotGradClip);
      }
    }
    if (grad != nullptr) {
      policy.log_prob_partials(ev, d_u, d_mu, d_ls);
      for (int i = 0; i < d; ++i) {
        g_u[i] = inv * alpha * d_u[i] -
                 inv * dq_da[i] * policy.action_jacobian(ev, i);
        if (repulsion) {
          g_u[i] += inv * (-beta) * (g_self[i] - g_other[i]);
        }
        g_mu[i] = inv * alpha * d_mu[i];
        g_ls[i] = inv * alpha * d_ls[i];
      }
      policy.backward_sample(ev, g_u, g_mu, g_ls, *grad);
    }
  }
  if (!std::isfinite(loss)) {
    throw DivergenceError("actor_loss", "non-finite loss value");
  }
  return loss;
}

}  // namespace internal

// Base SAC actor loss: mean of alpha log pi(a|s) - min Q(s, a).
inline double base_policy_loss(const std::vector<Transition>& batch,
                               const SquashedGaussianPolicy& policy,
                               const TwinCritic& critic, double alpha,
                               Rng& rng, std::vector<double>* grad_theta) {
  return internal::actor_loss_core(
      batch, policy,
      [&critic](std::span<const double> s, std::span<const double> a,
                std::span<double> dq_da) {
        return critic.min_value_grad_action(s, a, dq_da);
      },
      alpha, /*beta=*/0.0, nullptr, nullptr, rng, grad_theta);
}

// Temperature loss J(alpha) = E[log alpha (-log pi(a|s) - H_bar)] over fresh
// samples. Linear in log alpha, so the gradient is the mean bracket.
inline double alpha_loss(const std::vector<Transition>& batch,
                         const SquashedGaussianPolicy& policy,
                         const EntropyTemp& temp, Rng& rng,
                         double* grad_log_alpha) {
  SAAC_CHECK(!batch.empty(), "alpha_loss: empty batch");
  double bracket = 0.0;
  for (const Transition& tr : batch) {
    const ActionSample s = policy.sample_action(tr.state, rng);
    bracket += -s.log_prob - temp.target_entropy;
  }
  bracket /= static_cast<double>(batch.size());
  if (grad_log_alpha != nullptr) *grad_log_alpha = bracket;
  return temp.log_alpha * bracket;
}

// target <- tau * online + (1 - tau) * target, elementwise.
inline void polyak_update(std::span<const double> online,
                          std::span<double> target, double tau) {
  SAAC_CHECK(online.size() == target.size(), "polyak: size mismatch");
  SAAC_CHECK(tau > 0.0 && tau <= 1.0, "polyak: tau must be in (0, 1]");
  for (std::size_t i = 0; i < online.size(); ++i) {
    target[i] = tau * online[i] + (1.0 - tau) * target[i];
  }
}

inline void polyak_update(const Mlp& online, Mlp& target, double tau) {
  polyak_update(online.params(), target.params(), tau);
}

inline void polyak_update(const TwinCritic& online, TwinCritic& target,
                          double tau) {
  polyak_update(online.q1(), target.q1(), tau);
  polyak_update(online.q2(), target.q2(), tau);
}

}  // namespace saac

#endif  // SAAC_SAC_CORE_HPP_
