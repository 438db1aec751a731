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

#ifndef SAAC_ADVERSARY_HPP_
#define SAAC_ADVERSARY_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "saac/common.hpp"
#include "saac/numerics.hpp"
#include "saac/policy.hpp"
#include "saac/replay.hpp"
#include "saac/sac_core.hpp"

namespace saac {

enum class AdversaryVariant { kNone, kCons, kMsd, kCvar };

inline AdversaryVariant parse_variant(const std::string& name) {
  if (name == "none") return AdversaryVariant::kNone;
  if (name == "cons") return AdversaryVariant::kCons;
  if (name == "msd") return AdversaryVariant::kMsd;
  if (name == "cvar") return AdversaryVariant::kCvar;
  throw ConfigError("unknown adversary variant: " + name);
}

inline const char* variant_name(AdversaryVariant v) {
  switch (v) {
    case AdversaryVariant::kNone: return "none";
    case AdversaryVariant::kCons: return "cons";
    case AdversaryVariant::kMsd: return "msd";
    case AdversaryVariant::kCvar: return "cvar";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Quantile critic: one network mapping (state ++ action) to N quantile
// values at the uniform fractions tau_i = i/N with midpoints
// tau_hat_i = (tau_i + tau_{i+1}) / 2.
// ---------------------------------------------------------------------------
class QuantileCritic {
 public:
  QuantileCritic(int state_dim, int action_dim, const std::vector<int>& hidden,
                 int n_quantiles, Rng& init_rng)
      : state_dim_(state_dim), action_dim_(action_dim), n_(n_quantiles) {
    SAAC_CHECK(n_ >= 2, "quantile critic needs at least two quantiles");
    std::vector<int> sizes;
    sizes.push_back(state_dim + action_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(n_);
    net_ = Mlp(sizes);
    net_.init_uniform(init_rng);
  }

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int n_quantiles() const { return n_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  double fraction(int i) const { return static_cast<double>(i) / n_; }
  double midpoint(int i) const { return (2.0 * i + 1.0) / (2.0 * n_); }

  std::vector<double> quantiles(std::span<const double> s,
                                std::span<const double> a) const {
    return net_.forward(concat_state_action(s, a));
  }

  // Scalar value for the agent side: the quantile mean.
  double mean_value(std::span<const double> s, std::span<const double> a) const {
    const std::vector<double> z = quantiles(s, a);
    double m = 0.0;
    for (double v : z) m += v;
    return m / n_;
  }

  double mean_value_grad_action(std::span<const double> s,
                                std::span<const double> a,
                                std::span<double> dq_da) const {
    const std::vector<double> x = concat_state_action(s, a);
    Mlp::Trace trace;
    const std::vector<double> z = net_.forward(x, trace);
    const std::vector<double> out(n_, 1.0 / n_);
    const std::vector<double> gx = net_.backward(trace, out, {});
    for (int i = 0; i < action_dim_; ++i) dq_da[i] = gx[state_dim_ + i];
    double m = 0.0;
    for (double v : z) m += v;
    return m / n_;
  }

 private:
  Mlp net_;
  int state_dim_ = 0, action_dim_ = 0, n_ = 0;
};

// Learned repulsion temperature with the adversary-bonus target A-bar.
struct BetaTemp {
  double log_beta = 0.0;
  double target_bonus = 1.0;  // A-bar
  double beta() const { return std::exp(log_beta); }
};

// ---------------------------------------------------------------------------
// CVaR functional of a quantile approximation.
//
// Q = -sum_i w_i z_i with w_i the exact integral of g'(tau) over the i-th
// cell, g(tau) = min(tau / lambda, 1):  w_i = g(tau_{i+1}) - g(tau_i).
// The weights sum to one for any lambda, so a constant quantile vector c
// maps to -c, and cells lying entirely above lambda get zero weight
// (the truncated right tail).
// ---------------------------------------------------------------------------
inline std::vector<double> cvar_weights(int n_quantiles, double lambda) {
  SAAC_CHECK(lambda > 0.0 && lambda <= 1.0, "cvar: lambda must be in (0, 1]");
  std::vector<double> w(n_quantiles);
  auto g = [lambda](double tau) { return std::min(tau / lambda, 1.0); };
  for (int i = 0; i < n_quantiles; ++i) {
    const double t0 = static_cast<double>(i) / n_quantiles;
    const double t1 = static_cast<double>(i + 1) / n_quantiles;
    w[i] = g(t1) - g(t0);
  }
  return w;
}

inline double cvar_from_quantiles(std::span<const double> z, double lambda) {
  const std::vector<double> w = cvar_weights(static_cast<int>(z.size()), lambda);
  double q = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) q -= w[i] * z[i];
  return q;
}

inline double cvar_q(const QuantileCritic& critic, std::span<const double> s,
                     std::span<const double> a, double lambda) {
  return cvar_from_quantiles(critic.quantiles(s, a), lambda);
}

// ---------------------------------------------------------------------------
// Mean-Standard-Deviation risk values: q_k + lambda * std(q), with the
// standard deviation taken over the batch (population convention).
// lambda = -1 emphasizes the lower tail.
// ---------------------------------------------------------------------------
inline std::vector<double> msd_values(std::span<const double> q,
                                      double lambda) {
  if (q.size() < 2) {
    throw std::invalid_argument(
        "msd: batch variance undefined for fewer than two values");
  }
  double mean = 0.0;
  for (double v : q) mean += v;
  mean /= static_cast<double>(q.size());
  double var = 0.0;
  for (double v : q) var += (v - mean) * (v - mean);
  var /= static_cast<double>(q.size());
  const double sd = std::sqrt(var);
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = q[i] + lambda * sd;
  return out;
}

// MSD view over the agent's critic, evaluated at the batch state-action
// pairs.
inline std::vector<double> msd_q(const std::vector<Transition>& batch,
                                 const TwinCritic& agent_critic,
                                 double lambda_msd) {
  std::vector<double> q(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    q[b] = agent_critic.min_value(batch[b].state, batch[b].action);
  }
  return msd_values(q, lambda_msd);
}

// ---------------------------------------------------------------------------
// Constraint critic (Cons variant): soft Bellman residual with r_c in place
// of the task reward and next actions from the adversary's policy.
// ---------------------------------------------------------------------------
template <typename Policy>
std::vector<double> cons_soft_target(const std::vector<Transition>& batch,
                                     const Policy& policy_omega,
                                     const TwinCritic& cons_target,
                                     double alpha, double gamma, Rng& rng) {
  return soft_target_with(
      batch, policy_omega, cons_target, alpha, gamma, rng,
      [](const Transition& tr) { return tr.constraint_cost; });
}

inline double cons_critic_loss(const std::vector<Transition>& batch,
                               const TwinCritic& cons_critic,
                               std::span<const double> targets,
                               std::vector<double>* grad_q1,
                               std::vector<double>* grad_q2) {
  return critic_loss(batch, cons_critic, targets, grad_q1, grad_q2);
}

// ---------------------------------------------------------------------------
// The active risk critic behind the adversary's actor loss. Exactly one
// variant's resources are set; Cons owns a dedicated twin critic, MSD views
// the agent's critic, CVaR reads the shared quantile critic.
// ---------------------------------------------------------------------------
struct AdversaryCritic {
  AdversaryVariant variant = AdversaryVariant::kCons;
  const TwinCritic* cons = nullptr;        // kCons: Q_psi online heads
  const TwinCritic* agent_twin = nullptr;  // kMsd: agent critic view
  double lambda_msd = -1.0;
  const QuantileCritic* quantile = nullptr;  // kCvar
  double lambda_cvar = 0.25;
};

namespace internal {

// MSD actor loss needs two passes because the batch standard deviation
// couples every sample's Q value.
inline double msd_actor_loss(const std::vector<Transition>& batch,
                             const SquashedGaussianPolicy& policy,
                             const TwinCritic& agent_critic, double lambda,
                             double alpha, Rng& rng,
                             std::vector<double>* grad) {
  if (batch.size() < 2) {
    throw std::invalid_argument(
        "msd: batch variance undefined for fewer than two values");
  }
  const int d = policy.action_dim();
  const std::size_t n = batch.size();
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<SquashedGaussianPolicy::SampleEval> evs(n);
  std::vector<std::vector<double>> dq_da(n, std::vector<double>(d));
  std::vector<double> q(n);
  for (std::size_t b = 0; b < n; ++b) {
    evs[b] = policy.sample_detailed(batch[b].state, rng);
    q[b] = agent_critic.min_value_grad_action(batch[b].state, evs[b].action,
                                              dq_da[b]);
  }
  double mean = 0.0;
  for (double v : q) mean += v;
  mean *= inv;
  double var = 0.0;
  for (double v : q) var += (v - mean) * (v - mean);
  var *= inv;
  const double sd = std::sqrt(var);

  double loss = 0.0;
  std::vector<double> g_u(d), g_mu(d), g_ls(d), d_u(d), d_mu(d), d_ls(d);
  for (std::size_t b = 0; b < n; ++b) {
    const double q_psi = q[b] + lambda * sd;
    loss += inv * (alpha * evs[b].log_prob - q_psi);
    if (grad != nullptr) {
      // d loss / d q_b gathers the direct -q_b/n term plus q_b's effect on
      // the shared standard deviation across all n summands.
      double coeff = -inv;
      if (sd > 0.0) coeff -= inv * lambda * (q[b] - mean) / sd;
      policy.log_prob_partials(evs[b], d_u, d_mu, d_ls);
      for (int i = 0; i < d; ++i) {
        g_u[i] = inv * alpha * d_u[i] +
                 coeff * dq_da[b][i] * policy.action_jacobian(evs[b], i);
        g_mu[i] = inv * alpha * d_mu[i];
        g_ls[i] = inv * alpha * d_ls[i];
      }
      policy.backward_sample(evs[b], g_u, g_mu, g_ls, *grad);
    }
  }
  if (!std::isfinite(loss)) {
    throw DivergenceError("adversary_policy_loss", "non-finite loss value");
  }
  return loss;
}

}  // namespace internal

// Adversary actor loss J(pi_omega) = E[alpha log pi_omega(a|s) - Q_psi(s, a)]
// with a reparameterized from pi_omega and Q_psi dispatched on the variant.
// Gradients reach omega only; agent networks are read-only here.
inline double adversary_policy_loss(const std::vector<Transition>& batch,
                                    const SquashedGaussianPolicy& policy_omega,
                                    const AdversaryCritic& critic, double alpha,
                                    Rng& rng, std::vector<double>* grad_omega) {
  switch (critic.variant) {
    case AdversaryVariant::kCons: {
      SAAC_CHECK(critic.cons != nullptr, "adversary: missing cons critic");
      return internal::actor_loss_core(
          batch, policy_omega,
          [&critic](std::span<const double> s, std::span<const double> a,
                    std::span<double> dq_da) {
            return critic.cons->min_value_grad_action(s, a, dq_da);
          },
          alpha, 0.0, nullptr, nullptr, rng, grad_omega);
    }
    case AdversaryVariant::kMsd: {
      SAAC_CHECK(critic.agent_twin != nullptr,
                 "adversary: missing agent critic view");
      return internal::msd_actor_loss(batch, policy_omega, *critic.agent_twin,
                                      critic.lambda_msd, alpha, rng,
                                      grad_omega);
    }
    case AdversaryVariant::kCvar: {
      SAAC_CHECK(critic.quantile != nullptr,
                 "adversary: missing quantile critic");
      const QuantileCritic& qc = *critic.quantile;
      const std::vector<double> w =
          cvar_weights(qc.n_quantiles(), critic.lambda_cvar);
      return internal::actor_loss_core(
          batch, policy_omega,
          [&qc, &w](std::span<const double> s, std::span<const double> a,
                    std::span<double> dq_da) {
            const std::vector<double> x = concat_state_action(s, a);
            Mlp::Trace trace;
            const std::vector<double> z = qc.net().forward(x, trace);
            std::vector<double> out(w.size());
            for (std::size_t i = 0; i < w.size(); ++i) out[i] = -w[i];
            const std::vector<double> gx = qc.net().backward(trace, out, {});
            for (int i = 0; i < qc.action_dim(); ++i) {
              dq_da[i] = gx[qc.state_dim() + i];
            }
            double q = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) q -= w[i] * z[i];
            return q;
          },
          alpha, 0.0, nullptr, nullptr, rng, grad_omega);
    }
    case AdversaryVariant::kNone:
      break;
  }
  throw UsageError("adversary_policy_loss: no active variant");
}

// ---------------------------------------------------------------------------
// Quantile critic training: distributional soft Bellman targets
//   y_j = r + gamma (1 - terminated) (Z_target,j(s', a') - alpha log pi(a'|s'))
// against the quantile-regression Huber loss (threshold 1), averaged over
// every (prediction, target) pair.
// ---------------------------------------------------------------------------
template <typename Policy>
std::vector<std::vector<double>> quantile_targets(
    const std::vector<Transition>& batch, const QuantileCritic& target,
    const Policy& policy, double alpha, double gamma, Rng& rng) {
  const int n = target.n_quantiles();
  std::vector<std::vector<double>> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& tr = batch[b];
    y[b].assign(n, tr.reward);
    if (!tr.terminated) {
      const ActionSample next = policy.sample_action(tr.next_state, rng);
      const std::vector<double> z = target.quantiles(tr.next_state, next.action);
      for (int j = 0; j < n; ++j) {
        y[b][j] += gamma * (z[j] - alpha * next.log_prob);
      }
    }
    for (double v : y[b]) {
      if (!std::isfinite(v)) {
        throw DivergenceError("quantile_critic_loss", "non-finite target");
      }
    }
  }
  return y;
}

inline double quantile_regression_loss(
    const std::vector<Transition>& batch, const QuantileCritic& critic,
    const std::vector<std::vector<double>>& targets,
    std::vector<double>* grad) {
  SAAC_CHECK(batch.size() == targets.size(), "quantile loss: target size");
  const int n = critic.n_quantiles();
  const double inv =
      1.0 / (static_cast<double>(batch.size()) * n * n);
  double loss = 0.0;
  std::vector<double> out(n);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::vector<double> x =
        concat_state_action(batch[b].state, batch[b].action);
    Mlp::Trace trace;
    const std::vector<double> z = critic.net().forward(x, trace);
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const double tau_hat = critic.midpoint(i);
      for (int j = 0; j < n; ++j) {
        const double delta = targets[b][j] - z[i];
        const double weight = std::fabs(tau_hat - (delta < 0.0 ? 1.0 : 0.0));
        const double huber =
            std::fabs(delta) <= 1.0 ? 0.5 * delta * delta
                                    : std::fabs(delta) - 0.5;
        loss += inv * weight * huber;
        if (grad != nullptr) {
          const double dhuber =
              std::fabs(delta) <= 1.0 ? delta : (delta < 0.0 ? -1.0 : 1.0);
          out[i] += -inv * weight * dhuber;  // d delta / d z_i = -1
        }
      }
    }
    if (grad != nullptr) critic.net().backward(trace, out, *grad);
  }
  if (!std::isfinite(loss)) {
    throw DivergenceError("quantile_critic_loss", "non-finite loss value");
  }
  return loss;
}

template <typename Policy>
double quantile_critic_loss(const std::vector<Transition>& batch,
                            const QuantileCritic& critic,
                            const QuantileCritic& target,
                            const Policy& policy_theta, double alpha,
                            double gamma, Rng& rng,
                            std::vector<double>* grad) {
  const std::vector<std::vector<double>> y =
      quantile_targets(batch, target, policy_theta, alpha, gamma, rng);
  return quantile_regression_loss(batch, critic, y, grad);
}

// Temperature loss J(beta) = E[log beta (KL(pi_theta || pi_omega) - A_bar)],
// KL estimated from batch states with actions from pi_theta. Linear in
// log beta.
inline double beta_loss(const std::vector<Transition>& batch,
                        const SquashedGaussianPolicy& policy_theta,
                        const SquashedGaussianPolicy& policy_omega,
                        const BetaTemp& temp, int kl_samples, Rng& rng,
                        double* grad_log_beta) {
  SAAC_CHECK(!batch.empty(), "beta_loss: empty batch");
  std::vector<std::vector<double>> states;
  states.reserve(batch.size());
  for (const Transition& tr : batch) states.push_back(tr.state);
  const double kl =
      kl_estimate(policy_theta, policy_omega, states, rng, kl_samples);
  const double bracket = kl - temp.target_bonus;
  if (grad_log_beta != nullptr) *grad_log_beta = bracket;
  return temp.log_beta * bracket;
}

}  // namespace saac

#endif  // SAAC_ADVERSARY_HPP_
