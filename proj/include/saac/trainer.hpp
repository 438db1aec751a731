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

#ifndef SAAC_TRAINER_HPP_
#define SAAC_TRAINER_HPP_

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saac/adversary.hpp"
#include "saac/common.hpp"
#include "saac/envs.hpp"
#include "saac/numerics.hpp"
#include "saac/policy.hpp"
#include "saac/replay.hpp"
#include "saac/sac_core.hpp"

namespace saac {

// Purpose-keyed RNG streams. Disabling a component (the adversary, say)
// leaves every other stream untouched, which is what makes the beta = 0
// reduction to plain SAC exact.
enum StreamId : std::uint64_t {
  kStreamEnv = 1,
  kStreamAction = 2,
  kStreamReplay = 3,
  kStreamAgent = 4,
  kStreamAdversary = 5,
  kStreamEval = 6,
  kStreamMetrics = 7,
  kStreamStates = 8,
  kStreamInitAgent = 9,
  kStreamInitAdversary = 10,
};

struct TrainConfig {
  EnvConfig env;
  std::uint64_t seed = 0;
  std::string adversary = "cons";  // none | cons | msd | cvar
  long total_steps = 30000;
  long warmup_steps = 1000;
  int batch_size = 64;
  double update_ratio = 1.0;  // gradient steps per environment step
  double tau = 0.005;
  double lr_q = 3e-4;      // lambda_Q
  double lr_pi = 3e-4;     // lambda_pi
  double lr_alpha = 3e-4;  // lambda_alpha
  double lr_beta = 3e-4;   // lambda_beta
  std::optional<double> target_entropy;    // default -action_dim
  std::optional<double> adversary_target;  // default 1.0 * action_dim
  double init_alpha = 1.0;
  double init_beta = 1.0;
  bool beta_frozen = false;      // keep beta at init_beta (0 disables repulsion)
  bool adversary_updates = true;
  std::string update_order = "adversary_first";  // | agent_first
  std::vector<int> hidden = {64, 64};
  std::size_t buffer_capacity = 100000;
  long eval_interval = 1000;
  int eval_episodes = 5;
  int kl_samples = 4;
  int states_per_eval = 512;
  double lambda_msd = -1.0;
  double risk_seeking_sign = 1.0;  // multiplies lambda_msd for the adversary
  double lambda_cvar = 0.25;
  int n_quantiles = 25;
  std::string out_dir;  // empty: keep metrics in memory only

  void validate() const {
    SAAC_CHECK(total_steps >= 0, "total_steps must be >= 0");
    SAAC_CHECK(batch_size >= 1, "batch_size must be >= 1");
    SAAC_CHECK(warmup_steps >= batch_size, "warmup_steps must be >= batch_size");
    SAAC_CHECK(update_ratio >= 0.0, "update_ratio must be >= 0");
    SAAC_CHECK(tau > 0.0 && tau <= 1.0, "tau must be in (0, 1]");
    SAAC_CHECK(lr_q > 0 && lr_pi > 0 && lr_alpha > 0 && lr_beta > 0,
               "learning rates must be positive");
    SAAC_CHECK(eval_interval > 0, "eval_interval must be positive");
    SAAC_CHECK(eval_episodes >= 1, "eval_episodes must be >= 1");
    SAAC_CHECK(kl_samples >= 1, "kl_samples must be >= 1");
    SAAC_CHECK(states_per_eval >= 1, "states_per_eval must be >= 1");
    SAAC_CHECK(buffer_capacity >= static_cast<std::size_t>(batch_size),
               "buffer_capacity must hold at least one batch");
    SAAC_CHECK(lambda_cvar > 0.0 && lambda_cvar < 1.0,
               "lambda_cvar must be in (0, 1)");
    SAAC_CHECK(n_quantiles >= 2, "n_quantiles must be >= 2");
    SAAC_CHECK(init_alpha > 0.0, "init_alpha must be positive");
    SAAC_CHECK(init_beta >= 0.0, "init_beta must be >= 0");
    SAAC_CHECK(!(init_beta == 0.0 && !beta_frozen),
               "init_beta = 0 requires beta_frozen (learned beta stays > 0)");
    SAAC_CHECK(update_order == "adversary_first" || update_order == "agent_first",
               "update_order must be adversary_first or agent_first");
    SAAC_CHECK(risk_seeking_sign == 1.0 || risk_seeking_sign == -1.0,
               "risk_seeking_sign must be +1 or -1");
    parse_variant(adversary);
  }
};

enum class CriticKind { kTwin, kQuantile };

struct AgentLearner {
  SquashedGaussianPolicy policy;  // theta
  CriticKind kind = CriticKind::kTwin;
  std::optional<TwinCritic> critic, critic_target;        // phi, phi-bar
  std::optional<QuantileCritic> qcritic, qcritic_target;  // CVaR variant
  EntropyTemp temp;
  std::optional<AdamState> opt_q1, opt_q2, opt_quantile;
  AdamState opt_policy, opt_alpha;
};

struct AdversaryLearner {
  AdversaryVariant variant = AdversaryVariant::kCons;
  SquashedGaussianPolicy policy;  // omega
  std::optional<TwinCritic> cons, cons_target;  // psi, psi-bar
  std::optional<AdamState> opt_cons1, opt_cons2;
  BetaTemp beta;
  AdamState opt_policy, opt_beta;
};

struct TrainerState {
  AgentLearner agent;
  std::optional<AdversaryLearner> adversary;
};

// The repulsion coefficient actually applied in the agent's actor loss.
inline double effective_beta(const TrainerState& state,
                             const TrainConfig& cfg) {
  if (!state.adversary.has_value()) return 0.0;
  if (cfg.beta_frozen) return cfg.init_beta;
  return state.adversary->beta.beta();
}

// Entropy coefficient applied in both players' losses. The tuned
// temperature acts as the base value, inflated by the current repulsion
// weight: with entropy coefficient alpha0 + beta against a repulsion of
// beta, the net entropy pressure stays at alpha0 > 0, so the repulsion can
// never flip the sign of the entropy bonus and collapse the policy.
inline double effective_alpha(const TrainerState& state,
                              const TrainConfig& cfg) {
  return state.agent.temp.alpha() + effective_beta(state, cfg);
}

inline TrainerState make_trainer_state(const TrainConfig& cfg) {
  cfg.validate();
  const std::unique_ptr<Environment> env = make_env(cfg.env);
  const int sd = env->state_dim();
  const int ad = env->action_dim();
  const AdversaryVariant variant = parse_variant(cfg.adversary);
  const CriticKind kind = variant == AdversaryVariant::kCvar
                              ? CriticKind::kQuantile
                              : CriticKind::kTwin;

  Rng init_agent = Rng::stream(cfg.seed, kStreamInitAgent);
  SquashedGaussianPolicy policy(sd, ad, cfg.hidden, env->action_low(),
                                env->action_high(), init_agent);
  std::optional<TwinCritic> critic, critic_target;
  std::optional<QuantileCritic> qcritic, qcritic_target;
  std::optional<AdamState> opt_q1, opt_q2, opt_quantile;
  if (kind == CriticKind::kTwin) {
    critic.emplace(sd, ad, cfg.hidden, init_agent);
    critic_target = critic;  // targets start as copies
    opt_q1.emplace(critic->q1().param_count(), cfg.lr_q);
    opt_q2.emplace(critic->q2().param_count(), cfg.lr_q);
  } else {
    qcritic.emplace(sd, ad, cfg.hidden, cfg.n_quantiles, init_agent);
    qcritic_target = qcritic;
    opt_quantile.emplace(qcritic->net().param_count(), cfg.lr_q);
  }
  EntropyTemp temp;
  temp.log_alpha = std::log(cfg.init_alpha);
  temp.target_entropy = cfg.target_entropy.value_or(-static_cast<double>(ad));
  const int policy_params = policy.trunk().param_count();

  TrainerState state{
      AgentLearner{std::move(policy), kind, std::move(critic),
                   std::move(critic_target), std::move(qcritic),
                   std::move(qcritic_target), temp, std::move(opt_q1),
                   std::move(opt_q2), std::move(opt_quantile),
                   AdamState(policy_params, cfg.lr_pi),
                   AdamState(1, cfg.lr_alpha)},
      std::nullopt};

  if (variant != AdversaryVariant::kNone) {
    Rng init_adv = Rng::stream(cfg.seed, kStreamInitAdversary);
    SquashedGaussianPolicy omega(sd, ad, cfg.hidden, env->action_low(),
                                 env->action_high(), init_adv);
    std::optional<TwinCritic> cons, cons_target;
    std::optional<AdamState> opt_c1, opt_c2;
    if (variant == AdversaryVariant::kCons) {
      cons.emplace(sd, ad, cfg.hidden, init_adv);
      cons_target = cons;
      opt_c1.emplace(cons->q1().param_count(), cfg.lr_q);
      opt_c2.emplace(cons->q2().param_count(), cfg.lr_q);
    }
    BetaTemp beta;
    beta.log_beta = cfg.init_beta > 0.0 ? std::log(cfg.init_beta) : 0.0;
    beta.target_bonus =
        cfg.adversary_target.value_or(1.0 * static_cast<double>(ad));
    const int omega_params = omega.trunk().param_count();
    state.adversary.emplace(AdversaryLearner{
        variant, std::move(omega), std::move(cons), std::move(cons_target),
        std::move(opt_c1), std::move(opt_c2), beta,
        AdamState(omega_params, cfg.lr_pi), AdamState(1, cfg.lr_beta)});
  }
  return state;
}

// ---------------------------------------------------------------------------
// Agent actor loss with the repulsion term:
//   mean[ alpha log pi_theta(a|s) - Q(s,a)
//         - beta (log pi_theta_old(a|s) - log pi_omega_old(a|s)) ]
// The snapshots are frozen copies taken at the start of the gradient step;
// gradients reach theta only through the sampled action path. beta = 0
// reproduces base_policy_loss exactly.
// ---------------------------------------------------------------------------
inline double repulsive_policy_loss(
    const std::vector<Transition>& batch,
    const SquashedGaussianPolicy& policy_theta, const TwinCritic& agent_critic,
    const SquashedGaussianPolicy& policy_theta_old,
    const SquashedGaussianPolicy& policy_omega_old, double alpha, double beta,
    Rng& rng, std::vector<double>* grad_theta) {
  return internal::actor_loss_core(
      batch, policy_theta,
      [&agent_critic](std::span<const double> s, std::span<const double> a,
                      std::span<double> dq_da) {
        return agent_critic.min_value_grad_action(s, a, dq_da);
      },
      alpha, beta, &policy_theta_old, &policy_omega_old, rng, grad_theta);
}

inline double repulsive_policy_loss(
    const std::vector<Transition>& batch,
    const SquashedGaussianPolicy& policy_theta,
    const QuantileCritic& agent_critic,
    const SquashedGaussianPolicy& policy_theta_old,
    const SquashedGaussianPolicy& policy_omega_old, double alpha, double beta,
    Rng& rng, std::vector<double>* grad_theta) {
  return internal::actor_loss_core(
      batch, policy_theta,
      [&agent_critic](std::span<const double> s, std::span<const double> a,
                      std::span<double> dq_da) {
        return agent_critic.mean_value_grad_action(s, a, dq_da);
      },
      alpha, beta, &policy_theta_old, &policy_omega_old, rng, grad_theta);
}

struct TrainStreams {
  Rng replay;
  Rng agent;
  Rng adversary;
};

// One gradient step in Algorithm order: the adversary block (psi, omega,
// beta, psi-bar) and then the agent block (phi, theta, alpha, phi-bar).
// Returns false when the buffer cannot fill a batch yet.
inline bool train_step(TrainerState& state, const ReplayBuffer& buffer,
                       const TrainConfig& cfg, TrainStreams& streams) {
  std::optional<std::vector<Transition>> maybe_batch =
      buffer.sample_batch(static_cast<std::size_t>(cfg.batch_size),
                          streams.replay);
  if (!maybe_batch.has_value()) return false;
  const std::vector<Transition>& batch = *maybe_batch;
  const double gamma = cfg.env.gamma;

  // "Old" policies: parameters as of the start of this gradient step.
  std::optional<SquashedGaussianPolicy> theta_old, omega_old;
  if (state.adversary.has_value()) {
    theta_old = state.agent.policy;
    omega_old = state.adversary->policy;
  }

  const auto adversary_block = [&]() {
    if (!state.adversary.has_value() || !cfg.adversary_updates) return;
    const double alpha = effective_alpha(state, cfg);
    AdversaryLearner& adv = *state.adversary;
    if (adv.variant == AdversaryVariant::kCons) {
      const std::vector<double> y = cons_soft_target(
          batch, adv.policy, *adv.cons_target, alpha, gamma, streams.adversary);
      std::vector<double> g1(adv.cons->q1().param_count(), 0.0);
      std::vector<double> g2(adv.cons->q2().param_count(), 0.0);
      cons_critic_loss(batch, *adv.cons, y, &g1, &g2);
      adv.opt_cons1->update(adv.cons->q1().params(), g1, "J(Q_psi)");
      adv.opt_cons2->update(adv.cons->q2().params(), g2, "J(Q_psi)");
    }
    AdversaryCritic view;
    view.variant = adv.variant;
    view.lambda_msd = cfg.risk_seeking_sign * cfg.lambda_msd;
    view.lambda_cvar = cfg.lambda_cvar;
    if (adv.variant == AdversaryVariant::kCons) view.cons = &*adv.cons;
    if (adv.variant == AdversaryVariant::kMsd) {
      view.agent_twin = &*state.agent.critic;
    }
    if (adv.variant == AdversaryVariant::kCvar) {
      view.quantile = &*state.agent.qcritic;
    }
    std::vector<double> gw(adv.policy.trunk().param_count(), 0.0);
    adversary_policy_loss(batch, adv.policy, view, alpha, streams.adversary,
                          &gw);
    adv.opt_policy.update(adv.policy.trunk().params(), gw, "J(pi_omega)");
    if (!cfg.beta_frozen) {
      double gb = 0.0;
      beta_loss(batch, state.agent.policy, adv.policy, adv.beta,
                cfg.kl_samples, streams.adversary, &gb);
      adv.opt_beta.update(std::span<double>(&adv.beta.log_beta, 1),
                          std::span<const double>(&gb, 1), "J(beta)");
    }
    if (adv.variant == AdversaryVariant::kCons) {
      polyak_update(*adv.cons, *adv.cons_target, cfg.tau);
    }
  };

  const auto agent_block = [&]() {
    AgentLearner& ag = state.agent;
    const double alpha = effective_alpha(state, cfg);
    if (ag.kind == CriticKind::kTwin) {
      const std::vector<double> y = soft_target(
          batch, ag.policy, *ag.critic_target, alpha, gamma, streams.agent);
      std::vector<double> g1(ag.critic->q1().param_count(), 0.0);
      std::vector<double> g2(ag.critic->q2().param_count(), 0.0);
      critic_loss(batch, *ag.critic, y, &g1, &g2);
      ag.opt_q1->update(ag.critic->q1().params(), g1, "J(Q_phi)");
      ag.opt_q2->update(ag.critic->q2().params(), g2, "J(Q_phi)");
    } else {
      std::vector<double> gq(ag.qcritic->net().param_count(), 0.0);
      quantile_critic_loss(batch, *ag.qcritic, *ag.qcritic_target, ag.policy,
                           alpha, gamma, streams.agent, &gq);
      ag.opt_quantile->update(ag.qcritic->net().params(), gq, "J(Z_phi)");
    }

    const double beta_val = effective_beta(state, cfg);
    std::vector<double> gt(ag.policy.trunk().param_count(), 0.0);
    if (theta_old.has_value()) {
      if (ag.kind == CriticKind::kTwin) {
        repulsive_policy_loss(batch, ag.policy, *ag.critic, *theta_old,
                              *omega_old, alpha, beta_val, streams.agent, &gt);
      } else {
        repulsive_policy_loss(batch, ag.policy, *ag.qcritic, *theta_old,
                              *omega_old, alpha, beta_val, streams.agent, &gt);
      }
    } else {
      if (ag.kind == CriticKind::kTwin) {
        base_policy_loss(batch, ag.policy, *ag.critic, alpha, streams.agent,
                         &gt);
      } else {
        internal::actor_loss_core(
            batch, ag.policy,
            [&ag](std::span<const double> s, std::span<const double> a,
                  std::span<double> dq_da) {
              return ag.qcritic->mean_value_grad_action(s, a, dq_da);
            },
            alpha, 0.0, nullptr, nullptr, streams.agent, &gt);
      }
    }
    ag.opt_policy.update(ag.policy.trunk().params(), gt, "J(pi_theta)");

    double ga = 0.0;
    alpha_loss(batch, ag.policy, ag.temp, streams.agent, &ga);
    ag.opt_alpha.update(std::span<double>(&ag.temp.log_alpha, 1),
                        std::span<const double>(&ga, 1), "J(alpha)");

    if (ag.kind == CriticKind::kTwin) {
      polyak_update(*ag.critic, *ag.critic_target, cfg.tau);
    } else {
      polyak_update(ag.qcritic->net(), ag.qcritic_target->net(), cfg.tau);
    }
  };

  if (cfg.update_order == "agent_first") {
    agent_block();
    adversary_block();
  } else {
    adversary_block();
    agent_block();
  }
  return true;
}

// ---------------------------------------------------------------------------
// Deterministic evaluation: the policy's squashed mean action.
// ---------------------------------------------------------------------------
struct EvalResult {
  int episodes = 0;  // 0 marks an empty evaluation
  double return_mean = 0.0;
  double return_std = 0.0;
  long failures = 0;
};

template <typename ActFn>
EvalResult evaluate_with(Environment& env, int episodes, Rng& rng, ActFn&& act,
                         std::vector<std::vector<double>>* visited = nullptr) {
  EvalResult result;
  result.episodes = episodes;
  if (episodes <= 0) return result;
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    std::vector<double> s = env.reset(rng);
    if (visited != nullptr) visited->push_back(s);
    double ep_return = 0.0;
    while (true) {
      const std::vector<double> a = act(std::span<const double>(s), rng);
      const StepResult r = env.step(a, rng);
      ep_return += r.reward;
      result.failures += static_cast<long>(r.constraint_cost);
      s = r.next_state;
      if (visited != nullptr) visited->push_back(s);
      if (r.terminated || r.truncated) break;
    }
    returns.push_back(ep_return);
  }
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= static_cast<double>(returns.size());
  result.return_mean = mean;
  result.return_std = std::sqrt(var);
  return result;
}

inline EvalResult evaluate(const SquashedGaussianPolicy& policy,
                           Environment& env, int episodes, Rng& rng,
                           std::vector<std::vector<double>>* visited = nullptr) {
  return evaluate_with(
      env, episodes, rng,
      [&policy](std::span<const double> s, Rng&) {
        return policy.mean_action(s);
      },
      visited);
}

// ---------------------------------------------------------------------------
// Metrics and run artifacts.
// ---------------------------------------------------------------------------
struct MetricsRow {
  long step = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
  long cum_failures = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double kl_estimate = 0.0;
};

struct RunMetrics {
  std::vector<MetricsRow> rows;
  double wall_time_seconds = 0.0;
  std::uint64_t seed = 0;
};

inline const char* kMetricsHeader =
    "step,eval_return_mean,eval_return_std,cum_failures,alpha,beta,kl_estimate";

inline std::string metrics_row_line(const MetricsRow& r) {
  std::string line = std::to_string(r.step);
  line += ',' + format_double(r.eval_return_mean);
  line += ',' + format_double(r.eval_return_std);
  line += ',' + std::to_string(r.cum_failures);
  line += ',' + format_double(r.alpha);
  line += ',' + format_double(r.beta);
  line += ',' + format_double(r.kl_estimate);
  return line;
}

// Flat binary snapshot: magic, version, layer sizes, parameters.
inline void save_mlp(const std::filesystem::path& path, const Mlp& net) {
  std::ofstream out(path, std::ios::binary);
  SAAC_CHECK(out.good(), "cannot open snapshot for writing: " + path.string());
  out.write("SAACNET1", 8);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint32_t n = static_cast<std::uint32_t>(net.layer_sizes().size());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (int s : net.layer_sizes()) {
    const std::int32_t v = s;
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  out.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.param_count() * sizeof(double)));
  SAAC_CHECK(out.good(), "snapshot write failed: " + path.string());
}

inline Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  SAAC_CHECK(in.good(), "cannot open snapshot: " + path.string());
  char magic[8];
  in.read(magic, 8);
  SAAC_CHECK(in.good() && std::string(magic, 8) == "SAACNET1",
             "bad snapshot magic: " + path.string());
  std::uint32_t version = 0, n = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  SAAC_CHECK(version == 1, "unsupported snapshot version");
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  SAAC_CHECK(in.good() && n >= 2 && n < 64, "bad snapshot layer count");
  std::vector<int> sizes(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    sizes[i] = v;
  }
  Mlp net(sizes);
  in.read(reinterpret_cast<char*>(net.params().data()),
          static_cast<std::streamsize>(net.param_count() * sizeof(double)));
  SAAC_CHECK(in.good(), "snapshot truncated: " + path.string());
  return net;
}

namespace internal {

inline void subsample_states(std::vector<std::vector<double>>& states,
                             int cap, Rng& rng) {
  if (static_cast<int>(states.size()) <= cap) return;
  // Partial Fisher-Yates: the first `cap` entries become the sample.
  for (int i = 0; i < cap; ++i) {
    const int j =
        i + rng.uniform_int(static_cast<int>(states.size()) - i);
    std::swap(states[i], states[j]);
  }
  states.resize(cap);
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Full training run: environment stepping with actions from pi_theta,
// replay pushes, gradient steps at the configured ratio, periodic
// deterministic evaluation, and CSV/snapshot artifacts when an output
// directory is set.
// ---------------------------------------------------------------------------
inline RunMetrics run_training(const TrainConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  TrainerState state = make_trainer_state(cfg);
  std::unique_ptr<Environment> env = make_env(cfg.env);
  std::unique_ptr<Environment> eval_env = make_env(cfg.env);
  ReplayBuffer buffer(cfg.buffer_capacity);

  Rng env_rng = Rng::stream(cfg.seed, kStreamEnv);
  Rng action_rng = Rng::stream(cfg.seed, kStreamAction);
  Rng eval_rng = Rng::stream(cfg.seed, kStreamEval);
  Rng metrics_rng = Rng::stream(cfg.seed, kStreamMetrics);
  Rng states_rng = Rng::stream(cfg.seed, kStreamStates);
  TrainStreams streams{Rng::stream(cfg.seed, kStreamReplay),
                       Rng::stream(cfg.seed, kStreamAgent),
                       Rng::stream(cfg.seed, kStreamAdversary)};

  const bool write_files = !cfg.out_dir.empty();
  std::ofstream metrics_file, states_file;
  if (write_files) {
    std::filesystem::create_directories(cfg.out_dir);
    metrics_file.open(std::filesystem::path(cfg.out_dir) / "metrics.csv");
    SAAC_CHECK(metrics_file.good(), "cannot write metrics.csv in " + cfg.out_dir);
    metrics_file << kMetricsHeader << '\n';
    states_file.open(std::filesystem::path(cfg.out_dir) / "states.csv");
    states_file << "step";
    for (int i = 0; i < env->state_dim(); ++i) states_file << ",s" << i;
    states_file << '\n';
  }

  RunMetrics metrics;
  metrics.seed = cfg.seed;
  long cum_failures = 0;

  const auto metrics_kl = [&]() -> double {
    if (!state.adversary.has_value() || buffer.size() == 0) return 0.0;
    const std::size_t n = std::min<std::size_t>(64, buffer.size());
    std::optional<std::vector<Transition>> batch =
        buffer.sample_batch(n, metrics_rng);
    std::vector<std::vector<double>> states_batch;
    states_batch.reserve(n);
    for (const Transition& tr : *batch) states_batch.push_back(tr.state);
    return kl_estimate(state.agent.policy, state.adversary->policy,
                       states_batch, metrics_rng, cfg.kl_samples);
  };

  const auto emit_eval = [&](long step) {
    std::vector<std::vector<double>> visited;
    const EvalResult ev =
        evaluate(state.agent.policy, *eval_env, cfg.eval_episodes, eval_rng,
                 write_files ? &visited : nullptr);
    MetricsRow row;
    row.step = step;
    row.eval_return_mean = ev.return_mean;
    row.eval_return_std = ev.return_std;
    row.cum_failures = cum_failures;
    row.alpha = effective_alpha(state, cfg);
    row.beta = effective_beta(state, cfg);
    row.kl_estimate = metrics_kl();
    metrics.rows.push_back(row);
    if (write_files) {
      metrics_file << metrics_row_line(row) << '\n';
      metrics_file.flush();
      internal::subsample_states(visited, cfg.states_per_eval, states_rng);
      for (const std::vector<double>& s : visited) {
        states_file << step;
        for (double v : s) states_file << ',' << format_double(v);
        states_file << '\n';
      }
      states_file.flush();
    }
  };

  emit_eval(0);

  std::vector<double> s = env->reset(env_rng);
  double update_credit = 0.0;
  for (long t = 0; t < cfg.total_steps; ++t) {
    std::vector<double> a;
    if (t < cfg.warmup_steps) {
      const std::vector<double> lo = env->action_low();
      const std::vector<double> hi = env->action_high();
      a.resize(lo.size());
      for (std::size_t i = 0; i < lo.size(); ++i) {
        a[i] = action_rng.uniform(lo[i], hi[i]);
      }
    } else {
      a = state.agent.policy.sample_action(s, action_rng).action;
    }
    const StepResult r = env->step(a, env_rng);
    buffer.push(Transition{s, a, r.reward, r.constraint_cost, r.next_state,
                           r.terminated});
    cum_failures += static_cast<long>(r.constraint_cost);
    s = (r.terminated || r.truncated) ? env->reset(env_rng) : r.next_state;

    if (t + 1 >= cfg.warmup_steps &&
        buffer.size() >= static_cast<std::size_t>(cfg.warmup_steps)) {
      update_credit += cfg.update_ratio;
      while (update_credit >= 1.0) {
        train_step(state, buffer, cfg, streams);
        update_credit -= 1.0;
      }
    }
    if ((t + 1) % cfg.eval_interval == 0) emit_eval(t + 1);
  }
  if (cfg.total_steps > 0 && cfg.total_steps % cfg.eval_interval != 0) {
    emit_eval(cfg.total_steps);
  }

  metrics.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (write_files) {
    const std::filesystem::path dir(cfg.out_dir);
    save_mlp(dir / "policy_theta.bin", state.agent.policy.trunk());
    if (state.agent.kind == CriticKind::kTwin) {
      save_mlp(dir / "critic_q1.bin", state.agent.critic->q1());
      save_mlp(dir / "critic_q2.bin", state.agent.critic->q2());
    } else {
      save_mlp(dir / "critic_quantile.bin", state.agent.qcritic->net());
    }
    if (state.adversary.has_value()) {
      save_mlp(dir / "policy_omega.bin", state.adversary->policy.trunk());
      if (state.adversary->cons.has_value()) {
        save_mlp(dir / "cons_q1.bin", state.adversary->cons->q1());
        save_mlp(dir / "cons_q2.bin", state.adversary->cons->q2());
      }
    }
    std::ofstream info(dir / "run_info.txt");
    info << "seed = " << cfg.seed << '\n'
         << "adversary = " << cfg.adversary << '\n'
         << "env = " << cfg.env.name << '\n'
         << "total_steps = " << cfg.total_steps << '\n'
         << "wall_time_seconds = " << format_double(metrics.wall_time_seconds)
         << '\n';
  }
  return metrics;
}

}  // namespace saac

#endif  // SAAC_TRAINER_HPP_
