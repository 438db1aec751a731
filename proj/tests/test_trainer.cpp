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

#include "saac/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "saac/oracle.hpp"

namespace {

using saac::EnvConfig;
using saac::Rng;
using saac::SquashedGaussianPolicy;
using saac::TrainConfig;
using saac::Transition;
using saac::TwinCritic;

TrainConfig small_config(const std::string& variant) {
  TrainConfig cfg;
  cfg.env.name = "hazard";
  cfg.env.horizon = 50;
  cfg.adversary = variant;
  cfg.hidden = {8, 8};
  cfg.batch_size = 16;
  cfg.warmup_steps = 32;
  cfg.total_steps = 150;
  cfg.eval_interval = 50;
  cfg.eval_episodes = 2;
  cfg.buffer_capacity = 1000;
  cfg.kl_samples = 1;
  return cfg;
}

std::vector<Transition> hazard_batch(int n, std::uint64_t seed) {
  EnvConfig ec;
  ec.name = "hazard";
  ec.horizon = 200;
  auto env = saac::make_env(ec);
  Rng env_rng(seed), act(seed + 1);
  std::vector<Transition> out;
  std::vector<double> s = env->reset(env_rng);
  while (static_cast<int>(out.size()) < n) {
    std::vector<double> a = {act.uniform(-1, 1), act.uniform(-1, 1)};
    const saac::StepResult r = env->step(a, env_rng);
    out.push_back(
        Transition{s, a, r.reward, r.constraint_cost, r.next_state,
                   r.terminated});
    s = (r.terminated || r.truncated) ? env->reset(env_rng) : r.next_state;
  }
  return out;
}

bool params_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("repulsive loss with beta zero matches the base loss bitwise") {
  Rng init(1);
  SquashedGaussianPolicy theta(4, 2, {8}, {-1, -1}, {1, 1}, init);
  SquashedGaussianPolicy theta_old(4, 2, {8}, {-1, -1}, {1, 1}, init);
  SquashedGaussianPolicy omega_old(4, 2, {8}, {-1, -1}, {1, 1}, init);
  TwinCritic critic(4, 2, {8}, init);
  const std::vector<Transition> batch = hazard_batch(16, 5);
  const Rng frozen(9);

  Rng r1 = frozen, r2 = frozen;
  std::vector<double> g1(theta.trunk().param_count(), 0.0);
  std::vector<double> g2(theta.trunk().param_count(), 0.0);
  const double base =
      saac::base_policy_loss(batch, theta, critic, 0.4, r1, &g1);
  const double rep = saac::repulsive_policy_loss(
      batch, theta, critic, theta_old, omega_old, 0.4, 0.0, r2, &g2);
  CHECK(base == rep);
  CHECK(params_equal(g1, g2));
}

TEST_CASE("identical snapshots cancel the repulsion term exactly") {
  Rng init(2);
  SquashedGaussianPolicy theta(4, 2, {8}, {-1, -1}, {1, 1}, init);
  SquashedGaussianPolicy snap(4, 2, {8}, {-1, -1}, {1, 1}, init);
  SquashedGaussianPolicy snap_copy = snap;
  TwinCritic critic(4, 2, {8}, init);
  const std::vector<Transition> batch = hazard_batch(8, 6);
  const Rng frozen(10);

  Rng r1 = frozen, r2 = frozen;
  const double with_rep = saac::repulsive_policy_loss(
      batch, theta, critic, snap, snap_copy, 0.4, 2.5, r1, nullptr);
  const double base =
      saac::base_policy_loss(batch, theta, critic, 0.4, r2, nullptr);
  CHECK(with_rep == base);
}

TEST_CASE("train_step is deterministic given equal streams") {
  const TrainConfig cfg = small_config("cons");
  saac::TrainerState s1 = saac::make_trainer_state(cfg);
  saac::TrainerState s2 = saac::make_trainer_state(cfg);
  saac::ReplayBuffer buffer(256);
  for (Transition& t : hazard_batch(64, 11)) buffer.push(std::move(t));
  saac::TrainStreams t1{Rng::stream(3, 1), Rng::stream(3, 2), Rng::stream(3, 3)};
  saac::TrainStreams t2{Rng::stream(3, 1), Rng::stream(3, 2), Rng::stream(3, 3)};
  for (int i = 0; i < 3; ++i) {
    REQUIRE(saac::train_step(s1, buffer, cfg, t1));
    REQUIRE(saac::train_step(s2, buffer, cfg, t2));
  }
  CHECK(params_equal(s1.agent.policy.trunk().params(),
                     s2.agent.policy.trunk().params()));
  CHECK(params_equal(s1.agent.critic->q1().params(),
                     s2.agent.critic->q1().params()));
  CHECK(s1.agent.temp.log_alpha == s2.agent.temp.log_alpha);
  CHECK(s1.adversary->beta.log_beta == s2.adversary->beta.log_beta);
}

TEST_CASE("train_step follows the adversary-first block order") {
  // Oracle: replay the two blocks by hand in Algorithm order and compare
  // against train_step. Swapping the order must change the outcome (the
  // beta update reads the agent policy).
  const TrainConfig cfg = small_config("cons");
  saac::ReplayBuffer buffer(256);
  for (Transition& t : hazard_batch(64, 12)) buffer.push(std::move(t));

  saac::TrainerState impl = saac::make_trainer_state(cfg);
  saac::TrainStreams impl_streams{Rng::stream(4, 1), Rng::stream(4, 2),
                                  Rng::stream(4, 3)};
  REQUIRE(saac::train_step(impl, buffer, cfg, impl_streams));

  // Hand-stepped oracle.
  saac::TrainerState hand = saac::make_trainer_state(cfg);
  Rng replay = Rng::stream(4, 1);
  Rng agent = Rng::stream(4, 2);
  Rng adv = Rng::stream(4, 3);
  const auto batch = *buffer.sample_batch(cfg.batch_size, replay);
  const SquashedGaussianPolicy theta_old = hand.agent.policy;
  const SquashedGaussianPolicy omega_old = hand.adversary->policy;
  {  // adversary block: psi, omega, beta, psi-bar
    auto& a = *hand.adversary;
    const double alpha = hand.agent.temp.alpha() + a.beta.beta();
    const std::vector<double> y = saac::cons_soft_target(
        batch, a.policy, *a.cons_target, alpha, cfg.env.gamma, adv);
    std::vector<double> g1(a.cons->q1().param_count(), 0.0);
    std::vector<double> g2(a.cons->q2().param_count(), 0.0);
    saac::cons_critic_loss(batch, *a.cons, y, &g1, &g2);
    a.opt_cons1->update(a.cons->q1().params(), g1, "J(Q_psi)");
    a.opt_cons2->update(a.cons->q2().params(), g2, "J(Q_psi)");
    saac::AdversaryCritic view;
    view.variant = saac::AdversaryVariant::kCons;
    view.cons = &*a.cons;
    std::vector<double> gw(a.policy.trunk().param_count(), 0.0);
    saac::adversary_policy_loss(batch, a.policy, view, alpha, adv, &gw);
    a.opt_policy.update(a.policy.trunk().params(), gw, "J(pi_omega)");
    double gb = 0.0;
    saac::beta_loss(batch, hand.agent.policy, a.policy, a.beta,
                    cfg.kl_samples, adv, &gb);
    a.opt_beta.update(std::span<double>(&a.beta.log_beta, 1),
                      std::span<const double>(&gb, 1), "J(beta)");
    saac::polyak_update(*a.cons, *a.cons_target, cfg.tau);
  }
  {  // agent block: phi, theta, alpha, phi-bar
    auto& ag = hand.agent;
    const double beta_val = hand.adversary->beta.beta();  // fresh beta
    const double alpha = ag.temp.alpha() + beta_val;
    const std::vector<double> y = saac::soft_target(
        batch, ag.policy, *ag.critic_target, alpha, cfg.env.gamma, agent);
    std::vector<double> g1(ag.critic->q1().param_count(), 0.0);
    std::vector<double> g2(ag.critic->q2().param_count(), 0.0);
    saac::critic_loss(batch, *ag.critic, y, &g1, &g2);
    ag.opt_q1->update(ag.critic->q1().params(), g1, "J(Q_phi)");
    ag.opt_q2->update(ag.critic->q2().params(), g2, "J(Q_phi)");
    std::vector<double> gt(ag.policy.trunk().param_count(), 0.0);
    saac::repulsive_policy_loss(batch, ag.policy, *ag.critic, theta_old,
                                omega_old, alpha, beta_val, agent, &gt);
    ag.opt_policy.update(ag.policy.trunk().params(), gt, "J(pi_theta)");
    double ga = 0.0;
    saac::alpha_loss(batch, ag.policy, ag.temp, agent, &ga);
    ag.opt_alpha.update(std::span<double>(&ag.temp.log_alpha, 1),
                        std::span<const double>(&ga, 1), "J(alpha)");
    saac::polyak_update(*ag.critic, *ag.critic_target, cfg.tau);
  }
  CHECK(params_equal(impl.agent.policy.trunk().params(),
                     hand.agent.policy.trunk().params()));
  CHECK(params_equal(impl.adversary->policy.trunk().params(),
                     hand.adversary->policy.trunk().params()));
  CHECK(impl.adversary->beta.log_beta == hand.adversary->beta.log_beta);
  CHECK(impl.agent.temp.log_alpha == hand.agent.temp.log_alpha);

  // Swapped order diverges: beta sees an already-updated agent policy.
  TrainConfig swapped = cfg;
  swapped.update_order = "agent_first";
  saac::TrainerState other = saac::make_trainer_state(swapped);
  saac::TrainStreams other_streams{Rng::stream(4, 1), Rng::stream(4, 2),
                                   Rng::stream(4, 3)};
  REQUIRE(saac::train_step(other, buffer, swapped, other_streams));
  CHECK(other.adversary->beta.log_beta != impl.adversary->beta.log_beta);
}

TEST_CASE("disabled adversary reduces to the standalone SAC loop bitwise") {
  // SAAC with beta frozen at zero and adversary updates off, against an
  // independent SAC loop written directly from the core pieces.
  TrainConfig cfg = small_config("cons");
  cfg.total_steps = 300;
  cfg.adversary_updates = false;
  cfg.beta_frozen = true;
  cfg.init_beta = 0.0;
  saac::TrainerState saac_state = saac::make_trainer_state(cfg);
  {
    auto env = saac::make_env(cfg.env);
    saac::ReplayBuffer buffer(cfg.buffer_capacity);
    Rng env_rng = Rng::stream(cfg.seed, saac::kStreamEnv);
    Rng action_rng = Rng::stream(cfg.seed, saac::kStreamAction);
    saac::TrainStreams streams{Rng::stream(cfg.seed, saac::kStreamReplay),
                               Rng::stream(cfg.seed, saac::kStreamAgent),
                               Rng::stream(cfg.seed, saac::kStreamAdversary)};
    std::vector<double> s = env->reset(env_rng);
    for (long t = 0; t < cfg.total_steps; ++t) {
      std::vector<double> a;
      if (t < cfg.warmup_steps) {
        a = {action_rng.uniform(-1, 1), action_rng.uniform(-1, 1)};
      } else {
        a = saac_state.agent.policy.sample_action(s, action_rng).action;
      }
      const saac::StepResult r = env->step(a, env_rng);
      buffer.push(Transition{s, a, r.reward, r.constraint_cost, r.next_state,
                             r.terminated});
      s = (r.terminated || r.truncated) ? env->reset(env_rng) : r.next_state;
      if (t + 1 >= cfg.warmup_steps &&
          buffer.size() >= static_cast<std::size_t>(cfg.warmup_steps)) {
        saac::train_step(saac_state, buffer, cfg, streams);
      }
    }
  }

  // Independent SAC oracle: same stream layout, core operations only.
  TrainConfig sac_cfg = cfg;
  sac_cfg.adversary = "none";
  saac::TrainerState sac_state = saac::make_trainer_state(sac_cfg);
  {
    auto env = saac::make_env(cfg.env);
    saac::ReplayBuffer buffer(cfg.buffer_capacity);
    Rng env_rng = Rng::stream(cfg.seed, saac::kStreamEnv);
    Rng action_rng = Rng::stream(cfg.seed, saac::kStreamAction);
    Rng replay = Rng::stream(cfg.seed, saac::kStreamReplay);
    Rng agent = Rng::stream(cfg.seed, saac::kStreamAgent);
    std::vector<double> s = env->reset(env_rng);
    for (long t = 0; t < cfg.total_steps; ++t) {
      std::vector<double> a;
      if (t < cfg.warmup_steps) {
        a = {action_rng.uniform(-1, 1), action_rng.uniform(-1, 1)};
      } else {
        a = sac_state.agent.policy.sample_action(s, action_rng).action;
      }
      const saac::StepResult r = env->step(a, env_rng);
      buffer.push(Transition{s, a, r.reward, r.constraint_cost, r.next_state,
                             r.terminated});
      s = (r.terminated || r.truncated) ? env->reset(env_rng) : r.next_state;
      if (t + 1 >= cfg.warmup_steps &&
          buffer.size() >= static_cast<std::size_t>(cfg.warmup_steps)) {
        auto& ag = sac_state.agent;
        const auto batch = *buffer.sample_batch(cfg.batch_size, replay);
        const double alpha = ag.temp.alpha();
        const std::vector<double> y = saac::soft_target(
            batch, ag.policy, *ag.critic_target, alpha, cfg.env.gamma, agent);
        std::vector<double> g1(ag.critic->q1().param_count(), 0.0);
        std::vector<double> g2(ag.critic->q2().param_count(), 0.0);
        saac::critic_loss(batch, *ag.critic, y, &g1, &g2);
        ag.opt_q1->update(ag.critic->q1().params(), g1, "J(Q_phi)");
        ag.opt_q2->update(ag.critic->q2().params(), g2, "J(Q_phi)");
        std::vector<double> gt(ag.policy.trunk().param_count(), 0.0);
        saac::base_policy_loss(batch, ag.policy, *ag.critic, alpha, agent,
                               &gt);
        ag.opt_policy.update(ag.policy.trunk().params(), gt, "J(pi_theta)");
        double ga = 0.0;
        saac::alpha_loss(batch, ag.policy, ag.temp, agent, &ga);
        ag.opt_alpha.update(std::span<double>(&ag.temp.log_alpha, 1),
                            std::span<const double>(&ga, 1), "J(alpha)");
        saac::polyak_update(*ag.critic, *ag.critic_target, cfg.tau);
      }
    }
  }

  CHECK(params_equal(saac_state.agent.policy.trunk().params(),
                     sac_state.agent.policy.trunk().params()));
  CHECK(params_equal(saac_state.agent.critic->q1().params(),
                     sac_state.agent.critic->q1().params()));
  CHECK(params_equal(saac_state.agent.critic->q2().params(),
                     sac_state.agent.critic->q2().params()));
  CHECK(params_equal(saac_state.agent.critic_target->q1().params(),
                     sac_state.agent.critic_target->q1().params()));
  CHECK(saac_state.agent.temp.log_alpha == sac_state.agent.temp.log_alpha);
}

TEST_CASE("repulsion direction: beta pushes the agent away from the adversary") {
  Rng init_a(31), init_b(31), init_w(77);
  SquashedGaussianPolicy theta_a(4, 2, {8, 8}, {-1, -1}, {1, 1}, init_a);
  SquashedGaussianPolicy theta_b(4, 2, {8, 8}, {-1, -1}, {1, 1}, init_b);
  SquashedGaussianPolicy omega(4, 2, {8, 8}, {-1, -1}, {1, 1}, init_w);
  TwinCritic critic(4, 2, {8, 8}, init_w);
  const std::vector<Transition> batch = hazard_batch(32, 13);

  const auto train = [&](SquashedGaussianPolicy& pol, double beta) {
    saac::AdamState opt(pol.trunk().param_count(), 3e-4);
    Rng rng(555);
    for (int step = 0; step < 500; ++step) {
      const SquashedGaussianPolicy snapshot = pol;
      std::vector<double> g(pol.trunk().param_count(), 0.0);
      saac::repulsive_policy_loss(batch, pol, critic, snapshot, omega, 0.2,
                                  beta, rng, &g);
      opt.update(pol.trunk().params(), g, "J(pi_theta)");
    }
  };
  train(theta_a, 1.0);
  train(theta_b, 0.0);

  std::vector<std::vector<double>> states;
  for (const Transition& t : batch) states.push_back(t.state);
  Rng kl_rng_a(9001), kl_rng_b(9001);
  const double kl_with =
      saac::kl_estimate(theta_a, omega, states, kl_rng_a, 64);
  const double kl_without =
      saac::kl_estimate(theta_b, omega, states, kl_rng_b, 64);
  CHECK(kl_with > kl_without);
}

TEST_CASE("no parameter changes before the buffer reaches the warmup size") {
  TrainConfig cfg = small_config("none");
  cfg.total_steps = cfg.warmup_steps - 1;
  // Drive the loop manually to retrieve final parameters, then compare to
  // an untouched initialization.
  saac::TrainerState fresh = saac::make_trainer_state(cfg);
  saac::TrainerState state = saac::make_trainer_state(cfg);
  auto env = saac::make_env(cfg.env);
  saac::ReplayBuffer buffer(cfg.buffer_capacity);
  Rng env_rng = Rng::stream(cfg.seed, saac::kStreamEnv);
  Rng action_rng = Rng::stream(cfg.seed, saac::kStreamAction);
  saac::TrainStreams streams{Rng::stream(cfg.seed, saac::kStreamReplay),
                             Rng::stream(cfg.seed, saac::kStreamAgent),
                             Rng::stream(cfg.seed, saac::kStreamAdversary)};
  std::vector<double> s = env->reset(env_rng);
  for (long t = 0; t < cfg.total_steps; ++t) {
    std::vector<double> a = {action_rng.uniform(-1, 1),
                             action_rng.uniform(-1, 1)};
    const saac::StepResult r = env->step(a, env_rng);
    buffer.push(Transition{s, a, r.reward, r.constraint_cost, r.next_state,
                           r.terminated});
    s = (r.terminated || r.truncated) ? env->reset(env_rng) : r.next_state;
    if (t + 1 >= cfg.warmup_steps &&
        buffer.size() >= static_cast<std::size_t>(cfg.warmup_steps)) {
      saac::train_step(state, buffer, cfg, streams);
    }
  }
  CHECK(params_equal(state.agent.policy.trunk().params(),
                     fresh.agent.policy.trunk().params()));
}

TEST_CASE("zero-step training emits only the initial evaluation row") {
  TrainConfig cfg = small_config("cons");
  cfg.total_steps = 0;
  const saac::RunMetrics m = saac::run_training(cfg);
  REQUIRE(m.rows.size() == 1);
  CHECK(m.rows[0].step == 0);
  CHECK(m.rows[0].cum_failures == 0);
}

TEST_CASE("cumulative failures are non-decreasing across eval points") {
  TrainConfig cfg = small_config("none");
  cfg.env.name = "chain";
  cfg.env.horizon = 20;
  cfg.env.slip_prob = 0.3;
  cfg.total_steps = 400;
  cfg.warmup_steps = 64;
  cfg.batch_size = 16;
  cfg.eval_interval = 100;
  const saac::RunMetrics m = saac::run_training(cfg);
  REQUIRE(m.rows.size() >= 3);
  for (std::size_t i = 1; i < m.rows.size(); ++i) {
    CHECK(m.rows[i].cum_failures >= m.rows[i - 1].cum_failures);
  }
  CHECK(m.rows.back().cum_failures > 0);  // the chain is risky under random play
}

TEST_CASE("evaluate: empty call returns the explicit empty marker") {
  EnvConfig ec;
  ec.name = "hazard";
  auto env = saac::make_env(ec);
  Rng init(3), rng(4);
  SquashedGaussianPolicy pol(4, 2, {8}, {-1, -1}, {1, 1}, init);
  const saac::EvalResult r = saac::evaluate(pol, *env, 0, rng);
  CHECK(r.episodes == 0);
  CHECK(r.failures == 0);
  CHECK(r.return_mean == 0.0);
}

TEST_CASE("evaluate: holding still in the hazard environment never fails") {
  EnvConfig ec;
  ec.name = "hazard";
  ec.horizon = 100;
  auto env = saac::make_env(ec);
  Rng rng(5);
  const saac::EvalResult r = saac::evaluate_with(
      *env, 3, rng,
      [](std::span<const double>, Rng&) {
        return std::vector<double>{0.0, 0.0};
      });
  CHECK(r.episodes == 3);
  CHECK(r.failures == 0);
  CHECK(r.return_mean < 0.0);  // pure distance penalty away from the goal
}

TEST_CASE("evaluate: random play on the chain matches the exact absorption rate") {
  EnvConfig ec;
  ec.name = "chain";
  ec.horizon = 20;
  ec.slip_prob = 0.2;
  auto env = saac::make_env(ec);
  const saac::TabularMDP mirror = saac::make_chain_tabular(ec);
  const std::vector<double> uniform(mirror.n_states * mirror.n_actions, 0.5);
  const double exact =
      saac::return_distribution(mirror, uniform).error_probability;

  Rng rng(6);
  const int episodes = 10000;
  const saac::EvalResult r = saac::evaluate_with(
      *env, episodes, rng,
      [](std::span<const double>, Rng& act_rng) {
        return std::vector<double>{act_rng.uniform(-1.0, 1.0)};
      });
  const double freq = static_cast<double>(r.failures) / episodes;
  const double se = std::sqrt(exact * (1.0 - exact) / episodes);
  CHECK(std::fabs(freq - exact) < 3.0 * se);
}

TEST_CASE("metrics files are byte-identical across reruns") {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "saac_trainer_test";
  fs::remove_all(root);
  TrainConfig cfg = small_config("cons");
  cfg.total_steps = 120;
  cfg.eval_interval = 40;
  cfg.out_dir = (root / "a").string();
  saac::run_training(cfg);
  cfg.out_dir = (root / "b").string();
  saac::run_training(cfg);
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string a = slurp(root / "a" / "metrics.csv");
  const std::string b = slurp(root / "b" / "metrics.csv");
  REQUIRE(!a.empty());
  CHECK(a == b);
  CHECK(slurp(root / "a" / "states.csv") == slurp(root / "b" / "states.csv"));
  fs::remove_all(root);
}

TEST_CASE("snapshots round-trip through the binary format") {
  Rng init(9);
  saac::Mlp net({4, 8, 3});
  net.init_uniform(init);
  const auto path =
      std::filesystem::temp_directory_path() / "saac_net_roundtrip.bin";
  saac::save_mlp(path, net);
  const saac::Mlp loaded = saac::load_mlp(path);
  REQUIRE(loaded.layer_sizes() == net.layer_sizes());
  CHECK(params_equal(loaded.params(), net.params()));
  std::filesystem::remove(path);
}

TEST_CASE("cvar variant trains the shared quantile critic in the agent block") {
  TrainConfig cfg = small_config("cvar");
  cfg.n_quantiles = 8;
  saac::TrainerState state = saac::make_trainer_state(cfg);
  REQUIRE(state.agent.kind == saac::CriticKind::kQuantile);
  REQUIRE(state.agent.qcritic.has_value());
  REQUIRE_FALSE(state.agent.critic.has_value());
  REQUIRE_FALSE(state.adversary->cons.has_value());
  saac::ReplayBuffer buffer(256);
  for (Transition& t : hazard_batch(64, 21)) buffer.push(std::move(t));
  saac::TrainStreams streams{Rng::stream(5, 1), Rng::stream(5, 2),
                             Rng::stream(5, 3)};
  const std::vector<double> before(state.agent.qcritic->net().params().begin(),
                                   state.agent.qcritic->net().params().end());
  REQUIRE(saac::train_step(state, buffer, cfg, streams));
  CHECK_FALSE(params_equal(state.agent.qcritic->net().params(), before));
}

TEST_CASE("msd variant runs without a dedicated adversary critic") {
  TrainConfig cfg = small_config("msd");
  saac::TrainerState state = saac::make_trainer_state(cfg);
  REQUIRE_FALSE(state.adversary->cons.has_value());
  saac::ReplayBuffer buffer(256);
  for (Transition& t : hazard_batch(64, 22)) buffer.push(std::move(t));
  saac::TrainStreams streams{Rng::stream(6, 1), Rng::stream(6, 2),
                             Rng::stream(6, 3)};
  const std::vector<double> agent_q_before(
      state.agent.critic->q1().params().begin(),
      state.agent.critic->q1().params().end());
  const std::vector<double> omega_before(
      state.adversary->policy.trunk().params().begin(),
      state.adversary->policy.trunk().params().end());
  REQUIRE(saac::train_step(state, buffer, cfg, streams));
  CHECK_FALSE(params_equal(state.adversary->policy.trunk().params(),
                           omega_before));
  // The adversary block read the agent critic before the agent block
  // updated it; isolation is verified at the loss level elsewhere.
  CHECK_FALSE(params_equal(state.agent.critic->q1().params(), agent_q_before));
}
