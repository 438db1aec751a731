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

#ifndef SAAC_CLI_HPP_
#define SAAC_CLI_HPP_

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#if defined(__unix__) || defined(__APPLE__)
#include <sys/wait.h>
#include <unistd.h>
#define SAAC_HAS_FORK 1
#endif

#include "saac/adversary.hpp"
#include "saac/config.hpp"
#include "saac/csv.hpp"
#include "saac/oracle.hpp"
#include "saac/pca.hpp"
#include "saac/trainer.hpp"

namespace saac {

// ---------------------------------------------------------------------------
// Gradient suite: finite-difference checks for every loss in the framework,
// on tiny networks with frozen sampling noise. Shared by the grad-check
// command and the acceptance suite.
// ---------------------------------------------------------------------------
struct GradSuiteEntry {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline std::vector<GradSuiteEntry> run_grad_suite() {
  const int sd = 3, ad = 2;
  const std::vector<int> hidden = {8, 8};
  const double alpha = 0.31, beta = 0.7, gamma = 0.97;
  Rng init(20260101);

  SquashedGaussianPolicy policy_theta(sd, ad, hidden, {-1, -1}, {1, 1}, init);
  SquashedGaussianPolicy policy_omega(sd, ad, hidden, {-1, -1}, {1, 1}, init);
  SquashedGaussianPolicy theta_old(sd, ad, hidden, {-1, -1}, {1, 1}, init);
  SquashedGaussianPolicy omega_old(sd, ad, hidden, {-1, -1}, {1, 1}, init);
  TwinCritic critic(sd, ad, hidden, init);
  TwinCritic critic_target(sd, ad, hidden, init);
  TwinCritic cons(sd, ad, hidden, init);
  TwinCritic cons_target(sd, ad, hidden, init);
  QuantileCritic quantile(sd, ad, hidden, 8, init);
  QuantileCritic quantile_target(sd, ad, hidden, 8, init);

  std::vector<Transition> batch;
  for (int b = 0; b < 4; ++b) {
    Transition tr;
    for (int i = 0; i < sd; ++i) tr.state.push_back(init.uniform(-1, 1));
    for (int i = 0; i < ad; ++i) tr.action.push_back(init.uniform(-0.9, 0.9));
    tr.reward = init.uniform(-1, 1);
    tr.constraint_cost = (b % 3 == 0) ? 1.0 : 0.0;
    for (int i = 0; i < sd; ++i) tr.next_state.push_back(init.uniform(-1, 1));
    tr.terminated = (b == 2);
    batch.push_back(std::move(tr));
  }

  std::vector<GradSuiteEntry> entries;
  const auto record = [&entries](const std::string& name,
                                 const GradCheckResult& r, double tol) {
    entries.push_back(
        GradSuiteEntry{name, r.max_rel_error, tol, r.max_rel_error < tol});
  };

  const Rng frozen = Rng::stream(7, 7);

  {  // J(Q_phi), Eq-style soft Bellman residual on the task reward.
    Rng r = frozen;
    const std::vector<double> y =
        soft_target(batch, policy_theta, critic_target, alpha, gamma, r);
    std::vector<double> g1(critic.q1().param_count(), 0.0);
    std::vector<double> g2(critic.q2().param_count(), 0.0);
    critic_loss(batch, critic, y, &g1, &g2);
    const auto loss = [&]() {
      return critic_loss(batch, critic, y, nullptr, nullptr);
    };
    ParamBlock blocks[] = {{critic.q1().params(), g1},
                           {critic.q2().params(), g2}};
    record("J(Q_phi)", grad_check_blocks(loss, blocks, 1e-4), 1e-4);
  }
  {  // Base policy loss.
    std::vector<double> g(policy_theta.trunk().param_count(), 0.0);
    {
      Rng r = frozen;
      base_policy_loss(batch, policy_theta, critic, alpha, r, &g);
    }
    const auto loss = [&]() {
      Rng r = frozen;
      return base_policy_loss(batch, policy_theta, critic, alpha, r, nullptr);
    };
    record("J(pi_theta)",
           grad_check(loss, policy_theta.trunk().params(), g, 1e-4), 1e-4);
  }
  {  // Policy loss with the repulsion term.
    std::vector<double> g(policy_theta.trunk().param_count(), 0.0);
    {
      Rng r = frozen;
      repulsive_policy_loss(batch, policy_theta, critic, theta_old, omega_old,
                            alpha, beta, r, &g);
    }
    const auto loss = [&]() {
      Rng r = frozen;
      return repulsive_policy_loss(batch, policy_theta, critic, theta_old,
                                   omega_old, alpha, beta, r, nullptr);
    };
    record("J(pi_theta)+repulsion",
           grad_check(loss, policy_theta.trunk().params(), g, 1e-4), 1e-4);
  }
  {  // Adversary policy loss, one check per risk critic.
    AdversaryCritic views[3];
    views[0].variant = AdversaryVariant::kCons;
    views[0].cons = &cons;
    views[1].variant = AdversaryVariant::kMsd;
    views[1].agent_twin = &critic;
    views[1].lambda_msd = -1.0;
    views[2].variant = AdversaryVariant::kCvar;
    views[2].quantile = &quantile;
    views[2].lambda_cvar = 0.25;
    const char* names[3] = {"J(pi_omega)/cons", "J(pi_omega)/msd",
                            "J(pi_omega)/cvar"};
    for (int k = 0; k < 3; ++k) {
      std::vector<double> g(policy_omega.trunk().param_count(), 0.0);
      {
        Rng r = frozen;
        adversary_policy_loss(batch, policy_omega, views[k], alpha, r, &g);
      }
      const auto loss = [&, k]() {
        Rng r = frozen;
        return adversary_policy_loss(batch, policy_omega, views[k], alpha, r,
                                     nullptr);
      };
      record(names[k],
             grad_check(loss, policy_omega.trunk().params(), g, 1e-4), 1e-4);
    }
  }
  {  // J(Q_psi): constraint critic residual.
    Rng r = frozen;
    const std::vector<double> y =
        cons_soft_target(batch, policy_omega, cons_target, alpha, gamma, r);
    std::vector<double> g1(cons.q1().param_count(), 0.0);
    std::vector<double> g2(cons.q2().param_count(), 0.0);
    cons_critic_loss(batch, cons, y, &g1, &g2);
    const auto loss = [&]() {
      return cons_critic_loss(batch, cons, y, nullptr, nullptr);
    };
    ParamBlock blocks[] = {{cons.q1().params(), g1}, {cons.q2().params(), g2}};
    record("J(Q_psi)", grad_check_blocks(loss, blocks, 1e-4), 1e-4);
  }
  {  // Quantile critic loss; targets nudged away from the delta = 0 kink.
    Rng r = frozen;
    std::vector<std::vector<double>> y = quantile_targets(
        batch, quantile_target, policy_theta, alpha, gamma, r);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const std::vector<double> z =
          quantile.quantiles(batch[b].state, batch[b].action);
      for (double& yj : y[b]) {
        bool moved = true;
        while (moved) {
          moved = false;
          for (double zi : z) {
            if (std::fabs(yj - zi) < 2e-3) {
              yj += 5e-3;
              moved = true;
            }
          }
        }
      }
    }
    std::vector<double> g(quantile.net().param_count(), 0.0);
    quantile_regression_loss(batch, quantile, y, &g);
    const auto loss = [&]() {
      return quantile_regression_loss(batch, quantile, y, nullptr);
    };
    record("quantile_critic_loss",
           grad_check(loss, quantile.net().params(), g, 1e-3), 1e-3);
  }
  {  // J(alpha): linear in log alpha.
    EntropyTemp temp{std::log(0.7), -2.0};
    double g = 0.0;
    {
      Rng r = frozen;
      alpha_loss(batch, policy_theta, temp, r, &g);
    }
    const auto loss = [&]() {
      Rng r = frozen;
      return alpha_loss(batch, policy_theta, temp, r, nullptr);
    };
    const double analytic[1] = {g};
    record("J(alpha)",
           grad_check(loss, std::span<double>(&temp.log_alpha, 1), analytic,
                      1e-6),
           1e-6);
  }
  {  // J(beta): linear in log beta.
    BetaTemp temp{std::log(0.5), 1.5};
    double g = 0.0;
    {
      Rng r = frozen;
      beta_loss(batch, policy_theta, policy_omega, temp, 3, r, &g);
    }
    const auto loss = [&]() {
      Rng r = frozen;
      return beta_loss(batch, policy_theta, policy_omega, temp, 3, r, nullptr);
    };
    const double analytic[1] = {g};
    record("J(beta)",
           grad_check(loss, std::span<double>(&temp.log_beta, 1), analytic,
                      1e-6),
           1e-6);
  }
  return entries;
}

inline int cmd_grad_check(std::ostream& out) {
  const std::vector<GradSuiteEntry> entries = run_grad_suite();
  bool all = true;
  for (const GradSuiteEntry& e : entries) {
    out << (e.pass ? "[PASS] " : "[FAIL] ") << e.name << "  max rel err "
        << e.max_rel_error << " (tol " << e.tolerance << ")\n";
    all = all && e.pass;
  }
  out << (all ? "grad-check: all losses pass\n"
              : "grad-check: FAILURES present\n");
  return all ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Oracle suite: exact tabular checks (soft value iteration, Boltzmann
// equivalence, risk formulas, brute-force distributions).
// ---------------------------------------------------------------------------
struct OracleCheckEntry {
  std::string name;
  std::string detail;
  bool pass = false;
};

// 2-state / 2-action MDP with asymmetric rewards and mixing transitions,
// used wherever the equivalence grid is needed.
inline TabularMDP make_two_state_mdp() {
  TabularMDP m = TabularMDP::make(2, 2);
  m.gamma = 0.9;
  m.horizon = 0;
  m.start_state = 0;
  m.r(0, 0) = 1.0;
  m.r(0, 1) = 0.0;
  m.r(1, 0) = -0.5;
  m.r(1, 1) = 2.0;
  m.p(0, 0, 0) = 0.7;
  m.p(0, 0, 1) = 0.3;
  m.p(0, 1, 0) = 0.2;
  m.p(0, 1, 1) = 0.8;
  m.p(1, 0, 0) = 0.99;
  m.p(1, 0, 1) = 0.01;
  m.p(1, 1, 0) = 0.4;
  m.p(1, 1, 1) = 0.6;
  m.validate();
  return m;
}

inline std::vector<OracleCheckEntry> run_oracle_suite() {
  std::vector<OracleCheckEntry> checks;
  const auto add = [&checks](const std::string& name, bool pass,
                             const std::string& detail) {
    checks.push_back(OracleCheckEntry{name, detail, pass});
  };

  {  // Geometric-series fixed point; a single action has zero entropy.
    TabularMDP m = TabularMDP::make(1, 1);
    m.gamma = 0.9;
    m.r(0, 0) = 1.0;
    m.p(0, 0, 0) = 1.0;
    const std::vector<double> q = soft_value_iteration(m, 1.0, 1e-10);
    add("soft_vi_geometric", std::fabs(q[0] - 10.0) < 1e-6,
        "Q=" + format_double(q[0]) + " expected 10");
  }
  {  // Low-temperature limit approaches hard value iteration.
    const TabularMDP m = make_two_state_mdp();
    const std::vector<double> q_soft = soft_value_iteration(m, 1e-4, 1e-12);
    // Hard value iteration oracle.
    std::vector<double> v(m.n_states, 0.0);
    for (int it = 0; it < 100000; ++it) {
      std::vector<double> v2(m.n_states, 0.0);
      double delta = 0.0;
      for (int s = 0; s < m.n_states; ++s) {
        double best = -1e300;
        for (int a = 0; a < m.n_actions; ++a) {
          double acc = m.r(s, a);
          for (int s2 = 0; s2 < m.n_states; ++s2) {
            acc += m.p(s, a, s2) * m.gamma * v[s2];
          }
          best = std::max(best, acc);
        }
        v2[s] = best;
        delta = std::max(delta, std::fabs(v2[s] - v[s]));
      }
      v = v2;
      if (delta < 1e-13) break;
    }
    double worst = 0.0;
    for (int s = 0; s < m.n_states; ++s) {
      double best_soft = -1e300;
      for (int a = 0; a < m.n_actions; ++a) {
        best_soft = std::max(best_soft, q_soft[s * m.n_actions + a]);
      }
      worst = std::max(worst, std::fabs(best_soft - v[s]));
    }
    add("soft_vi_hard_limit", worst < 1e-3,
        "max |softmax - max| value gap " + format_double(worst));
  }
  {  // Boltzmann equivalence on the 51^2 policy grid.
    const EquivalenceReport rep =
        check_maxent_equivalence(make_two_state_mdp(), 1.0, 51, 1e-3);
    add("maxent_equivalence", rep.pass,
        "max grid margin " + format_double(rep.max_margin_violation));
  }
  {  // CVaR weights: N=4, lambda=0.25 keeps only the lowest quantile.
    const std::vector<double> z = {-3.0, 0.5, 1.0, 4.0};
    const double q = cvar_from_quantiles(z, 0.25);
    bool ok = std::fabs(q - 3.0) < 1e-12;
    for (double lambda : {0.1, 0.25, 0.5, 1.0}) {
      const std::vector<double> c(4, 1.7);
      ok = ok && std::fabs(cvar_from_quantiles(c, lambda) - (-1.7)) < 1e-12;
    }
    add("cvar_formula", ok, "truncated-tail weights");
  }
  {  // MSD arithmetic and shift invariance.
    std::vector<double> q = {0.0, 2.0};
    const std::vector<double> m1 = msd_values(q, -1.0);
    bool ok = std::fabs(m1[0] + 1.0) < 1e-12 && std::fabs(m1[1] - 1.0) < 1e-12;
    const std::vector<double> shifted = {0.0 + 5.25, 2.0 + 5.25};
    const std::vector<double> m2 = msd_values(shifted, -1.0);
    ok = ok && std::fabs((m2[0] - m1[0]) - 5.25) < 1e-12 &&
         std::fabs((m2[1] - m1[1]) - 5.25) < 1e-12;
    add("msd_formula", ok, "batch {0,2}, lambda=-1 -> {-1,1}");
  }
  {  // Two-outcome distribution: mean, variance, lower-tail CVaR.
    TabularMDP m = TabularMDP::make(3, 1);
    m.gamma = 1.0;
    m.horizon = 1;
    m.p(0, 0, 1) = 0.75;
    m.p(0, 0, 2) = 0.25;
    m.entry_reward[2] = 1.0;
    m.terminal[1] = m.terminal[2] = 1;
    m.validate();
    const std::vector<double> pi = {1.0, 1.0, 1.0};
    const ReturnDistribution dist = return_distribution(m, pi);
    const bool ok = std::fabs(dist.mean() - 0.25) < 1e-12 &&
                    std::fabs(dist.variance() - 0.1875) < 1e-12 &&
                    std::fabs(dist.cvar(0.25) - 0.0) < 1e-12 &&
                    std::fabs(dist.total_probability() - 1.0) < 1e-10;
    add("return_distribution_two_outcomes", ok,
        "mean 0.25, var 0.1875, cvar_0.25 = 0");
  }
  {  // Chain absorption probability vs in-MDP Monte Carlo.
    EnvConfig ec;
    ec.name = "chain";
    ec.horizon = 20;
    ec.slip_prob = 0.2;
    const TabularMDP m = make_chain_tabular(ec);
    const std::vector<double> uniform(m.n_states * m.n_actions, 0.5);
    const ReturnDistribution dist = return_distribution(m, uniform);
    Rng rng(99);
    const int episodes = 100000;
    int absorbed = 0;
    for (int e = 0; e < episodes; ++e) {
      int s = m.start_state;
      for (int t = 0; t < m.horizon && !m.terminal[s]; ++t) {
        const int a = rng.uniform() < 0.5 ? 0 : 1;
        const double u = rng.uniform();
        double acc = 0.0;
        int s2 = 0;
        for (; s2 < m.n_states; ++s2) {
          acc += m.p(s, a, s2);
          if (u < acc) break;
        }
        s = std::min(s2, m.n_states - 1);
        if (m.error_state[s]) {
          ++absorbed;
          break;
        }
      }
    }
    const double mc = static_cast<double>(absorbed) / episodes;
    const double se =
        std::sqrt(dist.error_probability * (1 - dist.error_probability) /
                  episodes);
    const bool ok = std::fabs(mc - dist.error_probability) < 3.0 * se + 1e-9;
    add("chain_absorption", ok,
        "exact " + format_double(dist.error_probability) + " vs mc " +
            format_double(mc));
  }
  return checks;
}

inline int cmd_oracle_check(std::ostream& out) {
  const std::vector<OracleCheckEntry> checks = run_oracle_suite();
  bool all = true;
  for (const OracleCheckEntry& c : checks) {
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "  " << c.detail
        << "\n";
    all = all && c.pass;
  }
  out << (all ? "oracle-check: all checks pass\n"
              : "oracle-check: FAILURES present\n");
  return all ? 0 : 1;
}

// ---------------------------------------------------------------------------
// train: one sequential (or forked) run per (variant, seed).
// ---------------------------------------------------------------------------
struct RunSpec {
  std::string config_path;  // empty: defaults only
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> variants;
  std::string out_root;
  int jobs = 1;
};

inline TrainConfig resolve_run_config(const RunSpec& spec,
                                      const std::string& variant,
                                      std::uint64_t seed) {
  TrainConfig cfg = spec.config_path.empty()
                        ? parse_config_text("", spec.overrides)
                        : parse_config(spec.config_path, spec.overrides);
  cfg.adversary = variant;
  cfg.seed = seed;
  cfg.out_dir = (std::filesystem::path(spec.out_root) / variant /
                 std::to_string(seed))
                    .string();
  cfg.validate();
  return cfg;
}

inline int cmd_train(const RunSpec& spec, std::ostream& log) {
  SAAC_CHECK(!spec.out_root.empty(),
             "train: no output directory (--out or SAAC_OUT)");
  SAAC_CHECK(!spec.seeds.empty(), "train: at least one seed required");
  SAAC_CHECK(!spec.variants.empty(), "train: at least one variant required");
  SAAC_CHECK(spec.jobs >= 1, "train: jobs must be >= 1");

  struct Job {
    std::string variant;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const std::string& v : spec.variants) {
    for (std::uint64_t s : spec.seeds) jobs.push_back(Job{v, s});
  }

  const auto run_one = [&](const Job& job) -> int {
    try {
      const TrainConfig cfg = resolve_run_config(spec, job.variant, job.seed);
      const RunMetrics m = run_training(cfg);
      log << "run " << job.variant << "/" << job.seed << ": "
          << m.rows.size() << " eval points, "
          << format_double(m.wall_time_seconds) << "s\n";
      return 0;
    } catch (const std::exception& e) {
      log << "run " << job.variant << "/" << job.seed
          << " aborted: " << e.what() << "\n";
      return 1;
    }
  };

  int status = 0;
#ifdef SAAC_HAS_FORK
  if (spec.jobs > 1) {
    std::size_t next = 0;
    int running = 0;
    while (next < jobs.size() || running > 0) {
      while (next < jobs.size() && running < spec.jobs) {
        const pid_t pid = fork();
        SAAC_CHECK(pid >= 0, "train: fork failed");
        if (pid == 0) {
          const int rc = run_one(jobs[next]);
          std::cout.flush();
          _exit(rc);
        }
        ++next;
        ++running;
      }
      int child_status = 0;
      if (wait(&child_status) > 0) {
        --running;
        if (!WIFEXITED(child_status) || WEXITSTATUS(child_status) != 0) {
          status = 1;
        }
      }
    }
    return status;
  }
#endif
  for (const Job& job : jobs) {
    if (run_one(job) != 0) status = 1;
  }
  return status;
}

// ---------------------------------------------------------------------------
// eval: load a policy snapshot and run deterministic evaluation episodes.
// ---------------------------------------------------------------------------
inline int cmd_eval(const std::string& config_path,
                    const std::vector<std::pair<std::string, std::string>>&
                        overrides,
                    const std::string& snapshot_path, int episodes,
                    std::ostream& out) {
  TrainConfig cfg = config_path.empty() ? parse_config_text("", overrides)
                                        : parse_config(config_path, overrides);
  const std::unique_ptr<Environment> env = make_env(cfg.env);
  Rng init(cfg.seed);
  SquashedGaussianPolicy policy(env->state_dim(), env->action_dim(),
                                cfg.hidden, env->action_low(),
                                env->action_high(), init);
  policy.set_trunk(load_mlp(snapshot_path));
  Rng eval_rng = Rng::stream(cfg.seed, kStreamEval);
  const EvalResult r = evaluate(policy, *env, episodes, eval_rng);
  out << "episodes," << r.episodes << "\n";
  out << "return_mean," << format_double(r.return_mean) << "\n";
  out << "return_std," << format_double(r.return_std) << "\n";
  out << "failures," << r.failures << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// project-states: PCA of visited states with training-stage labels.
// Stage boundaries are step thresholds; a row's stage is the number of
// boundaries at or below its step.
// ---------------------------------------------------------------------------
inline int cmd_project_states(const std::vector<std::string>& files,
                              const std::vector<long>& stage_bounds,
                              const std::string& out_path, std::ostream& log) {
  SAAC_CHECK(!files.empty(), "project-states: no input files");
  std::vector<std::vector<double>> states;
  std::vector<long> steps;
  for (const std::string& file : files) {
    const CsvTable table = read_csv(file);
    SAAC_CHECK(!table.header.empty() && table.header[0] == "step",
               "project-states: expected states.csv schema in " + file);
    for (const std::vector<std::string>& row : table.rows) {
      steps.push_back(csv_long(row[0]));
      std::vector<double> s;
      for (std::size_t i = 1; i < row.size(); ++i) {
        s.push_back(csv_double(row[i]));
      }
      states.push_back(std::move(s));
    }
  }
  SAAC_CHECK(states.size() >= 3, "project-states: needs at least three rows");

  const PcaProjection proj = pca_project(states, 2);
  std::ofstream out(out_path);
  SAAC_CHECK(out.good(), "project-states: cannot write " + out_path);
  out << "pc1,pc2,stage\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    int stage = 0;
    for (long b : stage_bounds) {
      if (steps[i] >= b) ++stage;
    }
    out << format_double(proj.points[i][0]) << ','
        << format_double(proj.points[i][1]) << ',' << stage << '\n';
  }
  log << "projected " << states.size() << " states; component variances:";
  for (double v : proj.variances) log << ' ' << format_double(v);
  if (proj.rank_deficient) log << " (rank deficient)";
  log << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// compare: efficiency vs a baseline plus failure statistics per variant.
//
// Efficiency is (baseline steps to reach the threshold) / (variant steps to
// reach the same absolute threshold), where the threshold is the baseline's
// maximum seed-averaged evaluation return minus (100 - pct)% of its
// magnitude. A variant that never reaches it scores 0.
// ---------------------------------------------------------------------------
namespace internal {

struct VariantCurve {
  std::string label;
  std::vector<long> steps;
  std::vector<double> mean_return;  // averaged across seeds
  std::vector<long> final_failures;  // one per seed
};

inline VariantCurve read_variant_dir(const std::string& dir) {
  VariantCurve curve;
  curve.label = std::filesystem::path(dir).filename().string();
  if (curve.label.empty()) {
    curve.label =
        std::filesystem::path(dir).parent_path().filename().string();
  }
  std::vector<std::filesystem::path> metric_files;
  SAAC_CHECK(std::filesystem::is_directory(dir),
             "compare: not a directory: " + dir);
  if (std::filesystem::exists(std::filesystem::path(dir) / "metrics.csv")) {
    metric_files.push_back(std::filesystem::path(dir) / "metrics.csv");
  } else {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      if (entry.is_directory() &&
          std::filesystem::exists(entry.path() / "metrics.csv")) {
        metric_files.push_back(entry.path() / "metrics.csv");
      }
    }
    std::sort(metric_files.begin(), metric_files.end());
  }
  SAAC_CHECK(!metric_files.empty(),
             "compare: no metrics.csv found under " + dir);

  for (const std::filesystem::path& file : metric_files) {
    const CsvTable t = read_csv(file.string());
    const int c_step = t.column("step");
    const int c_ret = t.column("eval_return_mean");
    const int c_fail = t.column("cum_failures");
    SAAC_CHECK(!t.rows.empty(), "compare: empty metrics in " + file.string());
    if (curve.steps.empty()) {
      for (const auto& row : t.rows) {
        curve.steps.push_back(csv_long(row[c_step]));
        curve.mean_return.push_back(0.0);
      }
    }
    SAAC_CHECK(t.rows.size() == curve.steps.size(),
               "compare: seed runs disagree on eval points in " + dir);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      SAAC_CHECK(csv_long(t.rows[i][c_step]) == curve.steps[i],
                 "compare: seed runs disagree on eval steps in " + dir);
      curve.mean_return[i] += csv_double(t.rows[i][c_ret]);
    }
    curve.final_failures.push_back(csv_long(t.rows.back()[c_fail]));
  }
  for (double& r : curve.mean_return) {
    r /= static_cast<double>(metric_files.size());
  }
  return curve;
}

inline long steps_to_threshold(const VariantCurve& curve, double threshold) {
  for (std::size_t i = 0; i < curve.steps.size(); ++i) {
    if (curve.mean_return[i] >= threshold) return curve.steps[i];
  }
  return -1;
}

}  // namespace internal

inline int cmd_compare(const std::string& baseline_dir,
                       const std::vector<std::string>& run_dirs,
                       const std::string& out_path, double threshold_pct,
                       std::ostream& log) {
  SAAC_CHECK(!baseline_dir.empty(), "compare: missing baseline directory");
  SAAC_CHECK(!run_dirs.empty(), "compare: no run directories");
  SAAC_CHECK(threshold_pct > 0.0 && threshold_pct <= 100.0,
             "compare: threshold percent out of range");

  const internal::VariantCurve baseline =
      internal::read_variant_dir(baseline_dir);
  double max_return = baseline.mean_return[0];
  for (double r : baseline.mean_return) max_return = std::max(max_return, r);
  const double threshold =
      max_return - (1.0 - threshold_pct / 100.0) * std::fabs(max_return);
  const long base_steps = internal::steps_to_threshold(baseline, threshold);

  std::vector<internal::VariantCurve> curves;
  curves.push_back(baseline);
  for (const std::string& dir : run_dirs) {
    if (std::filesystem::equivalent(dir, baseline_dir)) continue;
    curves.push_back(internal::read_variant_dir(dir));
  }

  std::ofstream out(out_path);
  SAAC_CHECK(out.good(), "compare: cannot write " + out_path);
  out << "variant,efficiency,failures_mean,failures_std,seeds\n";
  for (const internal::VariantCurve& curve : curves) {
    const long steps = internal::steps_to_threshold(curve, threshold);
    double efficiency = 0.0;
    if (steps == base_steps) {
      efficiency = 1.0;
    } else if (steps >= 0 && base_steps >= 0 && steps > 0) {
      efficiency = static_cast<double>(base_steps) / steps;
    }
    double mean = 0.0;
    for (long f : curve.final_failures) mean += static_cast<double>(f);
    mean /= static_cast<double>(curve.final_failures.size());
    double var = 0.0;
    for (long f : curve.final_failures) {
      var += (f - mean) * (f - mean);
    }
    var /= static_cast<double>(curve.final_failures.size());
    out << curve.label << ',' << format_double(efficiency) << ','
        << format_double(mean) << ',' << format_double(std::sqrt(var)) << ','
        << curve.final_failures.size() << '\n';
    log << curve.label << ": efficiency x" << format_double(efficiency)
        << ", failures " << format_double(mean) << " +- "
        << format_double(std::sqrt(var)) << "\n";
  }
  return 0;
}

}  // namespace saac

#endif  // SAAC_CLI_HPP_
