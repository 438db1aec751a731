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

#ifndef SAAC_ORACLE_HPP_
#define SAAC_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "saac/common.hpp"
#include "saac/envs.hpp"

namespace saac {

// ---------------------------------------------------------------------------
// Small enumerable MDP for exact verification. Rewards attach to (s, a);
// entry_reward is an optional bonus collected on arrival in a state, which
// lets outcome-dependent terminal payoffs (goal vs error) stay exact.
// ---------------------------------------------------------------------------
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;         // P[s][a][s'], flattened
  std::vector<double> reward;             // R[s][a]
  std::vector<double> entry_reward;       // bonus on entering s'
  std::vector<std::uint8_t> constraint_cost;  // C[s][a] in {0, 1}
  std::vector<std::uint8_t> terminal;     // absorbing states
  std::vector<std::uint8_t> error_state;  // E subset of S
  double gamma = 1.0;
  int horizon = 0;
  int start_state = 0;

  double p(int s, int a, int s2) const {
    return transition[(s * n_actions + a) * n_states + s2];
  }
  double& p(int s, int a, int s2) {
    return transition[(s * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return reward[s * n_actions + a]; }
  double& r(int s, int a) { return reward[s * n_actions + a]; }

  static TabularMDP make(int n_states, int n_actions) {
    TabularMDP m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.transition.assign(
        static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    m.reward.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    m.entry_reward.assign(n_states, 0.0);
    m.constraint_cost.assign(
        static_cast<std::size_t>(n_states) * n_actions, 0);
    m.terminal.assign(n_states, 0);
    m.error_state.assign(n_states, 0);
    return m;
  }

  void validate() const {
    SAAC_CHECK(n_states > 0 && n_actions > 0, "TabularMDP: dimensions");
    SAAC_CHECK(gamma > 0.0 && gamma <= 1.0, "TabularMDP: gamma");
    for (int s = 0; s < n_states; ++s) {
      if (terminal[s]) continue;
      for (int a = 0; a < n_actions; ++a) {
        double total = 0.0;
        for (int s2 = 0; s2 < n_states; ++s2) total += p(s, a, s2);
        SAAC_CHECK(std::fabs(total - 1.0) <= 1e-12,
                   "TabularMDP: transition row does not sum to one");
      }
    }
  }
};

namespace internal {

inline double logsumexp(std::span<const double> xs) {
  double m = xs[0];
  for (double x : xs) m = std::max(m, x);
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

// Dense linear solve with partial pivoting; the systems here are tiny.
inline std::vector<double> solve_linear(std::vector<double> a,
                                        std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row) {
      if (std::fabs(a[row * n + col]) > std::fabs(a[pivot * n + col])) {
        pivot = row;
      }
    }
    SAAC_CHECK(std::fabs(a[pivot * n + col]) > 1e-14,
               "solve_linear: singular matrix");
    if (pivot != col) {
      for (int k = 0; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
      std::swap(b[col], b[pivot]);
    }
    for (int row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] / a[col * n + col];
      for (int k = col; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[row];
    for (int k = row + 1; k < n; ++k) acc -= a[row * n + k] * x[k];
    x[row] = acc / a[row * n + row];
  }
  return x;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Soft value iteration: fixed point of
//   Q(s,a) = R(s,a) + sum_s' P(s'|s,a) (B(s') + gamma V(s')),
//   V(s)   = alpha log sum_a exp(Q(s,a) / alpha)        (0 at terminals).
// Successive iterates contract with factor gamma in max norm; per-sweep
// deltas are reported through `deltas` when requested.
// ---------------------------------------------------------------------------
inline std::vector<double> soft_value_iteration(
    const TabularMDP& mdp, double alpha, double tolerance,
    int max_iterations = 1000000, std::vector<double>* deltas = nullptr) {
  mdp.validate();
  SAAC_CHECK(alpha > 0.0, "soft_value_iteration: alpha must be positive");
  SAAC_CHECK(mdp.gamma < 1.0 || mdp.horizon > 0,
             "soft_value_iteration: needs gamma < 1 or a finite horizon");
  const int ns = mdp.n_states, na = mdp.n_actions;
  std::vector<double> q(static_cast<std::size_t>(ns) * na, 0.0);
  std::vector<double> q_next(q.size(), 0.0);
  std::vector<double> v(ns, 0.0);
  std::vector<double> row(na);
  for (int it = 0; it < max_iterations; ++it) {
    for (int s = 0; s < ns; ++s) {
      if (mdp.terminal[s]) {
        v[s] = 0.0;
        continue;
      }
      for (int a = 0; a < na; ++a) row[a] = q[s * na + a] / alpha;
      v[s] = alpha * internal::logsumexp(row);
    }
    double delta = 0.0;
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a) {
        double acc = mdp.r(s, a);
        if (!mdp.terminal[s]) {
          for (int s2 = 0; s2 < ns; ++s2) {
            const double p = mdp.p(s, a, s2);
            if (p > 0.0) acc += p * (mdp.entry_reward[s2] + mdp.gamma * v[s2]);
          }
        }
        q_next[s * na + a] = acc;
        delta = std::max(delta, std::fabs(acc - q[s * na + a]));
      }
    }
    q.swap(q_next);
    if (deltas != nullptr) deltas->push_back(delta);
    if (delta < tolerance) return q;
  }
  throw std::runtime_error(
      "soft_value_iteration: no convergence within the iteration cap");
}

// pi(a|s) proportional to exp(Q(s,a) / alpha); rows sum to one.
inline std::vector<double> boltzmann_policy(std::span<const double> q_table,
                                            int n_states, int n_actions,
                                            double alpha) {
  SAAC_CHECK(static_cast<int>(q_table.size()) == n_states * n_actions,
             "boltzmann_policy: table size");
  SAAC_CHECK(alpha > 0.0, "boltzmann_policy: alpha must be positive");
  std::vector<double> pi(q_table.size());
  for (int s = 0; s < n_states; ++s) {
    double m = q_table[s * n_actions];
    for (int a = 0; a < n_actions; ++a) {
      m = std::max(m, q_table[s * n_actions + a]);
    }
    double z = 0.0;
    for (int a = 0; a < n_actions; ++a) {
      pi[s * n_actions + a] = std::exp((q_table[s * n_actions + a] - m) / alpha);
      z += pi[s * n_actions + a];
    }
    for (int a = 0; a < n_actions; ++a) pi[s * n_actions + a] /= z;
  }
  return pi;
}

// ---------------------------------------------------------------------------
// Exact finite-horizon return distribution under a tabular policy,
// undiscounted, with the probability of ever entering an error state.
// Atoms over (state, error flag, return) are propagated step by step;
// returns are merged on a 1e-9 grid. Throws when the atom count exceeds the
// cap (the trajectory space is not enumerable at this size).
// ---------------------------------------------------------------------------
struct ReturnDistribution {
  std::vector<double> values;  // ascending
  std::vector<double> probs;
  double error_probability = 0.0;

  double total_probability() const {
    return std::accumulate(probs.begin(), probs.end(), 0.0);
  }
  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
    return m;
  }
  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      v += probs[i] * (values[i] - m) * (values[i] - m);
    }
    return v;
  }
  // Lower-tail CVaR: expectation of the worst lambda fraction, splitting the
  // boundary atom. CVaR_1 equals the mean.
  double cvar(double lambda) const {
    SAAC_CHECK(lambda > 0.0 && lambda <= 1.0, "cvar: lambda in (0, 1]");
    double mass = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < values.size() && mass < lambda; ++i) {
      const double take = std::min(probs[i], lambda - mass);
      acc += values[i] * take;
      mass += take;
    }
    return acc / lambda;
  }
};

inline ReturnDistribution return_distribution(const TabularMDP& mdp,
                                              std::span<const double> policy,
                                              std::size_t atom_cap = 2000000) {
  mdp.validate();
  SAAC_CHECK(static_cast<int>(policy.size()) == mdp.n_states * mdp.n_actions,
             "return_distribution: policy table size");
  SAAC_CHECK(mdp.horizon > 0, "return_distribution: needs a finite horizon");

  struct Key {
    int state;
    bool entered_error;
    std::int64_t ret_key;
    bool operator<(const Key& o) const {
      if (state != o.state) return state < o.state;
      if (entered_error != o.entered_error) return entered_error < o.entered_error;
      return ret_key < o.ret_key;
    }
  };
  struct Atom {
    double prob;
    double ret;
  };
  const auto key_of = [](int s, bool e, double ret) {
    return Key{s, e, static_cast<std::int64_t>(std::llround(ret * 1e9))};
  };

  std::map<Key, Atom> live;
  std::map<Key, Atom> finals;  // state field unused once finalized
  const auto add = [&](std::map<Key, Atom>& pool, int s, bool e, double ret,
                       double p) {
    const Key k = key_of(s, e, ret);
    auto [it, inserted] = pool.emplace(k, Atom{p, ret});
    if (!inserted) it->second.prob += p;
  };

  add(live, mdp.start_state, mdp.error_state[mdp.start_state] != 0, 0.0, 1.0);
  for (int t = 0; t < mdp.horizon && !live.empty(); ++t) {
    std::map<Key, Atom> next;
    for (const auto& [key, atom] : live) {
      if (mdp.terminal[key.state]) {
        add(finals, 0, key.entered_error, atom.ret, atom.prob);
        continue;
      }
      for (int a = 0; a < mdp.n_actions; ++a) {
        const double pa = policy[key.state * mdp.n_actions + a];
        if (pa <= 0.0) continue;
        for (int s2 = 0; s2 < mdp.n_states; ++s2) {
          const double pt = mdp.p(key.state, a, s2);
          if (pt <= 0.0) continue;
          const double ret =
              atom.ret + mdp.r(key.state, a) + mdp.entry_reward[s2];
          const bool err = key.entered_error || mdp.error_state[s2] != 0;
          add(next, s2, err, ret, atom.prob * pa * pt);
        }
      }
    }
    SAAC_CHECK(next.size() + finals.size() <= atom_cap,
               "return_distribution: trajectory-count cap exceeded");
    live.swap(next);
  }
  for (const auto& [key, atom] : live) {
    add(finals, 0, key.entered_error, atom.ret, atom.prob);
  }

  std::vector<std::pair<double, std::pair<double, bool>>> sorted;
  sorted.reserve(finals.size());
  ReturnDistribution out;
  for (const auto& [key, atom] : finals) {
    sorted.push_back({atom.ret, {atom.prob, key.entered_error}});
    if (key.entered_error) out.error_probability += atom.prob;
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Merge equal returns across error flags for the marginal distribution.
  for (const auto& [ret, rest] : sorted) {
    if (!out.values.empty() && out.values.back() == ret) {
      out.probs.back() += rest.first;
    } else {
      out.values.push_back(ret);
      out.probs.push_back(rest.first);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact soft objective of a tabular policy: V(s) as the fixed point of
//   V(s) = sum_a pi(a|s) [R(s,a) - alpha log pi(a|s)
//                         + sum_s' P(s'|s,a)(B(s') + gamma V(s'))],
// solved as a linear system (terminals pinned to zero).
// ---------------------------------------------------------------------------
inline std::vector<double> soft_policy_value(const TabularMDP& mdp,
                                             std::span<const double> policy,
                                             double alpha) {
  mdp.validate();
  const int ns = mdp.n_states, na = mdp.n_actions;
  std::vector<double> a(static_cast<std::size_t>(ns) * ns, 0.0);
  std::vector<double> b(ns, 0.0);
  for (int s = 0; s < ns; ++s) {
    a[s * ns + s] = 1.0;
    if (mdp.terminal[s]) continue;
    for (int act = 0; act < na; ++act) {
      const double pa = policy[s * na + act];
      if (pa <= 0.0) continue;
      b[s] += pa * (mdp.r(s, act) - alpha * std::log(pa));
      for (int s2 = 0; s2 < ns; ++s2) {
        const double pt = mdp.p(s, act, s2);
        if (pt <= 0.0) continue;
        b[s] += pa * pt * mdp.entry_reward[s2];
        a[s * ns + s2] -= pa * pt * mdp.gamma;
      }
    }
  }
  return internal::solve_linear(std::move(a), std::move(b));
}

// ---------------------------------------------------------------------------
// MaxEnt equivalence check: the Boltzmann policy of the soft-VI Q table
// should dominate a dense grid over tabular policies in the soft objective
// V + alpha H at every state. Report-only.
// ---------------------------------------------------------------------------
struct EquivalenceReport {
  double boltzmann_objective = 0.0;  // at the start state
  double best_grid_objective = 0.0;
  double max_margin_violation = 0.0;  // max over states of grid - boltzmann
  bool pass = false;
};

inline EquivalenceReport check_maxent_equivalence(const TabularMDP& mdp,
                                                  double alpha,
                                                  int grid_points = 51,
                                                  double tolerance = 1e-3) {
  SAAC_CHECK(mdp.n_actions == 2,
             "check_maxent_equivalence: grid search expects two actions");
  SAAC_CHECK(grid_points >= 2, "check_maxent_equivalence: grid points");
  const std::vector<double> q =
      soft_value_iteration(mdp, alpha, 1e-12, 2000000);
  const std::vector<double> pi_star =
      boltzmann_policy(q, mdp.n_states, mdp.n_actions, alpha);
  const std::vector<double> v_star = soft_policy_value(mdp, pi_star, alpha);

  EquivalenceReport report;
  report.boltzmann_objective = v_star[mdp.start_state];
  report.best_grid_objective = -std::numeric_limits<double>::infinity();

  const int ns = mdp.n_states;
  std::vector<int> idx(ns, 0);
  std::vector<double> pi(static_cast<std::size_t>(ns) * 2, 0.0);
  while (true) {
    for (int s = 0; s < ns; ++s) {
      const double p0 =
          static_cast<double>(idx[s]) / static_cast<double>(grid_points - 1);
      pi[s * 2 + 0] = p0;
      pi[s * 2 + 1] = 1.0 - p0;
    }
    const std::vector<double> v = soft_policy_value(mdp, pi, alpha);
    report.best_grid_objective =
        std::max(report.best_grid_objective, v[mdp.start_state]);
    for (int s = 0; s < ns; ++s) {
      report.max_margin_violation =
          std::max(report.max_margin_violation, v[s] - v_star[s]);
    }
    int carry = 0;
    while (carry < ns && ++idx[carry] >= grid_points) {
      idx[carry] = 0;
      ++carry;
    }
    if (carry >= ns) break;
  }
  report.pass = report.max_margin_violation <= tolerance;
  return report;
}

// ---------------------------------------------------------------------------
// Tabular mirror of RiskyChain: states 0..4 walkable, 5 = goal, 6 = error.
// Matches the environment's dynamics and rewards exactly (terminal payoffs
// ride on entry_reward).
// ---------------------------------------------------------------------------
inline TabularMDP make_chain_tabular(const EnvConfig& cfg) {
  constexpr int kGoal = 5, kError = 6;
  TabularMDP m = TabularMDP::make(7, 2);
  m.gamma = cfg.gamma;
  m.horizon = cfg.horizon;
  m.start_state = cfg.chain_start;
  m.terminal[kGoal] = 1;
  m.terminal[kError] = 1;
  m.error_state[kError] = 1;
  m.entry_reward[kGoal] = RiskyChain::kGoalReward;
  m.entry_reward[kError] = RiskyChain::kErrorReward;
  const auto target = [&](int pos) {
    if (pos < 0) return kError;
    if (pos >= RiskyChain::kWalkStates) return kGoal;
    return pos;
  };
  for (int s = 0; s < RiskyChain::kWalkStates; ++s) {
    for (int a = 0; a < 2; ++a) {  // 0 = left, 1 = right
      const int intended = a == 1 ? +1 : -1;
      m.r(s, a) = RiskyChain::kStepCost;
      m.p(s, a, target(s + intended)) += 1.0 - cfg.slip_prob;
      m.p(s, a, target(s - intended)) += cfg.slip_prob;
    }
  }
  m.validate();
  return m;
}

}  // namespace saac

#endif  // SAAC_ORACLE_HPP_
