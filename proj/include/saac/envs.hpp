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

#ifndef SAAC_ENVS_HPP_
#define SAAC_ENVS_HPP_

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "saac/common.hpp"
#include "saac/numerics.hpp"

namespace saac {

struct StepResult {
  std::vector<double> next_state;
  double reward = 0.0;
  double constraint_cost = 0.0;  // r_c in {0, 1}
  bool terminated = false;       // entered a terminal/error state
  bool truncated = false;        // time limit reached
};

struct EnvConfig {
  std::string name = "hazard";  // hazard | pendulum | chain
  int horizon = 200;
  double gamma = 0.99;
  // Whether r_c fires on any violated predicate or only when all are
  // violated. The catalog environments each carry a single predicate, so the
  // two readings coincide there; the switch exists for multi-constraint
  // extensions.
  std::string constraint_mode = "any";
  // HazardPoint2D geometry. The hazard disk sits just off the straight
  // start-goal line: the shortest path skims it, the safe path detours.
  double hazard_x = 0.75, hazard_y = 0.1, hazard_radius = 0.3;
  double goal_x = 1.5, goal_y = 0.0, goal_radius = 0.15;
  double goal_bonus = 50.0;
  // ConstrainedPendulum.
  double omega_max = 6.0;
  // RiskyChain.
  double slip_prob = 0.2;
  int chain_start = 0;
};

// Constrained-MDP environment. Violation predicates use strict inequality:
// a value exactly at the limit counts as safe.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual std::vector<double> action_low() const = 0;
  virtual std::vector<double> action_high() const = 0;
  virtual int horizon() const = 0;

  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(std::span<const double> action, Rng& rng) = 0;

  // Pure predicate; returns the same value step() embedded in its result.
  virtual double constraint_violated(std::span<const double> state,
                                     std::span<const double> action,
                                     std::span<const double> next_state)
      const = 0;

 protected:
  void begin_episode() {
    t_ = 0;
    done_ = false;
  }
  void before_step() const {
    SAAC_CHECK_USAGE(!done_, "step() called on a finished episode");
  }
  // Applies horizon truncation and records termination.
  void finish_step(StepResult& r) {
    ++t_;
    if (t_ >= horizon() && !r.terminated) r.truncated = true;
    done_ = r.terminated || r.truncated;
  }

 private:
  int t_ = 0;
  bool done_ = true;  // requires reset before first step
};

// ---------------------------------------------------------------------------
// HazardPoint2D: double-integrator point mass. State (x, y, vx, vy), action
// a bounded 2-D acceleration. Reward is -distance to goal per step plus a
// bonus on goal entry. Entering the hazard disk terminates the episode and
// fires the constraint signal, so failures are at most one per episode.
// ---------------------------------------------------------------------------
class HazardPoint2D : public Environment {
 public:
  explicit HazardPoint2D(const EnvConfig& cfg) : cfg_(cfg) {}

  int state_dim() const override { return 4; }
  int action_dim() const override { return 2; }
  std::vector<double> action_low() const override { return {-1.0, -1.0}; }
  std::vector<double> action_high() const override { return {1.0, 1.0}; }
  int horizon() const override { return cfg_.horizon; }

  std::vector<double> reset(Rng& rng) override {
    begin_episode();
    state_ = {rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), 0.0, 0.0};
    return state_;
  }

  StepResult step(std::span<const double> action, Rng& rng) override {
    (void)rng;  // deterministic dynamics
    before_step();
    SAAC_CHECK(action.size() == 2, "HazardPoint2D: action dimension");
    std::vector<double> next = state_;
    for (int i = 0; i < 2; ++i) {
      const double a = std::clamp(action[i], -1.0, 1.0);
      next[2 + i] = std::clamp(next[2 + i] + a * kDt, -kVelMax, kVelMax);
    }
    next[0] = std::clamp(next[0] + next[2] * kDt, -kBox, kBox);
    next[1] = std::clamp(next[1] + next[3] * kDt, -kBox, kBox);

    StepResult r;
    r.next_state = next;
    r.reward = -goal_distance(next);
    r.constraint_cost = in_hazard(next) ? 1.0 : 0.0;
    if (r.constraint_cost > 0.0) {
      r.terminated = true;  // error state
    } else if (goal_distance(next) < cfg_.goal_radius) {
      r.reward += cfg_.goal_bonus;
      r.terminated = true;
    }
    state_ = next;
    finish_step(r);
    return r;
  }

  double constraint_violated(std::span<const double>, std::span<const double>,
                             std::span<const double> next_state)
      const override {
    return in_hazard(next_state) ? 1.0 : 0.0;
  }

 private:
  static constexpr double kDt = 0.1;
  static constexpr double kVelMax = 1.0;
  static constexpr double kBox = 2.0;

  double goal_distance(std::span<const double> s) const {
    return std::hypot(s[0] - cfg_.goal_x, s[1] - cfg_.goal_y);
  }
  bool in_hazard(std::span<const double> s) const {
    return std::hypot(s[0] - cfg_.hazard_x, s[1] - cfg_.hazard_y) <
           cfg_.hazard_radius;
  }

  EnvConfig cfg_;
  std::vector<double> state_;
};

// ---------------------------------------------------------------------------
// ConstrainedPendulum: torque-limited swing-up, state (cos th, sin th,
// th_dot). The constraint fires when |th_dot| exceeds omega_max; violations
// accumulate without terminating.
// ---------------------------------------------------------------------------
class ConstrainedPendulum : public Environment {
 public:
  explicit ConstrainedPendulum(const EnvConfig& cfg) : cfg_(cfg) {}

  int state_dim() const override { return 3; }
  int action_dim() const override { return 1; }
  std::vector<double> action_low() const override { return {-kTorqueMax}; }
  std::vector<double> action_high() const override { return {kTorqueMax}; }
  int horizon() const override { return cfg_.horizon; }

  std::vector<double> reset(Rng& rng) override {
    begin_episode();
    theta_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
    theta_dot_ = rng.uniform(-1.0, 1.0);
    return observation();
  }

  StepResult step(std::span<const double> action, Rng& rng) override {
    (void)rng;
    before_step();
    SAAC_CHECK(action.size() == 1, "ConstrainedPendulum: action dimension");
    const double u = std::clamp(action[0], -kTorqueMax, kTorqueMax);
    theta_dot_ += (3.0 * kG / (2.0 * kLength) * std::sin(theta_) +
                   3.0 / (kMass * kLength * kLength) * u) *
                  kDt;
    theta_dot_ = std::clamp(theta_dot_, -kSpeedMax, kSpeedMax);
    theta_ += theta_dot_ * kDt;

    StepResult r;
    r.next_state = observation();
    const double a = wrap_angle(theta_);
    r.reward = -(a * a + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);
    r.constraint_cost = std::fabs(theta_dot_) > cfg_.omega_max ? 1.0 : 0.0;
    finish_step(r);
    return r;
  }

  double constraint_violated(std::span<const double>, std::span<const double>,
                             std::span<const double> next_state)
      const override {
    return std::fabs(next_state[2]) > cfg_.omega_max ? 1.0 : 0.0;
  }

 private:
  static constexpr double kDt = 0.05;
  static constexpr double kG = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kTorqueMax = 2.0;
  static constexpr double kSpeedMax = 8.0;

  static double wrap_angle(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    x = std::fmod(x + std::numbers::pi, two_pi);
    if (x < 0) x += two_pi;
    return x - std::numbers::pi;
  }

  std::vector<double> observation() const {
    return {std::cos(theta_), std::sin(theta_), theta_dot_};
  }

  EnvConfig cfg_;
  double theta_ = 0.0, theta_dot_ = 0.0;
};

// ---------------------------------------------------------------------------
// RiskyChain: 7-state chain (positions 0..4 plus goal and error terminals)
// behind a continuous 1-D action that is thresholded into {left, right}.
// Every move is reversed with the slip probability; falling off the left
// edge is the absorbing error state. Small enough for exact enumeration.
// ---------------------------------------------------------------------------
class RiskyChain : public Environment {
 public:
  static constexpr int kWalkStates = 5;       // positions 0..4
  static constexpr double kStepCost = -0.01;  // per transition
  static constexpr double kGoalReward = 1.0;
  static constexpr double kErrorReward = -1.0;

  explicit RiskyChain(const EnvConfig& cfg) : cfg_(cfg) {
    SAAC_CHECK(cfg_.chain_start >= 0 && cfg_.chain_start < kWalkStates,
               "RiskyChain: start index out of range");
    SAAC_CHECK(cfg_.slip_prob >= 0.0 && cfg_.slip_prob < 1.0,
               "RiskyChain: slip probability out of range");
  }

  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  std::vector<double> action_low() const override { return {-1.0}; }
  std::vector<double> action_high() const override { return {1.0}; }
  int horizon() const override { return cfg_.horizon; }

  std::vector<double> reset(Rng& rng) override {
    (void)rng;
    begin_episode();
    pos_ = cfg_.chain_start;
    return encode(pos_);
  }

  StepResult step(std::span<const double> action, Rng& rng) override {
    before_step();
    SAAC_CHECK(action.size() == 1, "RiskyChain: action dimension");
    const int intended = action[0] >= 0.0 ? +1 : -1;
    const bool slip = rng.uniform() < cfg_.slip_prob;
    const int move = slip ? -intended : intended;
    const int next = pos_ + move;

    StepResult r;
    r.reward = kStepCost;
    if (next < 0) {  // fell off the edge
      r.next_state = encode_error();
      r.reward += kErrorReward;
      r.constraint_cost = 1.0;
      r.terminated = true;
    } else if (next >= kWalkStates) {
      r.next_state = encode_goal();
      r.reward += kGoalReward;
      r.terminated = true;
    } else {
      r.next_state = encode(next);
      pos_ = next;
    }
    finish_step(r);
    return r;
  }

  double constraint_violated(std::span<const double>, std::span<const double>,
                             std::span<const double> next_state)
      const override {
    return next_state[0] < encode_error()[0] + 0.01 ? 1.0 : 0.0;
  }

  static std::vector<double> encode(int pos) {
    return {static_cast<double>(pos) / (kWalkStates - 1)};
  }
  static std::vector<double> encode_goal() { return {1.25}; }
  static std::vector<double> encode_error() { return {-0.25}; }

 private:
  EnvConfig cfg_;
  int pos_ = 0;
};

inline std::unique_ptr<Environment> make_env(const EnvConfig& cfg) {
  SAAC_CHECK(cfg.horizon >= 1, "env horizon must be >= 1");
  SAAC_CHECK(cfg.gamma > 0.0 && cfg.gamma <= 1.0, "gamma must be in (0, 1]");
  SAAC_CHECK(cfg.constraint_mode == "any" || cfg.constraint_mode == "all",
             "constraint_mode must be any or all");
  if (cfg.name == "hazard") return std::make_unique<HazardPoint2D>(cfg);
  if (cfg.name == "pendulum") return std::make_unique<ConstrainedPendulum>(cfg);
  if (cfg.name == "chain") return std::make_unique<RiskyChain>(cfg);
  throw ConfigError("unknown environment: " + cfg.name);
}

// Environment-specific default horizons, applied when the config leaves the
// horizon unset.
inline int default_horizon(const std::string& env_name) {
  return env_name == "chain" ? 20 : 200;
}

}  // namespace saac

#endif  // SAAC_ENVS_HPP_
