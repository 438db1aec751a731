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

#include "saac/policy.hpp"

#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

namespace {

using saac::ActionSample;
using saac::Rng;
using saac::SquashedGaussianPolicy;

// Policy whose trunk outputs exactly (mu, log_sigma) for every state:
// all weights zero, the output biases carry the heads.
SquashedGaussianPolicy fixed_policy(const std::vector<double>& mu,
                                    const std::vector<double>& log_sigma,
                                    double bound = 1.0) {
  const int ad = static_cast<int>(mu.size());
  Rng init(0);
  SquashedGaussianPolicy p(1, ad, {8}, std::vector<double>(ad, -bound),
                           std::vector<double>(ad, bound), init);
  auto params = p.trunk().params();
  std::fill(params.begin(), params.end(), 0.0);
  const int off = p.trunk().bias_offset(p.trunk().num_layers() - 1);
  for (int i = 0; i < ad; ++i) {
    params[off + i] = mu[i];
    params[off + ad + i] = log_sigma[i];
  }
  return p;
}

const std::vector<double> kState = {0.0};

}  // namespace

TEST_CASE("log density at zero for the unit Gaussian with unit bounds") {
  SquashedGaussianPolicy p = fixed_policy({0.0}, {0.0});
  const double lp = p.log_prob(kState, std::vector<double>{0.0});
  // -0.5 log(2 pi) - log(1 - 0^2)
  CHECK(lp == Catch::Approx(-0.91893853320467274).epsilon(1e-12));
}

TEST_CASE("density integrates to one over the action interval") {
  Rng rng(314);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = rng.uniform(-1.0, 1.0);
    const double ls = rng.uniform(-1.2, 0.4);
    SquashedGaussianPolicy p = fixed_policy({mu}, {ls});
    // Quadrature over a = tanh(v): integrand exp(log_prob(a)) * da/dv is
    // smooth on a uniform v grid; Simpson with 4000 cells.
    const double v_max = 17.0;
    const int cells = 4000;
    const double h = 2.0 * v_max / cells;
    double acc = 0.0;
    for (int i = 0; i <= cells; ++i) {
      const double v = -v_max + i * h;
      const double a = std::tanh(v);
      const double jac = (1.0 - a) * (1.0 + a);
      const double f = std::exp(p.log_prob(kState, std::span<const double>(&a, 1))) * jac;
      const double w = (i == 0 || i == cells) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * f;
    }
    acc *= h / 3.0;
    CHECK(std::fabs(acc - 1.0) < 1e-3);
  }
}

TEST_CASE("log_prob of a fresh sample equals the stored value") {
  Rng init(5), rng(99);
  SquashedGaussianPolicy p(3, 2, {16, 16}, {-2, -2}, {2, 2}, init);
  const std::vector<double> state = {0.2, -0.4, 1.0};
  for (int i = 0; i < 200; ++i) {
    const ActionSample s = p.sample_action(state, rng);
    CHECK(std::fabs(p.log_prob(state, s.action) - s.log_prob) < 1e-10);
  }
}

TEST_CASE("boundary actions are rejected") {
  SquashedGaussianPolicy p = fixed_policy({0.0}, {0.0});
  CHECK_THROWS_AS(p.log_prob(kState, std::vector<double>{1.0}),
                  std::domain_error);
  CHECK_THROWS_AS(p.log_prob(kState, std::vector<double>{-1.5}),
                  std::domain_error);
}

TEST_CASE("degenerate noise: sigma at the clamp floor pins the action to the mean") {
  SquashedGaussianPolicy p = fixed_policy({0.0}, {-30.0});  // clamps to -20
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const ActionSample s = p.sample_action(kState, rng);
    CHECK(std::fabs(s.action[0]) < 1e-6);
    CHECK(std::isfinite(s.log_prob));
  }
}

TEST_CASE("sampling is deterministic under a fixed seed") {
  Rng init(8);
  SquashedGaussianPolicy p(2, 2, {8}, {-1, -1}, {1, 1}, init);
  const std::vector<double> state = {0.5, -0.5};
  Rng r1(42), r2(42);
  const ActionSample a = p.sample_action(state, r1);
  const ActionSample b = p.sample_action(state, r2);
  CHECK(a.action == b.action);
  CHECK(a.log_prob == b.log_prob);
}

TEST_CASE("sampled actions stay strictly inside the bounds") {
  // Wide sigma (clamped to exp(2)) stresses the pre-squash cap.
  SquashedGaussianPolicy p = fixed_policy({0.5}, {5.0});
  Rng rng(17);
  for (int i = 0; i < 20000; ++i) {
    const ActionSample s = p.sample_action(kState, rng);
    REQUIRE(s.action[0] > -1.0);
    REQUIRE(s.action[0] < 1.0);
    REQUIRE(std::isfinite(s.log_prob));
    REQUIRE(std::isfinite(p.log_prob(kState, s.action)));
  }
}

TEST_CASE("empirical pre-squash mean approaches mu") {
  const double mu = 0.37, sigma = std::exp(-0.2);
  SquashedGaussianPolicy p = fixed_policy({mu}, {-0.2});
  Rng rng(2718);
  const int n = 100000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += p.sample_action(kState, rng).pre_squash[0];
  }
  acc /= n;
  const double three_se = 3.0 * sigma / std::sqrt(static_cast<double>(n));
  CHECK(std::fabs(acc - mu) < three_se);
}

TEST_CASE("kl estimate: identical distributions give zero") {
  SquashedGaussianPolicy p = fixed_policy({0.3}, {0.1});
  SquashedGaussianPolicy q = fixed_policy({0.3}, {0.1});
  Rng rng(5);
  const std::vector<std::vector<double>> states = {kState};
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    worst = std::max(worst, std::fabs(saac::kl_estimate(p, q, states, rng, 100)));
  }
  CHECK(worst < 0.01);
}

TEST_CASE("kl estimate matches the closed form for a mean shift") {
  // Pre-squash N(0,1) vs N(1,1): KL = 0.5. Squashing preserves KL.
  SquashedGaussianPolicy p = fixed_policy({0.0}, {0.0});
  SquashedGaussianPolicy q = fixed_policy({1.0}, {0.0});
  Rng rng(12);
  const int n = 10000;
  const double est =
      saac::kl_estimate(p, q, {kState}, rng, n);
  // Var of a single-sample log ratio is 1 here.
  const double three_se = 3.0 / std::sqrt(static_cast<double>(n));
  CHECK(std::fabs(est - 0.5) < three_se);
}

TEST_CASE("kl estimate matches the closed form for a scale change") {
  // N(0,1) vs N(0,2): KL = log 2 - 3/8.
  SquashedGaussianPolicy p = fixed_policy({0.0}, {0.0});
  SquashedGaussianPolicy q = fixed_policy({0.0}, {std::log(2.0)});
  Rng rng(13);
  const int n = 10000;
  const double est = saac::kl_estimate(p, q, {kState}, rng, n);
  const double expected = std::log(2.0) - 3.0 / 8.0;
  // Var of the log ratio is (3/8)^2 Var(u^2) = 9/32.
  const double three_se = 3.0 * std::sqrt(9.0 / 32.0 / n);
  CHECK(std::fabs(est - expected) < three_se);
}

TEST_CASE("reparameterization gradient of the mean action matches finite differences") {
  Rng init(21);
  SquashedGaussianPolicy p(2, 2, {8}, {-1, -1}, {1, 1}, init);
  const std::vector<std::vector<double>> states = {{0.1, 0.7}, {-0.6, 0.2}};
  const Rng frozen(404);

  const auto loss = [&]() {
    Rng r = frozen;
    double acc = 0.0;
    for (const auto& s : states) {
      acc += p.sample_detailed(s, r).action[0];
    }
    return acc / static_cast<double>(states.size());
  };
  std::vector<double> analytic(p.trunk().param_count(), 0.0);
  {
    Rng r = frozen;
    const int d = p.action_dim();
    std::vector<double> g_u(d, 0.0), zero(d, 0.0);
    for (const auto& s : states) {
      const auto ev = p.sample_detailed(s, r);
      g_u[0] = p.action_jacobian(ev, 0) / static_cast<double>(states.size());
      g_u[1] = 0.0;
      p.backward_sample(ev, g_u, zero, zero, analytic);
    }
  }
  const auto result =
      saac::grad_check(loss, p.trunk().params(), analytic, 1e-5);
  CHECK(result.pass);
}

TEST_CASE("non-finite trunk output raises a policy divergence error") {
  Rng init(3);
  SquashedGaussianPolicy p(1, 1, {4}, {-1}, {1}, init);
  p.trunk().params()[p.trunk().bias_offset(1)] = std::nan("");
  Rng rng(1);
  CHECK_THROWS_AS(p.sample_action(kState, rng), saac::DivergenceError);
}

TEST_CASE("log-sigma clamp keeps sigma in range") {
  SquashedGaussianPolicy hi = fixed_policy({0.0}, {9.0});
  SquashedGaussianPolicy lo = fixed_policy({0.0}, {-50.0});
  Rng rng(4);
  const auto s_hi = hi.sample_detailed(kState, rng);
  const auto s_lo = lo.sample_detailed(kState, rng);
  CHECK(s_hi.log_sigma[0] == SquashedGaussianPolicy::kLogSigmaMax);
  CHECK(s_lo.log_sigma[0] == SquashedGaussianPolicy::kLogSigmaMin);
  CHECK(s_hi.clamped[0] == 1);
  CHECK(s_lo.clamped[0] == 1);
}
