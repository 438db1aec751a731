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

#ifndef SAAC_PCA_HPP_
#define SAAC_PCA_HPP_

#include <array>
#include <cmath>
#include <vector>

#include "saac/common.hpp"

namespace saac {

// Principal-component projection via power iteration with deflation on the
// sample covariance. Deterministic: no random starts, fixed sign convention
// (largest-magnitude coordinate positive).
struct PcaProjection {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // orthonormal, by variance
  std::vector<double> variances;                // eigenvalues, descending
  bool rank_deficient = false;  // fewer components than requested
  std::vector<std::array<double, 2>> points;  // projected rows (pc2 = 0 if absent)
};

inline PcaProjection pca_project(const std::vector<std::vector<double>>& data,
                                 int n_components = 2) {
  SAAC_CHECK(n_components >= 1 && n_components <= 2,
             "pca: supports one or two components");
  SAAC_CHECK(data.size() >= 2, "pca: needs at least two rows");
  const int d = static_cast<int>(data[0].size());
  SAAC_CHECK(d >= 1, "pca: empty rows");
  const double n = static_cast<double>(data.size());

  PcaProjection out;
  out.mean.assign(d, 0.0);
  for (const std::vector<double>& row : data) {
    SAAC_CHECK(static_cast<int>(row.size()) == d, "pca: ragged rows");
    for (int i = 0; i < d; ++i) out.mean[i] += row[i];
  }
  for (int i = 0; i < d; ++i) out.mean[i] /= n;

  std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
  std::vector<double> x(d);
  for (const std::vector<double>& row : data) {
    for (int i = 0; i < d; ++i) x[i] = row[i] - out.mean[i];
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) cov[i * d + j] += x[i] * x[j];
    }
  }
  for (double& c : cov) c /= n;

  double lambda1 = 0.0;
  for (int k = 0; k < n_components; ++k) {
    // Start from the axis with the largest remaining diagonal mass.
    int best = 0;
    for (int i = 1; i < d; ++i) {
      if (cov[i * d + i] > cov[best * d + best]) best = i;
    }
    if (cov[best * d + best] <= std::max(1e-12, 1e-9 * lambda1)) {
      out.rank_deficient = true;
      break;
    }
    std::vector<double> v(d, 0.0);
    v[best] = 1.0;
    std::vector<double> w(d);
    for (int it = 0; it < 10000; ++it) {
      for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += cov[i * d + j] * v[j];
        w[i] = acc;
      }
      for (const std::vector<double>& prev : out.components) {
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += w[i] * prev[i];
        for (int i = 0; i < d; ++i) w[i] -= dot * prev[i];
      }
      double norm = 0.0;
      for (double wi : w) norm += wi * wi;
      norm = std::sqrt(norm);
      if (norm <= 1e-300) break;
      double overlap = 0.0;
      for (int i = 0; i < d; ++i) {
        w[i] /= norm;
        overlap += w[i] * v[i];
      }
      v = w;
      if (std::fabs(std::fabs(overlap) - 1.0) < 1e-14) break;
    }
    double lambda = 0.0;
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) acc += cov[i * d + j] * v[j];
      lambda += v[i] * acc;
    }
    if (k == 0) lambda1 = lambda;
    if (lambda <= std::max(1e-12, 1e-9 * lambda1)) {
      out.rank_deficient = true;
      break;
    }
    int sign_idx = 0;
    for (int i = 1; i < d; ++i) {
      if (std::fabs(v[i]) > std::fabs(v[sign_idx])) sign_idx = i;
    }
    if (v[sign_idx] < 0.0) {
      for (double& vi : v) vi = -vi;
    }
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) cov[i * d + j] -= lambda * v[i] * v[j];
    }
    out.components.push_back(std::move(v));
    out.variances.push_back(lambda);
  }
  if (static_cast<int>(out.components.size()) < n_components) {
    out.rank_deficient = true;
  }

  out.points.reserve(data.size());
  for (const std::vector<double>& row : data) {
    std::array<double, 2> p{0.0, 0.0};
    for (std::size_t k = 0; k < out.components.size() && k < 2; ++k) {
      double acc = 0.0;
      for (int i = 0; i < d; ++i) {
        acc += (row[i] - out.mean[i]) * out.components[k][i];
      }
      p[k] = acc;
    }
    out.points.push_back(p);
  }
  return out;
}

}  // namespace saac

#endif  // SAAC_PCA_HPP_
