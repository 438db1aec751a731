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

#ifndef SAAC_REPLAY_HPP_
#define SAAC_REPLAY_HPP_

#include <optional>
#include <vector>

#include "saac/common.hpp"
#include "saac/numerics.hpp"

namespace saac {

// One environment step. The constraint cost extends the usual SAC tuple so
// the constraint critic can learn from r_c off-policy.
struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  double constraint_cost = 0.0;  // in {0, 1}
  std::vector<double> next_state;
  bool terminated = false;  // masks bootstrapping; truncation does not
};

// Fixed-capacity ring buffer with uniform with-replacement sampling. One
// buffer feeds both the agent and the adversary.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    SAAC_CHECK(capacity_ > 0, "replay capacity must be positive");
    storage_.reserve(capacity_ < 4096 ? capacity_ : 4096);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return storage_.size(); }

  void push(Transition t) {
    SAAC_CHECK(t.constraint_cost == 0.0 || t.constraint_cost == 1.0,
               "replay: constraint cost must be 0 or 1");
    if (storage_.size() < capacity_) {
      storage_.push_back(std::move(t));
    } else {
      storage_[next_] = std::move(t);
      next_ = (next_ + 1) % capacity_;
    }
  }

  const Transition& at(std::size_t i) const { return storage_[i]; }

  // Uniform with replacement. Returns nullopt while fewer than n transitions
  // are stored; the trainer treats that as "not ready yet".
  std::optional<std::vector<Transition>> sample_batch(std::size_t n,
                                                      Rng& rng) const {
    if (storage_.size() < n) return std::nullopt;
    std::vector<Transition> batch;
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      batch.push_back(storage_[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(storage_.size())))]);
    }
    return batch;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t next_ = 0;
};

}  // namespace saac

#endif  // SAAC_REPLAY_HPP_
