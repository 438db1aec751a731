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

#ifndef SAAC_CONFIG_HPP_
#define SAAC_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "saac/common.hpp"
#include "saac/trainer.hpp"

namespace saac {

namespace internal {

inline std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double_value(const std::string& key,
                                 const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      value + "'");
  }
}

inline long parse_long_value(const std::string& key,
                             const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      value + "'");
  }
}

inline bool parse_bool_value(const std::string& key,
                             const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" +
                    value + "'");
}

inline std::vector<int> parse_int_list_value(const std::string& key,
                                             const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_long_value(key, item)));
  }
  if (out.empty()) {
    throw ConfigError("config key '" + key + "': expected a list of integers");
  }
  return out;
}

}  // namespace internal

// Applies one `key = value` assignment to a TrainConfig. Unknown keys are
// rejected by name.
inline void apply_config_entry(TrainConfig& cfg, const std::string& key,
                               const std::string& value) {
  using internal::parse_bool_value;
  using internal::parse_double_value;
  using internal::parse_int_list_value;
  using internal::parse_long_value;

  if (key == "env") {
    cfg.env.name = value;
  } else if (key == "horizon") {
    cfg.env.horizon = value == "auto"
                          ? -1
                          : static_cast<int>(parse_long_value(key, value));
  } else if (key == "gamma") {
    cfg.env.gamma = parse_double_value(key, value);
    SAAC_CHECK(cfg.env.gamma > 0.0 && cfg.env.gamma <= 1.0,
               "config key 'gamma': must be in (0, 1]");
  } else if (key == "constraint_mode") {
    SAAC_CHECK(value == "any" || value == "all",
               "config key 'constraint_mode': must be any or all");
    cfg.env.constraint_mode = value;
  } else if (key == "hazard_x") {
    cfg.env.hazard_x = parse_double_value(key, value);
  } else if (key == "hazard_y") {
    cfg.env.hazard_y = parse_double_value(key, value);
  } else if (key == "hazard_radius") {
    cfg.env.hazard_radius = parse_double_value(key, value);
  } else if (key == "goal_x") {
    cfg.env.goal_x = parse_double_value(key, value);
  } else if (key == "goal_y") {
    cfg.env.goal_y = parse_double_value(key, value);
  } else if (key == "goal_radius") {
    cfg.env.goal_radius = parse_double_value(key, value);
  } else if (key == "goal_bonus") {
    cfg.env.goal_bonus = parse_double_value(key, value);
  } else if (key == "omega_max") {
    cfg.env.omega_max = parse_double_value(key, value);
  } else if (key == "slip_prob") {
    cfg.env.slip_prob = parse_double_value(key, value);
  } else if (key == "chain_start") {
    cfg.env.chain_start = static_cast<int>(parse_long_value(key, value));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_long_value(key, value));
  } else if (key == "adversary") {
    parse_variant(value);  // rejects unknown names
    cfg.adversary = value;
  } else if (key == "total_steps") {
    cfg.total_steps = parse_long_value(key, value);
  } else if (key == "warmup_steps") {
    cfg.warmup_steps = parse_long_value(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = static_cast<int>(parse_long_value(key, value));
  } else if (key == "update_ratio") {
    cfg.update_ratio = parse_double_value(key, value);
  } else if (key == "tau") {
    cfg.tau = parse_double_value(key, value);
  } else if (key == "lr_q") {
    cfg.lr_q = parse_double_value(key, value);
  } else if (key == "lr_pi") {
    cfg.lr_pi = parse_double_value(key, value);
  } else if (key == "lr_alpha") {
    cfg.lr_alpha = parse_double_value(key, value);
  } else if (key == "lr_beta") {
    cfg.lr_beta = parse_double_value(key, value);
  } else if (key == "target_entropy") {
    cfg.target_entropy =
        value == "auto" ? std::optional<double>()
                        : std::optional<double>(parse_double_value(key, value));
  } else if (key == "adversary_target") {
    cfg.adversary_target =
        value == "auto" ? std::optional<double>()
                        : std::optional<double>(parse_double_value(key, value));
  } else if (key == "init_alpha") {
    cfg.init_alpha = parse_double_value(key, value);
  } else if (key == "init_beta") {
    cfg.init_beta = parse_double_value(key, value);
  } else if (key == "beta_frozen") {
    cfg.beta_frozen = parse_bool_value(key, value);
  } else if (key == "adversary_updates") {
    cfg.adversary_updates = parse_bool_value(key, value);
  } else if (key == "update_order") {
    cfg.update_order = value;
  } else if (key == "hidden") {
    cfg.hidden = parse_int_list_value(key, value);
  } else if (key == "buffer_capacity") {
    cfg.buffer_capacity =
        static_cast<std::size_t>(parse_long_value(key, value));
  } else if (key == "eval_interval") {
    cfg.eval_interval = parse_long_value(key, value);
  } else if (key == "eval_episodes") {
    cfg.eval_episodes = static_cast<int>(parse_long_value(key, value));
  } else if (key == "kl_samples") {
    cfg.kl_samples = static_cast<int>(parse_long_value(key, value));
  } else if (key == "states_per_eval") {
    cfg.states_per_eval = static_cast<int>(parse_long_value(key, value));
  } else if (key == "lambda_msd") {
    cfg.lambda_msd = parse_double_value(key, value);
  } else if (key == "risk_seeking_sign") {
    cfg.risk_seeking_sign = parse_double_value(key, value);
  } else if (key == "lambda_cvar") {
    cfg.lambda_cvar = parse_double_value(key, value);
  } else if (key == "n_quantiles") {
    cfg.n_quantiles = static_cast<int>(parse_long_value(key, value));
  } else if (key == "out") {
    cfg.out_dir = value;
  } else {
    throw ConfigError("unknown config key: '" + key + "'");
  }
}

// Parses `key = value` text (one entry per line, '#' comments). Overrides
// are applied after the file and take precedence.
inline TrainConfig parse_config_text(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  TrainConfig cfg;
  cfg.env.horizon = -1;  // auto until resolved
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = internal::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    SAAC_CHECK(eq != std::string::npos,
               "config line " + std::to_string(line_no) +
                   ": expected 'key = value'");
    const std::string key = internal::trim(line.substr(0, eq));
    const std::string value = internal::trim(line.substr(eq + 1));
    SAAC_CHECK(!key.empty(), "config line " + std::to_string(line_no) +
                                 ": empty key");
    apply_config_entry(cfg, key, value);
  }
  for (const auto& [key, value] : overrides) {
    apply_config_entry(cfg, key, value);
  }
  if (cfg.env.horizon < 0) cfg.env.horizon = default_horizon(cfg.env.name);
  cfg.validate();
  make_env(cfg.env);  // environment-level validation (name, geometry, gamma)
  return cfg;
}

inline TrainConfig parse_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  std::ifstream in(path);
  SAAC_CHECK(in.good(), "cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), overrides);
}

}  // namespace saac

#endif  // SAAC_CONFIG_HPP_
