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

#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "saac/cli.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> split_overrides(
    const std::vector<std::string>& sets) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw saac::ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    }
    out.emplace_back(saac::internal::trim(kv.substr(0, eq)),
                     saac::internal::trim(kv.substr(eq + 1)));
  }
  return out;
}

std::vector<std::uint64_t> split_seeds(const std::string& seeds) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(seeds);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = saac::internal::trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<std::uint64_t>(std::stoull(item)));
  }
  return out;
}

std::vector<std::string> split_names(const std::string& names) {
  std::vector<std::string> out;
  std::stringstream ss(names);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = saac::internal::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string out_root_or_env(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  const char* env = std::getenv("SAAC_OUT");
  return env != nullptr ? std::string(env) : std::string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saac: risk-sensitive dueling soft actor-critic lab"};
  app.require_subcommand(1);

  // train
  std::string config_path, out_dir, seeds_arg, variants_arg;
  std::vector<std::string> sets;
  int jobs = 1;
  CLI::App* train = app.add_subcommand("train", "run training");
  train->add_option("--config", config_path, "config file (key = value)");
  train->add_option("--set", sets, "override KEY=VALUE (repeatable)");
  train->add_option("--seeds", seeds_arg, "comma-separated seed list");
  train->add_option("--variants", variants_arg,
                    "comma-separated adversary variants (none,cons,msd,cvar)");
  train->add_option("--out", out_dir, "output root (or SAAC_OUT)");
  train->add_option("--jobs", jobs, "parallel runs as separate processes");

  // eval
  std::string eval_config, eval_snapshot;
  std::vector<std::string> eval_sets;
  int eval_episodes = 10;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved policy");
  eval_cmd->add_option("--config", eval_config, "config file");
  eval_cmd->add_option("--set", eval_sets, "override KEY=VALUE (repeatable)");
  eval_cmd->add_option("--snapshot", eval_snapshot, "policy_theta.bin path")
      ->required();
  eval_cmd->add_option("--episodes", eval_episodes, "evaluation episodes");

  // project-states
  std::vector<std::string> project_files;
  std::string project_out = "projected.csv", stages_arg;
  CLI::App* project =
      app.add_subcommand("project-states", "PCA projection of visited states");
  project->add_option("files", project_files, "states.csv files")->required();
  project->add_option("--out", project_out, "output csv path");
  project->add_option("--stages", stages_arg,
                      "comma-separated step boundaries for stage labels");

  // compare
  std::string baseline_dir, compare_out = "summary.csv";
  std::vector<std::string> compare_dirs;
  double threshold_pct = 95.0;
  CLI::App* compare =
      app.add_subcommand("compare", "efficiency and failures vs a baseline");
  compare->add_option("--baseline", baseline_dir, "baseline run directory")
      ->required();
  compare->add_option("dirs", compare_dirs, "variant run directories")
      ->required();
  compare->add_option("--out", compare_out, "summary csv path");
  compare->add_option("--threshold-pct", threshold_pct,
                      "percent of baseline max return defining the threshold");

  // grad-check / oracle-check
  app.add_subcommand("grad-check",
                     "finite-difference checks for every loss");
  app.add_subcommand("oracle-check", "exact tabular verification suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      saac::RunSpec spec;
      spec.config_path = config_path;
      spec.overrides = split_overrides(sets);
      spec.out_root = out_root_or_env(out_dir);
      spec.jobs = jobs;
      saac::TrainConfig base =
          config_path.empty()
              ? saac::parse_config_text("", spec.overrides)
              : saac::parse_config(config_path, spec.overrides);
      spec.seeds = seeds_arg.empty() ? std::vector<std::uint64_t>{base.seed}
                                     : split_seeds(seeds_arg);
      spec.variants = variants_arg.empty()
                          ? std::vector<std::string>{base.adversary}
                          : split_names(variants_arg);
      return saac::cmd_train(spec, std::cout);
    }
    if (eval_cmd->parsed()) {
      return saac::cmd_eval(eval_config, split_overrides(eval_sets),
                            eval_snapshot, eval_episodes, std::cout);
    }
    if (project->parsed()) {
      std::vector<long> bounds;
      for (const std::string& s : split_names(stages_arg)) {
        bounds.push_back(std::stol(s));
      }
      return saac::cmd_project_states(project_files, bounds, project_out,
                                      std::cout);
    }
    if (compare->parsed()) {
      return saac::cmd_compare(baseline_dir, compare_dirs, compare_out,
                               threshold_pct, std::cout);
    }
    if (app.get_subcommand("grad-check")->parsed()) {
      return saac::cmd_grad_check(std::cout);
    }
    if (app.get_subcommand("oracle-check")->parsed()) {
      return saac::cmd_oracle_check(std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
