#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "sen/cli.hpp"
#include "sen/config.hpp"

namespace {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void push_sets(KeyValues& pairs, const std::vector<std::string>& sets) {
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw sen::CliError(sen::CliError::Category::kUsage,
                          "--set expects KEY=VALUE, got '" + s + "'");
    }
    pairs.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
}

sen::ExperimentConfig build_config(const std::string& config_path, const KeyValues& pairs) {
  sen::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = sen::load_config(config_path);
  for (const auto& [key, value] : pairs) sen::apply_key(cfg, key, value);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smart energy network: storage + flexible demand simulator and agent trainer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sen::kVersion));

  std::string config_path;
  std::string out_dir = "out";
  std::string out_file;
  std::string checkpoint;
  std::string algorithm;
  std::string seed_str;
  std::string days_str;
  std::string episodes_str;
  std::vector<std::string> checkpoints;
  std::vector<std::string> sets;
  std::vector<double> alphas;

  const char* set_help = "override one config key (KEY=VALUE, repeatable; named flags win)";

  CLI::App* train = app.add_subcommand("train", "train an agent and write a checkpoint");
  train->add_option("--config", config_path, "config file (key=value lines)");
  train->add_option("--out", out_dir, "output directory")->capture_default_str();
  train->add_option("--algorithm", algorithm, "dqn | ddpg | maddpg");
  train->add_option("--seed", seed_str, "training seed");
  train->add_option("--episodes", episodes_str, "training episodes");
  train->add_option("--days", days_str, "synthetic trace length in days");
  train->add_option("--set", sets, set_help);

  CLI::App* eval = app.add_subcommand("evaluate", "roll out a policy and report KPIs");
  eval->add_option("--config", config_path, "config file (key=value lines)");
  eval->add_option("--out", out_dir, "output directory")->capture_default_str();
  eval->add_option("--checkpoint", checkpoint, "trained agent (omit for algorithm=rb)");
  eval->add_option("--algorithm", algorithm, "rb | dqn | ddpg | maddpg");
  eval->add_option("--days", days_str, "days to evaluate");
  eval->add_option("--set", sets, set_help);

  CLI::App* cmp = app.add_subcommand("compare", "KPI table: grid-only, rule-based, checkpoints");
  cmp->add_option("--config", config_path, "config file (key=value lines)");
  cmp->add_option("--out", out_dir, "output directory")->capture_default_str();
  cmp->add_option("--checkpoints", checkpoints, "trained agents to include");
  cmp->add_option("--days", days_str, "days to evaluate");
  cmp->add_option("--set", sets, set_help);

  CLI::App* sweep =
      app.add_subcommand("sweep-alpha", "retrain per inconvenience weight and tabulate KPIs");
  sweep->add_option("--config", config_path, "config file (key=value lines)");
  sweep->add_option("--out", out_dir, "output directory")->capture_default_str();
  sweep->add_option("--alphas", alphas, "inconvenience weights to sweep")->required();
  sweep->add_option("--algorithm", algorithm, "dqn | ddpg | maddpg");
  sweep->add_option("--seed", seed_str, "training seed (shared across the sweep)");
  sweep->add_option("--episodes", episodes_str, "training episodes per value");
  sweep->add_option("--days", days_str, "days to evaluate");
  sweep->add_option("--set", sets, set_help);

  CLI::App* synth =
      app.add_subcommand("synth-data", "generate a synthetic pv/wind/demand trace");
  synth->add_option("--out", out_file, "output CSV path")->required();
  synth->add_option("--days", days_str, "days to generate");
  synth->add_option("--seed", seed_str, "generator seed");
  synth->add_option("--set", sets, set_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  }

  try {
    KeyValues pairs;
    push_sets(pairs, sets);
    const auto add_if = [&](const CLI::App* sub, const char* flag, const char* key,
                            const std::string& value) {
      if (sub->count(flag) > 0) pairs.emplace_back(key, value);
    };

    if (*train) {
      add_if(train, "--algorithm", "algorithm", algorithm);
      add_if(train, "--seed", "seed", seed_str);
      add_if(train, "--episodes", "episodes", episodes_str);
      add_if(train, "--days", "synth_days", days_str);
      sen::cmd_train(build_config(config_path, pairs), out_dir);
    } else if (*eval) {
      add_if(eval, "--algorithm", "algorithm", algorithm);
      add_if(eval, "--days", "eval_days", days_str);
      sen::cmd_evaluate(build_config(config_path, pairs), checkpoint, out_dir);
    } else if (*cmp) {
      add_if(cmp, "--days", "eval_days", days_str);
      sen::cmd_compare(build_config(config_path, pairs), checkpoints, out_dir);
    } else if (*sweep) {
      add_if(sweep, "--algorithm", "algorithm", algorithm);
      add_if(sweep, "--seed", "seed", seed_str);
      add_if(sweep, "--episodes", "episodes", episodes_str);
      add_if(sweep, "--days", "eval_days", days_str);
      sen::cmd_sweep_alpha(build_config(config_path, pairs), alphas, out_dir);
    } else if (*synth) {
      add_if(synth, "--days", "synth_days", days_str);
      add_if(synth, "--seed", "trace_seed", seed_str);
      sen::cmd_synth_data(build_config(config_path, pairs), out_file);
    }
  } catch (const sen::CliError& e) {
    std::cerr << sen::category_name(e.category) << " error: " << e.what() << "\n";
    return sen::category_exit_code(e.category);
  } catch (const sen::ConfigIoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 66;
  } catch (const sen::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 65;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 65;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
  return 0;
}
