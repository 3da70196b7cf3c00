#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sen/agents.hpp"
#include "sen/data_io.hpp"
#include "sen/env.hpp"

namespace sen {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An unreadable config file is an io failure, not a bad value; the CLI maps
// the two to different exit codes.
struct ConfigIoError : ConfigError {
  using ConfigError::ConfigError;
};

// Flat bag of every tunable in one run. Defaults reproduce the reference
// setup end to end; a config file or CLI flag overrides individual keys.
struct ExperimentConfig {
  std::string algorithm = "maddpg";  // rb | dqn | ddpg | maddpg

  // run control
  std::uint64_t seed = 1;
  int episodes = 1000;
  int eval_days = 7;

  // input data: an explicit trace file wins over the synthetic generator
  std::string trace_path;
  std::uint64_t trace_seed = 42;
  int synth_days = 30;
  SynthProfile synth;

  // optimization
  int batch_size = 256;
  double gamma = 0.95;
  double tau = 0.005;
  double lr_actor = 1e-4;
  double lr_critic = 3e-4;
  int hidden_layers = 2;
  int hidden_units = 500;
  long warmup = 1000;
  std::size_t buffer_capacity = 1000000;
  double ou_theta = 0.15;
  double ou_sigma = 0.2;
  double ou_sigma_final = 0.05;
  double eps_start = 1.0;
  double eps_final = 0.05;
  int dqn_target_sync = 250;
  int action_levels = 5;

  // environment
  double dt = 0.5;
  double penalty = 20.0;
  double e_init = 1600.0;
  double h_init = 5.0;
  bool enable_bess = true;
  bool enable_hess = true;
  bool enable_flex = true;
  BessParams bess;
  HessParams hess;
  DemandParams demand;

  // three-level tariff
  double tariff_peak = 0.234;
  double tariff_flat = 0.117;
  double tariff_valley = 0.07;
  double export_price = 0.05;
  double carbon_factor = 0.23314;

  // observation scaling (price scale 0 = derive from the tariff peak)
  ObsScales scales;

  void validate() const;
};

// Exact, human-readable double formatting: the shortest decimal string that
// parses back to the same bits.
std::string format_double(double v);

// key=value files; '#' starts a comment. Unknown keys are fatal and all are
// listed in the error.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Set one key; throws ConfigError on unknown names or unparsable values.
void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Every key in sorted order as a parseable key=value block; load_config on
// this text reproduces the config exactly.
std::string config_echo(const ExperimentConfig& cfg);

// derived objects
SenConfig to_sen_config(const ExperimentConfig& cfg);
TrainParams to_train_params(const ExperimentConfig& cfg);
NetHyper to_net_hyper(const ExperimentConfig& cfg);

// The configured input data: load trace_path when set, else synthesize.
ExogenousTrace build_trace(const ExperimentConfig& cfg);

}  // namespace sen
