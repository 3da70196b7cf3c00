#include "sen/cli.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "sen/baselines.hpp"
#include "sen/metrics.hpp"

namespace sen {

namespace {

namespace fs = std::filesystem;

constexpr char kContainerMagic[8] = {'S', 'E', 'N', 'C', 'K', 'P', '0', '1'};

[[noreturn]] void io_fail(const std::string& msg) {
  throw CliError(CliError::Category::kIo, msg);
}

[[noreturn]] void config_fail(const std::string& msg) {
  throw CliError(CliError::Category::kConfig, msg);
}

[[noreturn]] void usage_fail(const std::string& msg) {
  throw CliError(CliError::Category::kUsage, msg);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) io_fail("cannot create output directory '" + dir + "': " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail("cannot open '" + path + "' for writing");
  out << content;
  if (!out.good()) io_fail("write to '" + path + "' failed");
}

ExogenousTrace checked_trace(const ExperimentConfig& cfg) {
  try {
    return build_trace(cfg);
  } catch (const std::runtime_error& e) {
    if (!cfg.trace_path.empty()) io_fail(e.what());
    throw;
  }
}

// nets trained in memory, whatever the algorithm
struct TrainedAgents {
  std::string algo;
  std::array<DdpgAgent, 3> per_asset;  // maddpg
  DdpgAgent single;                    // ddpg
  DqnAgent dqn;                        // dqn
  TrainResult log;
};

std::array<int, 3> maddpg_obs_dims() {
  return {SenEnv::kObsDims[0], SenEnv::kObsDims[1], SenEnv::kObsDims[2]};
}

int maddpg_critic_width() {
  const auto dims = maddpg_obs_dims();
  return dims[0] + dims[1] + dims[2] + 3;
}

TrainedAgents run_training(const ExperimentConfig& cfg, const ExogenousTrace& trace) {
  SenEnv env(to_sen_config(cfg), trace);
  Rng rng(cfg.seed);
  const TrainParams params = to_train_params(cfg);
  const NetHyper hyper = to_net_hyper(cfg);

  TrainedAgents out;
  out.algo = cfg.algorithm;
  if (cfg.algorithm == "maddpg") {
    const auto dims = maddpg_obs_dims();
    for (int k = 0; k < 3; ++k) {
      out.per_asset[k] = DdpgAgent::make(dims[k], 1, maddpg_critic_width(), hyper, rng);
    }
    out.log = maddpg_train(env, out.per_asset, params, rng);
  } else if (cfg.algorithm == "ddpg") {
    const int obs = static_cast<int>(env.global_obs().size());
    out.single = DdpgAgent::make(obs, 3, obs + 3, hyper, rng);
    out.log = ddpg_train(env, out.single, params, rng);
  } else if (cfg.algorithm == "dqn") {
    const int obs = static_cast<int>(env.global_obs().size());
    out.dqn = DqnAgent::make(obs, ActionGrid{cfg.action_levels}, hyper, rng);
    out.log = dqn_train(env, out.dqn, params, rng);
  } else {
    usage_fail("algorithm '" + cfg.algorithm + "' cannot be trained");
  }
  return out;
}

void write_string(std::ostream& out, const std::string& s) {
  const std::uint32_t n = static_cast<std::uint32_t>(s.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in.good() || n > 4096) throw std::runtime_error("checkpoint is corrupt");
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in.good()) throw std::runtime_error("checkpoint is truncated");
  return s;
}

void save_checkpoint(const std::string& path, const TrainedAgents& trained) {
  std::ofstream out(path, std::ios::binary);
  if (!out) io_fail("cannot open '" + path + "' for writing");
  out.write(kContainerMagic, sizeof kContainerMagic);
  write_string(out, trained.algo);
  if (trained.algo == "maddpg") {
    for (const auto& a : trained.per_asset) save_agent(out, a);
  } else if (trained.algo == "ddpg") {
    save_agent(out, trained.single);
  } else {
    save_agent(out, trained.dqn);
  }
  if (!out.good()) io_fail("write to '" + path + "' failed");
}

TrainedAgents load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_fail("cannot open checkpoint '" + path + "'");
  TrainedAgents t;
  try {
    char magic[8] = {};
    in.read(magic, sizeof magic);
    if (in.gcount() != sizeof magic || std::memcmp(magic, kContainerMagic, sizeof magic) != 0) {
      throw std::runtime_error("not a checkpoint produced by this tool (bad magic)");
    }
    t.algo = read_string(in);
    if (t.algo == "maddpg") {
      for (auto& a : t.per_asset) a = load_ddpg_agent(in);
    } else if (t.algo == "ddpg") {
      t.single = load_ddpg_agent(in);
    } else if (t.algo == "dqn") {
      t.dqn = load_dqn_agent(in);
    } else {
      throw std::runtime_error("checkpoint names unknown algorithm '" + t.algo + "'");
    }
  } catch (const std::runtime_error& e) {
    io_fail("checkpoint '" + path + "': " + e.what());
  }
  return t;
}

std::vector<int> net_dims(const MlpNet& net) {
  std::vector<int> dims = {net.input_dim()};
  for (const auto& l : net.layers) dims.push_back(l.w.rows);
  return dims;
}

std::string dims_str(const std::vector<int>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

std::vector<int> expected_dims(int in, const NetHyper& hyper, int out) {
  std::vector<int> dims = {in};
  dims.insert(dims.end(), hyper.hidden.begin(), hyper.hidden.end());
  dims.push_back(out);
  return dims;
}

void require_dims(const MlpNet& net, const std::vector<int>& expected, const char* which) {
  const std::vector<int> found = net_dims(net);
  if (found != expected) {
    config_fail(std::string("checkpoint/config mismatch: ") + which + " layers are " +
                dims_str(found) + " but the config expects " + dims_str(expected));
  }
}

// the loaded nets must be what the config would build
void check_architecture(const TrainedAgents& t, const ExperimentConfig& cfg) {
  if (t.algo != cfg.algorithm) {
    config_fail("checkpoint holds a '" + t.algo + "' agent but the config asks for '" +
                cfg.algorithm + "'");
  }
  const NetHyper hyper = to_net_hyper(cfg);
  if (t.algo == "maddpg") {
    const auto dims = maddpg_obs_dims();
    for (int k = 0; k < 3; ++k) {
      require_dims(t.per_asset[k].actor, expected_dims(dims[k], hyper, 1), "actor");
      require_dims(t.per_asset[k].critic, expected_dims(maddpg_critic_width(), hyper, 1),
                   "critic");
    }
  } else if (t.algo == "ddpg") {
    require_dims(t.single.actor, expected_dims(7, hyper, 3), "actor");
    require_dims(t.single.critic, expected_dims(10, hyper, 1), "critic");
  } else if (t.algo == "dqn") {
    const ActionGrid grid{cfg.action_levels};
    require_dims(t.dqn.qnet, expected_dims(7, hyper, grid.count()), "Q-network");
  }
}

// grid absorbs everything: assets off, zero action
struct PassivePolicy : public JointPolicy {
  JointAction act(const SenEnv&, const AgentObs&) override { return {0.0, 0.0, 0.0}; }
};

struct EvaluatedPolicy {
  std::string name;
  KpiReport kpi;
};

std::vector<long> eval_day_list(const ExperimentConfig& cfg, const ExogenousTrace& trace) {
  if (cfg.eval_days > trace.days()) {
    config_fail("eval_days = " + std::to_string(cfg.eval_days) + " but the trace holds " +
                std::to_string(trace.days()) + " days");
  }
  std::vector<long> days(static_cast<std::size_t>(cfg.eval_days));
  std::iota(days.begin(), days.end(), 0L);
  return days;
}

KpiReport evaluate_to_kpis(JointPolicy& policy, const SenConfig& sc,
                           const ExogenousTrace& trace, const ExperimentConfig& cfg) {
  const EvalResult er = evaluate_policy(policy, sc, trace, eval_day_list(cfg, trace));
  const ReferenceCost ref = grid_only_reference(trace, sc.tariff, cfg.eval_days);
  return compute_kpis(er.rollout, ref, cfg.eval_days);
}

}  // namespace

const char* category_name(CliError::Category c) {
  switch (c) {
    case CliError::Category::kUsage:
      return "usage";
    case CliError::Category::kConfig:
      return "config";
    case CliError::Category::kIo:
      return "io";
    case CliError::Category::kRuntime:
      return "runtime";
  }
  return "runtime";
}

int category_exit_code(CliError::Category c) {
  switch (c) {
    case CliError::Category::kUsage:
      return 64;
    case CliError::Category::kConfig:
      return 65;
    case CliError::Category::kIo:
      return 66;
    case CliError::Category::kRuntime:
      return 70;
  }
  return 70;
}

std::string manifest_text(const ExperimentConfig& cfg, const std::string& command) {
  std::string s;
  s += "# run manifest (reload with --config to reproduce)\n";
  s += "# version = " + std::string(kVersion) + "\n";
  s += "# command = " + command + "\n";
  s += config_echo(cfg);
  return s;
}

void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (cfg.algorithm == "rb") {
    usage_fail("the rule-based baseline has nothing to train; use evaluate or compare");
  }
  const ExogenousTrace trace = checked_trace(cfg);
  const TrainedAgents trained = run_training(cfg, trace);

  ensure_dir(out_dir);
  write_file(out_dir + "/manifest.txt", manifest_text(cfg, "train"));
  {
    std::ofstream log(out_dir + "/train_log.csv", std::ios::binary);
    if (!log) io_fail("cannot open '" + out_dir + "/train_log.csv' for writing");
    write_train_log(trained.log, log);
    if (!log.good()) io_fail("write to '" + out_dir + "/train_log.csv' failed");
  }
  save_checkpoint(out_dir + "/checkpoint.bin", trained);

  const auto& rows = trained.log.rows;
  const std::size_t tail = std::min<std::size_t>(rows.size(), 10);
  double tail_mean = 0.0;
  for (std::size_t i = rows.size() - tail; i < rows.size(); ++i) {
    tail_mean += rows[i].mean_reward;
  }
  if (tail) tail_mean /= tail;
  std::printf("trained %s for %d episodes on a %ld-day trace (seed %llu)\n",
              cfg.algorithm.c_str(), cfg.episodes, trace.days(),
              static_cast<unsigned long long>(cfg.seed));
  std::printf("mean step reward over the last %zu episodes: %.4f\n", tail, tail_mean);
  std::printf("wrote %s/manifest.txt, train_log.csv, checkpoint.bin\n", out_dir.c_str());
}

void cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                  const std::string& out_dir) {
  cfg.validate();
  const ExogenousTrace trace = checked_trace(cfg);
  const SenConfig sc = to_sen_config(cfg);

  RuleBasedPolicy rb;
  TrainedAgents loaded;
  MaddpgPolicy maddpg_policy(loaded.per_asset);
  SingleDdpgPolicy ddpg_policy(loaded.single);
  DqnPolicy dqn_policy(loaded.dqn);
  JointPolicy* policy = nullptr;
  if (cfg.algorithm == "rb") {
    if (!checkpoint_path.empty()) {
      usage_fail("the rule-based baseline takes no checkpoint");
    }
    policy = &rb;
  } else {
    if (checkpoint_path.empty()) {
      usage_fail("evaluating '" + cfg.algorithm + "' needs --checkpoint");
    }
    loaded = load_checkpoint(checkpoint_path);
    check_architecture(loaded, cfg);
    if (loaded.algo == "maddpg") {
      policy = &maddpg_policy;
    } else if (loaded.algo == "ddpg") {
      policy = &ddpg_policy;
    } else {
      policy = &dqn_policy;
    }
  }

  const EvalResult er = evaluate_policy(*policy, sc, trace, eval_day_list(cfg, trace));
  const ReferenceCost ref = grid_only_reference(trace, sc.tariff, cfg.eval_days);
  const KpiReport kpi = compute_kpis(er.rollout, ref, cfg.eval_days);

  ensure_dir(out_dir);
  write_file(out_dir + "/manifest.txt", manifest_text(cfg, "evaluate"));
  write_file(out_dir + "/kpi.json", kpi_json(kpi));
  write_file(out_dir + "/kpi.txt", kpi_text(kpi));
  {
    std::ofstream out(out_dir + "/rollout.csv", std::ios::binary);
    if (!out) io_fail("cannot open '" + out_dir + "/rollout.csv' for writing");
    write_rollout_csv(er.rollout, out);
    if (!out.good()) io_fail("write to '" + out_dir + "/rollout.csv' failed");
  }

  std::printf("%s over %d day(s):\n%s", cfg.algorithm.c_str(), cfg.eval_days,
              kpi_text(kpi).c_str());
  std::printf("wrote %s/kpi.json, kpi.txt, rollout.csv\n", out_dir.c_str());
}

void cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& checkpoints,
                 const std::string& out_dir) {
  cfg.validate();
  const ExogenousTrace trace = checked_trace(cfg);
  const SenConfig sc = to_sen_config(cfg);

  std::vector<EvaluatedPolicy> rows;

  {
    SenConfig passive = sc;
    passive.assets = {false, false, false};
    PassivePolicy p;
    rows.push_back({"grid_only", evaluate_to_kpis(p, passive, trace, cfg)});
  }
  {
    RuleBasedPolicy p;
    rows.push_back({"rule_based", evaluate_to_kpis(p, sc, trace, cfg)});
  }
  for (const std::string& path : checkpoints) {
    TrainedAgents t = load_checkpoint(path);
    ExperimentConfig algo_cfg = cfg;
    algo_cfg.algorithm = t.algo;
    check_architecture(t, algo_cfg);
    if (t.algo == "maddpg") {
      MaddpgPolicy p(t.per_asset);
      rows.push_back({t.algo, evaluate_to_kpis(p, sc, trace, cfg)});
    } else if (t.algo == "ddpg") {
      SingleDdpgPolicy p(t.single);
      rows.push_back({t.algo, evaluate_to_kpis(p, sc, trace, cfg)});
    } else {
      DqnPolicy p(t.dqn);
      rows.push_back({t.algo, evaluate_to_kpis(p, sc, trace, cfg)});
    }
  }

  std::string table;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %14s %12s %12s %10s %10s %12s\n", "policy", "cost",
                "saving", "carbon_kg", "self_cons", "self_suff", "dem_red_kwh");
  table += buf;
  std::string csv =
      "policy,cost,saving,carbon_kg,self_consumption,self_sufficiency,demand_reduction_kwh\n";
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-12s %14.3f %12.3f %12.3f %10.4f %10.4f %12.3f\n",
                  r.name.c_str(), r.kpi.realized_cost, r.kpi.cost_saving,
                  r.kpi.carbon_emissions_kg, r.kpi.self_consumption, r.kpi.self_sufficiency,
                  r.kpi.demand_reduction_kwh);
    table += buf;
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.name.c_str(), r.kpi.realized_cost, r.kpi.cost_saving,
                  r.kpi.carbon_emissions_kg, r.kpi.self_consumption, r.kpi.self_sufficiency,
                  r.kpi.demand_reduction_kwh);
    csv += buf;
  }

  ensure_dir(out_dir);
  write_file(out_dir + "/manifest.txt", manifest_text(cfg, "compare"));
  write_file(out_dir + "/compare.csv", csv);
  std::printf("%d day(s), reference = grid only\n%s", cfg.eval_days, table.c_str());
  std::printf("wrote %s/compare.csv\n", out_dir.c_str());
}

void cmd_sweep_alpha(const ExperimentConfig& cfg, std::vector<double> alphas,
                     const std::string& out_dir) {
  cfg.validate();
  if (alphas.empty()) usage_fail("sweep-alpha needs at least one --alphas value");
  for (double a : alphas) {
    if (!(a >= 0.0)) config_fail("alpha_d values must be non-negative");
  }
  std::sort(alphas.begin(), alphas.end());
  if (cfg.algorithm == "rb") {
    usage_fail("sweep-alpha retrains per value; pick a trainable algorithm");
  }
  const ExogenousTrace trace = checked_trace(cfg);

  std::string table;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %14s %12s %12s %10s %10s %12s\n", "alpha_d", "cost",
                "saving", "carbon_kg", "self_cons", "self_suff", "dem_red_kwh");
  table += buf;
  std::string csv =
      "alpha_d,cost,saving,carbon_kg,self_consumption,self_sufficiency,demand_reduction_kwh\n";

  for (double a : alphas) {
    ExperimentConfig run_cfg = cfg;
    run_cfg.demand.alpha_d = a;
    const TrainedAgents trained = run_training(run_cfg, trace);
    const SenConfig sc = to_sen_config(run_cfg);
    KpiReport kpi;
    if (run_cfg.algorithm == "maddpg") {
      MaddpgPolicy p(trained.per_asset);
      kpi = evaluate_to_kpis(p, sc, trace, run_cfg);
    } else if (run_cfg.algorithm == "ddpg") {
      SingleDdpgPolicy p(trained.single);
      kpi = evaluate_to_kpis(p, sc, trace, run_cfg);
    } else {
      DqnPolicy p(trained.dqn);
      kpi = evaluate_to_kpis(p, sc, trace, run_cfg);
    }
    std::snprintf(buf, sizeof(buf), "%-12s %14.3f %12.3f %12.3f %10.4f %10.4f %12.3f\n",
                  format_double(a).c_str(), kpi.realized_cost, kpi.cost_saving,
                  kpi.carbon_emissions_kg, kpi.self_consumption, kpi.self_sufficiency,
                  kpi.demand_reduction_kwh);
    table += buf;
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  format_double(a).c_str(), kpi.realized_cost, kpi.cost_saving,
                  kpi.carbon_emissions_kg, kpi.self_consumption, kpi.self_sufficiency,
                  kpi.demand_reduction_kwh);
    csv += buf;
  }

  ensure_dir(out_dir);
  write_file(out_dir + "/manifest.txt", manifest_text(cfg, "sweep-alpha"));
  write_file(out_dir + "/sweep.csv", csv);
  std::printf("%s retrained per alpha_d, %d episode(s) each, seed %llu\n%s",
              cfg.algorithm.c_str(), cfg.episodes,
              static_cast<unsigned long long>(cfg.seed), table.c_str());
  std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
}

void cmd_synth_data(const ExperimentConfig& cfg, const std::string& out_path) {
  cfg.validate();
  const ExogenousTrace trace = synth_trace(cfg.synth_days, cfg.trace_seed, cfg.synth);
  try {
    save_trace(trace, out_path);
  } catch (const std::runtime_error& e) {
    io_fail(e.what());
  }
  std::printf("wrote %d synthetic day(s) to %s (seed %llu)\n", cfg.synth_days,
              out_path.c_str(), static_cast<unsigned long long>(cfg.trace_seed));
}

}  // namespace sen
