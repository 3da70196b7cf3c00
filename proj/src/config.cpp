#include "sen/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace sen {

namespace {

struct Field {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* last = value.data() + value.size();
  const auto res = std::from_chars(value.data(), last, v);
  if (res.ec != std::errc{} || res.ptr != last || value.empty() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': '" + value + "' is not a number");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const char* last = value.data() + value.size();
  const auto res = std::from_chars(value.data(), last, v);
  if (res.ec != std::errc{} || res.ptr != last || value.empty()) {
    throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': '" + value + "' is not a boolean (true/false)");
}

template <typename T>
Field field_for(const std::string& name, T ExperimentConfig::* member);

template <>
Field field_for<double>(const std::string& name, double ExperimentConfig::* member) {
  return {name,
          [member](const ExperimentConfig& c) { return format_double(c.*member); },
          [member, name](ExperimentConfig& c, const std::string& v) {
            c.*member = parse_double(name, v);
          }};
}

template <>
Field field_for<int>(const std::string& name, int ExperimentConfig::* member) {
  return {name, [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member, name](ExperimentConfig& c, const std::string& v) {
            c.*member = static_cast<int>(parse_int(name, v));
          }};
}

template <>
Field field_for<long>(const std::string& name, long ExperimentConfig::* member) {
  return {name, [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member, name](ExperimentConfig& c, const std::string& v) {
            c.*member = static_cast<long>(parse_int(name, v));
          }};
}

template <>
Field field_for<std::uint64_t>(const std::string& name,
                               std::uint64_t ExperimentConfig::* member) {
  return {name, [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
          [member, name](ExperimentConfig& c, const std::string& v) {
            const long long parsed = parse_int(name, v);
            if (parsed < 0) throw ConfigError("key '" + name + "': must be non-negative");
            c.*member = static_cast<std::uint64_t>(parsed);
          }};
}

template <>
Field field_for<bool>(const std::string& name, bool ExperimentConfig::* member) {
  return {name,
          [member](const ExperimentConfig& c) { return c.*member ? "true" : "false"; },
          [member, name](ExperimentConfig& c, const std::string& v) {
            c.*member = parse_bool(name, v);
          }};
}

template <>
Field field_for<std::string>(const std::string& name,
                             std::string ExperimentConfig::* member) {
  return {name, [member](const ExperimentConfig& c) { return c.*member; },
          [member](ExperimentConfig& c, const std::string& v) { c.*member = v; }};
}

// nested members need their own accessors
template <typename T, typename Outer>
Field nested(const std::string& name, Outer ExperimentConfig::* outer, T Outer::* inner) {
  return {name,
          [outer, inner](const ExperimentConfig& c) {
            if constexpr (std::is_same_v<T, double>) {
              return format_double(c.*outer.*inner);
            } else {
              return std::to_string(c.*outer.*inner);
            }
          },
          [outer, inner, name](ExperimentConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, double>) {
              c.*outer.*inner = parse_double(name, v);
            } else {
              c.*outer.*inner = static_cast<T>(parse_int(name, v));
            }
          }};
}

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(field_for("algorithm", &ExperimentConfig::algorithm));
    f.push_back(field_for("seed", &ExperimentConfig::seed));
    f.push_back(field_for("episodes", &ExperimentConfig::episodes));
    f.push_back(field_for("eval_days", &ExperimentConfig::eval_days));
    f.push_back(field_for("trace_path", &ExperimentConfig::trace_path));
    f.push_back(field_for("trace_seed", &ExperimentConfig::trace_seed));
    f.push_back(field_for("synth_days", &ExperimentConfig::synth_days));
    f.push_back(nested("synth_pv_peak_kw", &ExperimentConfig::synth, &SynthProfile::pv_peak_kw));
    f.push_back(nested("synth_pv_noise", &ExperimentConfig::synth, &SynthProfile::pv_noise));
    f.push_back(nested("synth_wind_mean_kw", &ExperimentConfig::synth, &SynthProfile::wind_mean_kw));
    f.push_back(nested("synth_wind_sigma_kw", &ExperimentConfig::synth, &SynthProfile::wind_sigma_kw));
    f.push_back(nested("synth_wind_revert", &ExperimentConfig::synth, &SynthProfile::wind_revert));
    f.push_back(nested("synth_demand_mean_kw", &ExperimentConfig::synth, &SynthProfile::demand_mean_kw));
    f.push_back(nested("synth_demand_noise", &ExperimentConfig::synth, &SynthProfile::demand_noise));
    f.push_back(field_for("batch_size", &ExperimentConfig::batch_size));
    f.push_back(field_for("gamma", &ExperimentConfig::gamma));
    f.push_back(field_for("tau", &ExperimentConfig::tau));
    f.push_back(field_for("lr_actor", &ExperimentConfig::lr_actor));
    f.push_back(field_for("lr_critic", &ExperimentConfig::lr_critic));
    f.push_back(field_for("hidden_layers", &ExperimentConfig::hidden_layers));
    f.push_back(field_for("hidden_units", &ExperimentConfig::hidden_units));
    f.push_back(field_for("warmup", &ExperimentConfig::warmup));
    f.push_back(field_for("buffer_capacity", &ExperimentConfig::buffer_capacity));
    f.push_back(field_for("ou_theta", &ExperimentConfig::ou_theta));
    f.push_back(field_for("ou_sigma", &ExperimentConfig::ou_sigma));
    f.push_back(field_for("ou_sigma_final", &ExperimentConfig::ou_sigma_final));
    f.push_back(field_for("eps_start", &ExperimentConfig::eps_start));
    f.push_back(field_for("eps_final", &ExperimentConfig::eps_final));
    f.push_back(field_for("dqn_target_sync", &ExperimentConfig::dqn_target_sync));
    f.push_back(field_for("action_levels", &ExperimentConfig::action_levels));
    f.push_back(field_for("dt", &ExperimentConfig::dt));
    f.push_back(field_for("penalty", &ExperimentConfig::penalty));
    f.push_back(field_for("e_init", &ExperimentConfig::e_init));
    f.push_back(field_for("h_init", &ExperimentConfig::h_init));
    f.push_back(field_for("enable_bess", &ExperimentConfig::enable_bess));
    f.push_back(field_for("enable_hess", &ExperimentConfig::enable_hess));
    f.push_back(field_for("enable_flex", &ExperimentConfig::enable_flex));
    f.push_back(nested("bess_e_nom", &ExperimentConfig::bess, &BessParams::e_nom));
    f.push_back(nested("bess_p_max", &ExperimentConfig::bess, &BessParams::p_max));
    f.push_back(nested("bess_e_min", &ExperimentConfig::bess, &BessParams::e_min));
    f.push_back(nested("bess_e_max", &ExperimentConfig::bess, &BessParams::e_max));
    f.push_back(nested("bess_eta_c", &ExperimentConfig::bess, &BessParams::eta_c));
    f.push_back(nested("bess_eta_d", &ExperimentConfig::bess, &BessParams::eta_d));
    f.push_back(nested("bess_dod", &ExperimentConfig::bess, &BessParams::dod));
    f.push_back(nested("bess_life_cycles", &ExperimentConfig::bess, &BessParams::life_cycles));
    f.push_back(nested("bess_capital_cost", &ExperimentConfig::bess, &BessParams::capital_cost));
    f.push_back(nested("hess_h_min", &ExperimentConfig::hess, &HessParams::h_min));
    f.push_back(nested("hess_h_max", &ExperimentConfig::hess, &HessParams::h_max));
    f.push_back(nested("hess_p_max_el", &ExperimentConfig::hess, &HessParams::p_max_el));
    f.push_back(nested("hess_p_max_fc", &ExperimentConfig::hess, &HessParams::p_max_fc));
    f.push_back(nested("hess_r_el", &ExperimentConfig::hess, &HessParams::r_el));
    f.push_back(nested("hess_r_fc", &ExperimentConfig::hess, &HessParams::r_fc));
    f.push_back(nested("hess_eta_el", &ExperimentConfig::hess, &HessParams::eta_el));
    f.push_back(nested("hess_eta_fc", &ExperimentConfig::hess, &HessParams::eta_fc));
    f.push_back(nested("hess_life_el", &ExperimentConfig::hess, &HessParams::life_el));
    f.push_back(nested("hess_life_fc", &ExperimentConfig::hess, &HessParams::life_fc));
    f.push_back(nested("hess_capex_el", &ExperimentConfig::hess, &HessParams::capex_el));
    f.push_back(nested("hess_capex_fc", &ExperimentConfig::hess, &HessParams::capex_fc));
    f.push_back(nested("hess_om_el", &ExperimentConfig::hess, &HessParams::om_el));
    f.push_back(nested("hess_om_fc", &ExperimentConfig::hess, &HessParams::om_fc));
    f.push_back(nested("zeta", &ExperimentConfig::demand, &DemandParams::zeta));
    f.push_back(nested("alpha_d", &ExperimentConfig::demand, &DemandParams::alpha_d));
    f.push_back(field_for("tariff_peak", &ExperimentConfig::tariff_peak));
    f.push_back(field_for("tariff_flat", &ExperimentConfig::tariff_flat));
    f.push_back(field_for("tariff_valley", &ExperimentConfig::tariff_valley));
    f.push_back(field_for("export_price", &ExperimentConfig::export_price));
    f.push_back(field_for("carbon_factor", &ExperimentConfig::carbon_factor));
    f.push_back(nested("obs_scale_pv", &ExperimentConfig::scales, &ObsScales::pv));
    f.push_back(nested("obs_scale_wind", &ExperimentConfig::scales, &ObsScales::wind));
    f.push_back(nested("obs_scale_demand", &ExperimentConfig::scales, &ObsScales::demand));
    f.push_back(nested("obs_scale_price", &ExperimentConfig::scales, &ObsScales::price));
    std::sort(f.begin(), f.end(), [](const Field& a, const Field& b) { return a.name < b.name; });
    return f;
  }();
  return fields;
}

const Field* find_field(const std::string& key) {
  for (const Field& f : registry()) {
    if (f.name == key) return &f;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void ExperimentConfig::validate() const {
  if (algorithm != "rb" && algorithm != "dqn" && algorithm != "ddpg" &&
      algorithm != "maddpg") {
    throw ConfigError("algorithm must be one of rb, dqn, ddpg, maddpg (got '" +
                      algorithm + "')");
  }
  if (episodes <= 0) throw ConfigError("episodes must be positive");
  if (eval_days <= 0) throw ConfigError("eval_days must be positive");
  if (synth_days <= 0) throw ConfigError("synth_days must be positive");
  if (hidden_layers < 0) throw ConfigError("hidden_layers must be non-negative");
  if (hidden_units <= 0) throw ConfigError("hidden_units must be positive");
  if (action_levels < 2) throw ConfigError("action_levels must be at least 2");
  if (!(tariff_peak >= 0 && tariff_flat >= 0 && tariff_valley >= 0)) {
    throw ConfigError("tariff levels must be non-negative");
  }
  try {
    to_sen_config(*this).validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::vector<std::string> unknown;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + " line " + std::to_string(line_no) +
                        ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const Field* f = find_field(key);
    if (!f) {
      unknown.push_back(key);
      continue;
    }
    f->set(cfg, value);
  }
  if (!unknown.empty()) {
    std::string msg = origin + ": unknown keys:";
    for (const auto& k : unknown) msg += " '" + k + "'";
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigIoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

void apply_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown keys: '" + key + "'");
  f->set(cfg, value);
}

std::string config_echo(const ExperimentConfig& cfg) {
  std::string out;
  for (const Field& f : registry()) {
    out += f.name;
    out += " = ";
    out += f.get(cfg);
    out += "\n";
  }
  return out;
}

SenConfig to_sen_config(const ExperimentConfig& cfg) {
  SenConfig sc;
  sc.bess = cfg.bess;
  sc.hess = cfg.hess;
  sc.demand = cfg.demand;
  sc.tariff = three_level_tariff(cfg.tariff_peak, cfg.tariff_flat, cfg.tariff_valley,
                                 cfg.export_price, cfg.carbon_factor);
  sc.dt = cfg.dt;
  sc.penalty = cfg.penalty;
  sc.e_init = cfg.e_init;
  sc.h_init = cfg.h_init;
  sc.assets = {cfg.enable_bess, cfg.enable_hess, cfg.enable_flex};
  sc.scales = cfg.scales;
  return sc;
}

TrainParams to_train_params(const ExperimentConfig& cfg) {
  TrainParams p;
  p.episodes = cfg.episodes;
  p.batch_size = cfg.batch_size;
  p.gamma = cfg.gamma;
  p.tau = cfg.tau;
  p.warmup = cfg.warmup;
  p.buffer_capacity = cfg.buffer_capacity;
  p.ou_theta = cfg.ou_theta;
  p.ou_sigma = cfg.ou_sigma;
  p.ou_sigma_final = cfg.ou_sigma_final;
  p.eps_start = cfg.eps_start;
  p.eps_final = cfg.eps_final;
  p.dqn_target_sync = cfg.dqn_target_sync;
  return p;
}

NetHyper to_net_hyper(const ExperimentConfig& cfg) {
  NetHyper h;
  h.hidden.assign(static_cast<std::size_t>(cfg.hidden_layers), cfg.hidden_units);
  h.lr_actor = cfg.lr_actor;
  h.lr_critic = cfg.lr_critic;
  return h;
}

ExogenousTrace build_trace(const ExperimentConfig& cfg) {
  if (!cfg.trace_path.empty()) return load_trace(cfg.trace_path);
  return synth_trace(cfg.synth_days, cfg.trace_seed, cfg.synth);
}

}  // namespace sen
