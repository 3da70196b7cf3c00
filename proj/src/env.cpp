#include "sen/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sen {

void SenConfig::validate() const {
  bess.validate();
  hess.validate();
  demand.validate();
  tariff.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  if (!(penalty >= 0.0)) throw std::invalid_argument("penalty must be non-negative");
  if (!(e_init >= bess.e_min && e_init <= bess.e_max)) {
    throw std::invalid_argument("e_init must lie inside the battery window");
  }
  if (!(h_init >= hess.h_min && h_init <= hess.h_max)) {
    throw std::invalid_argument("h_init must lie inside the tank window");
  }
  if (!(scales.pv > 0.0 && scales.wind > 0.0 && scales.demand > 0.0)) {
    throw std::invalid_argument("observation scales must be positive");
  }
}

SenEnv::SenEnv(SenConfig cfg, ExogenousTrace trace)
    : cfg_(std::move(cfg)), trace_(std::move(trace)) {
  cfg_.validate();
  if (trace_.slots() < cfg_.horizon) {
    throw std::invalid_argument("trace is shorter than one episode");
  }
  if (trace_.dt != cfg_.dt) {
    throw std::invalid_argument("trace and environment slot widths differ");
  }
  price_scale_ =
      cfg_.scales.price > 0.0 ? cfg_.scales.price : cfg_.tariff.peak_import_price();
  if (!(price_scale_ > 0.0)) price_scale_ = 1.0;
}

long SenEnv::abs_slot(int slot_in_episode) const {
  return day_ * cfg_.horizon + slot_in_episode;
}

AgentObs SenEnv::reset(long day_index) {
  if (day_index < 0 || (day_index + 1) * cfg_.horizon > trace_.slots()) {
    throw std::out_of_range("day index " + std::to_string(day_index) +
                            " is outside the trace (" + std::to_string(episode_days()) +
                            " episodes available)");
  }
  day_ = day_index;
  state_ = SenState{cfg_.e_init, cfg_.h_init, 0};
  done_ = false;
  return observations();
}

SenAction SenEnv::denormalize_action(const JointAction& raw) const {
  const long t = std::min(abs_slot(state_.slot), trace_.slots() - 1);
  return denormalize_action(raw, trace_.demand[t]);
}

SenAction SenEnv::denormalize_action(const JointAction& raw, double d_base) const {
  SenAction a;
  if (cfg_.assets.bess) {
    a.p_b = std::clamp(raw[0], -1.0, 1.0) * cfg_.bess.p_max;
  }
  if (cfg_.assets.hess) {
    const double r = std::clamp(raw[1], -1.0, 1.0);
    a.p_h = r < 0.0 ? r * cfg_.hess.p_max_el : r * cfg_.hess.p_max_fc;
  }
  if (cfg_.assets.flex) {
    const double r = std::clamp(raw[2], -1.0, 1.0);
    a.delta_d = 0.5 * (r + 1.0) * cfg_.demand.zeta * d_base;
  }
  return a;
}

StepOutcome SenEnv::step(const JointAction& raw) {
  if (done_) throw std::logic_error("step() called on a finished episode");
  for (double v : raw) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite action component");
  }

  const long t = abs_slot(state_.slot);
  const double pv = trace_.pv[t];
  const double wind = trace_.wind[t];
  const double d_base = trace_.demand[t];
  const double price = cfg_.tariff.import_price_at(t % TariffSchedule::kSlotsPerDay);

  const SenAction asked = denormalize_action(raw, d_base);
  const StorageStep bs = bess_step(state_, asked.p_b, cfg_.dt, cfg_.bess);
  const StorageStep hs = hess_step(state_, asked.p_h, cfg_.dt, cfg_.hess);

  // Powers actually executed after clipping: recomputed from the realized
  // state change so the grid balance is exact even when a bound was hit.
  SenAction eff = asked;
  if (asked.p_b < 0.0) {
    eff.p_b = -((bs.next - state_.e_b) / (cfg_.bess.eta_c * cfg_.dt));
  } else if (asked.p_b > 0.0) {
    eff.p_b = (state_.e_b - bs.next) * cfg_.bess.eta_d / cfg_.dt;
  }
  if (asked.p_h < 0.0) {
    eff.p_h = -((hs.next - state_.h) / (cfg_.hess.r_el * cfg_.dt));
  } else if (asked.p_h > 0.0) {
    eff.p_h = (state_.h - hs.next) * cfg_.hess.r_fc / cfg_.dt;
  }
  const double d_actual = d_base - eff.delta_d;

  StepOutcome out;
  out.costs.bess_wear = bess_wear_cost(eff.p_b, cfg_.dt, cfg_.bess);
  out.costs.hess_op = hess_op_cost(eff.p_h, cfg_.hess);
  out.costs.inconvenience = inconvenience_cost(d_actual, d_base, cfg_.demand);
  out.p_g = grid_power(d_actual, eff, pv, wind);
  out.costs.grid = grid_cost(out.p_g, cfg_.dt, price, cfg_.tariff);
  out.violated = bs.violated || hs.violated;
  out.reward = -out.costs.total() - (out.violated ? cfg_.penalty : 0.0);

  const ActionSplit split = split_action(eff);
  out.record.pv = pv;
  out.record.wind = wind;
  out.record.d_base = d_base;
  out.record.d_actual = d_actual;
  out.record.p_c = split.p_c;
  out.record.p_d = split.p_d;
  out.record.p_el = split.p_el;
  out.record.p_fc = split.p_fc;
  out.record.p_g = out.p_g;
  out.record.e_b = bs.next;
  out.record.h = hs.next;
  out.record.import_price = price;
  out.record.costs = out.costs;
  out.record.reward = out.reward;
  out.record.violated = out.violated;

  state_.e_b = bs.next;
  state_.h = hs.next;
  state_.slot += 1;
  done_ = state_.slot >= cfg_.horizon;
  out.done = done_;
  out.obs = build_obs(state_.slot, state_.e_b, state_.h);
  return out;
}

AgentObs SenEnv::build_obs(int slot_in_episode, double e_b, double h) const {
  // For the terminal observation the exogenous features repeat the last slot
  // of the trace; its value never feeds a bootstrap because done is set.
  const long t = std::min(abs_slot(slot_in_episode), trace_.slots() - 1);
  const double pv = trace_.pv[t] / cfg_.scales.pv;
  const double wind = trace_.wind[t] / cfg_.scales.wind;
  const double demand = trace_.demand[t] / cfg_.scales.demand;
  const double lam =
      cfg_.tariff.import_price_at(t % TariffSchedule::kSlotsPerDay) / price_scale_;
  const double pi = cfg_.tariff.export_price / price_scale_;
  const double e = e_b / cfg_.bess.e_max;
  const double hh = h / cfg_.hess.h_max;

  AgentObs obs;
  obs[0] = {pv, wind, e, demand, pi, lam};   // battery agent
  obs[1] = {pv, wind, demand, hh, pi, lam};  // hydrogen agent
  obs[2] = {pv, wind, demand, pi, lam};      // demand agent
  return obs;
}

AgentObs SenEnv::observations() const { return build_obs(state_.slot, state_.e_b, state_.h); }

std::vector<double> SenEnv::global_obs() const {
  const long t = std::min(abs_slot(state_.slot), trace_.slots() - 1);
  const double pv = trace_.pv[t] / cfg_.scales.pv;
  const double wind = trace_.wind[t] / cfg_.scales.wind;
  const double demand = trace_.demand[t] / cfg_.scales.demand;
  const double lam =
      cfg_.tariff.import_price_at(t % TariffSchedule::kSlotsPerDay) / price_scale_;
  const double pi = cfg_.tariff.export_price / price_scale_;
  return {pv, wind, state_.e_b / cfg_.bess.e_max, state_.h / cfg_.hess.h_max,
          demand, pi, lam};
}

ExogView SenEnv::view() const {
  const long t = std::min(abs_slot(state_.slot), trace_.slots() - 1);
  ExogView v;
  v.pv = trace_.pv[t];
  v.wind = trace_.wind[t];
  v.d_base = trace_.demand[t];
  v.import_price = cfg_.tariff.import_price_at(t % TariffSchedule::kSlotsPerDay);
  v.export_price = cfg_.tariff.export_price;
  return v;
}

double episode_cost(const SenConfig& cfg, const ExogenousTrace& trace, long day_index,
                    JointPolicy& policy) {
  SenEnv env(cfg, trace);
  AgentObs obs = env.reset(day_index);
  policy.begin_episode();
  double cost = 0.0;
  while (!env.done()) {
    const StepOutcome out = env.step(policy.act(env, obs));
    cost += out.costs.total();
    obs = out.obs;
  }
  return cost;
}

}  // namespace sen
