#include "sen/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace sen {

SenAction rule_based_action(const SenState& s, double p_pv, double p_w, double d_base,
                            const BessParams& bess, const HessParams& hess, double dt) {
  SenAction a;  // delta_d stays 0: the heuristic never curtails demand
  const double balance = p_pv + p_w - d_base;

  if (balance > 0.0) {
    // surplus: battery first, then the electrolyzer, remainder exports
    const double charge_room = std::max(0.0, (bess.e_max - s.e_b) / (bess.eta_c * dt));
    const double charge = std::min({balance, bess.p_max, charge_room});
    a.p_b = -charge;
    const double rest = balance - charge;
    if (rest > 0.0) {
      const double el_room = std::max(0.0, (hess.h_max - s.h) / (hess.r_el * dt));
      a.p_h = -std::min({rest, hess.p_max_el, el_room});
    }
  } else if (balance < 0.0) {
    // deficit: battery first, then the fuel cell, remainder imports
    const double deficit = -balance;
    const double discharge_room = std::max(0.0, (s.e_b - bess.e_min) * bess.eta_d / dt);
    const double discharge = std::min({deficit, bess.p_max, discharge_room});
    a.p_b = discharge;
    const double rest = deficit - discharge;
    if (rest > 0.0) {
      const double fc_room = std::max(0.0, (s.h - hess.h_min) * hess.r_fc / dt);
      a.p_h = std::min({rest, hess.p_max_fc, fc_room});
    }
  }
  return a;
}

double grid_only_cost(const ExogenousTrace& trace, const TariffSchedule& tariff, int days) {
  const long slots = static_cast<long>(days) * TariffSchedule::kSlotsPerDay;
  if (days <= 0 || slots > trace.slots()) {
    throw std::invalid_argument("grid-only reference asked for " + std::to_string(days) +
                                " days but the trace holds " +
                                std::to_string(trace.days()));
  }
  double cost = 0.0;
  for (long t = 0; t < slots; ++t) {
    const double p_g = trace.demand[t] - trace.pv[t] - trace.wind[t];
    cost += grid_cost(p_g, trace.dt, tariff.import_price_at(t), tariff);
  }
  return cost;
}

ReferenceCost grid_only_reference(const ExogenousTrace& trace, const TariffSchedule& tariff,
                                  int days) {
  ReferenceCost r;
  r.cost = grid_only_cost(trace, tariff, days);
  r.slots = static_cast<long>(days) * TariffSchedule::kSlotsPerDay;
  return r;
}

double rule_based_episode_cost(const SenConfig& cfg, const ExogenousTrace& trace,
                               long day_index) {
  if (day_index < 0 || (day_index + 1) * cfg.horizon > trace.slots()) {
    throw std::out_of_range("day index outside the trace");
  }
  SenState s{cfg.e_init, cfg.h_init, 0};
  double cost = 0.0;
  for (int t = 0; t < cfg.horizon; ++t) {
    const long abs = day_index * cfg.horizon + t;
    const double pv = trace.pv[abs];
    const double wind = trace.wind[abs];
    const double d = trace.demand[abs];
    const SenAction a = rule_based_action(s, pv, wind, d, cfg.bess, cfg.hess, cfg.dt);

    cost += bess_wear_cost(a.p_b, cfg.dt, cfg.bess);
    cost += hess_op_cost(a.p_h, cfg.hess);
    cost += inconvenience_cost(d - a.delta_d, d, cfg.demand);
    const double p_g = grid_power(d - a.delta_d, a, pv, wind);
    cost += grid_cost(p_g, cfg.dt, cfg.tariff.import_price_at(abs), cfg.tariff);

    s.e_b = bess_step(s, a.p_b, cfg.dt, cfg.bess).next;
    s.h = hess_step(s, a.p_h, cfg.dt, cfg.hess).next;
    s.slot = t + 1;
  }
  return cost;
}

JointAction RuleBasedPolicy::act(const SenEnv& env, const AgentObs& obs) {
  (void)obs;
  const ExogView v = env.view();
  const SenConfig& cfg = env.config();
  const SenAction a =
      rule_based_action(env.state(), v.pv, v.wind, v.d_base, cfg.bess, cfg.hess, cfg.dt);
  // back onto the normalized scale the environment expects
  JointAction raw{};
  raw[0] = a.p_b / cfg.bess.p_max;
  raw[1] = a.p_h < 0.0 ? a.p_h / cfg.hess.p_max_el : a.p_h / cfg.hess.p_max_fc;
  raw[2] = -1.0;  // zero demand reduction
  return raw;
}

}  // namespace sen
