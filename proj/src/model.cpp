#include "sen/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sen {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string(what) + " must be positive");
  }
}

}  // namespace

void BessParams::validate() const {
  require_positive(e_nom, "bess e_nom");
  require_positive(p_max, "bess p_max");
  if (!(0.0 <= e_min && e_min < e_max && e_max <= e_nom)) {
    throw std::invalid_argument("bess bounds must satisfy 0 <= e_min < e_max <= e_nom");
  }
  if (!(eta_c > 0.0 && eta_c <= 1.0 && eta_d > 0.0 && eta_d <= 1.0)) {
    throw std::invalid_argument("bess efficiencies must lie in (0, 1]");
  }
  if (!(dod > 0.0 && dod <= 1.0)) {
    throw std::invalid_argument("bess dod must lie in (0, 1]");
  }
  require_positive(life_cycles, "bess life_cycles");
  if (capital_cost < 0.0) {
    throw std::invalid_argument("bess capital_cost must be non-negative");
  }
}

void HessParams::validate() const {
  if (!(0.0 <= h_min && h_min < h_max)) {
    throw std::invalid_argument("hess bounds must satisfy 0 <= h_min < h_max");
  }
  require_positive(p_max_el, "hess p_max_el");
  require_positive(p_max_fc, "hess p_max_fc");
  require_positive(r_el, "hess r_el");
  require_positive(r_fc, "hess r_fc");
  if (!(eta_el > 0.0 && eta_el <= 1.0 && eta_fc > 0.0 && eta_fc <= 1.0)) {
    throw std::invalid_argument("hess efficiencies must lie in (0, 1]");
  }
  require_positive(life_el, "hess life_el");
  require_positive(life_fc, "hess life_fc");
  if (capex_el < 0.0 || capex_fc < 0.0 || om_el < 0.0 || om_fc < 0.0) {
    throw std::invalid_argument("hess costs must be non-negative");
  }
}

void DemandParams::validate() const {
  if (!(zeta >= 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("zeta must lie in [0, 1)");
  }
  if (alpha_d < 0.0) {
    throw std::invalid_argument("alpha_d must be non-negative");
  }
}

double TariffSchedule::peak_import_price() const {
  double peak = 0.0;
  for (double v : import_price) peak = std::max(peak, v);
  return peak;
}

void TariffSchedule::validate() const {
  for (double v : import_price) {
    if (!(v >= 0.0)) throw std::invalid_argument("import prices must be non-negative");
  }
  if (!(export_price >= 0.0)) {
    throw std::invalid_argument("export price must be non-negative");
  }
  if (!(carbon_factor >= 0.0)) {
    throw std::invalid_argument("carbon factor must be non-negative");
  }
}

ActionSplit split_action(const SenAction& a) {
  ActionSplit s;
  if (a.p_b < 0.0) {
    s.p_c = -a.p_b;
  } else {
    s.p_d = a.p_b;
  }
  if (a.p_h < 0.0) {
    s.p_el = -a.p_h;
  } else {
    s.p_fc = a.p_h;
  }
  return s;
}

StorageStep bess_step(const SenState& s, double p_b, double dt, const BessParams& p) {
  require_finite(s.e_b, "battery energy");
  require_finite(p_b, "battery power");
  require_finite(dt, "slot width");
  require_positive(dt, "slot width");

  double unclipped = s.e_b;
  if (p_b < 0.0) {
    unclipped = s.e_b + p.eta_c * (-p_b) * dt;  // charging
  } else if (p_b > 0.0) {
    unclipped = s.e_b - (p_b / p.eta_d) * dt;   // discharging
  }
  StorageStep out;
  out.next = std::clamp(unclipped, p.e_min, p.e_max);
  out.violated = unclipped < p.e_min - kBoundSlack || unclipped > p.e_max + kBoundSlack;
  return out;
}

double bess_wear_cost(double p_b, double dt, const BessParams& p) {
  require_finite(p_b, "battery power");
  const double throughput = std::abs(p_b) * dt;
  const double eta_rt = p.eta_c * p.eta_d;
  return p.capital_cost * throughput /
         (p.life_cycles * 2.0 * p.dod * p.e_nom * eta_rt * eta_rt);
}

StorageStep hess_step(const SenState& s, double p_h, double dt, const HessParams& p) {
  require_finite(s.h, "tank level");
  require_finite(p_h, "hydrogen power");
  require_finite(dt, "slot width");
  require_positive(dt, "slot width");

  double unclipped = s.h;
  if (p_h < 0.0) {
    unclipped = s.h + p.r_el * (-p_h) * dt;     // electrolyzer fills the tank
  } else if (p_h > 0.0) {
    unclipped = s.h - (p_h / p.r_fc) * dt;      // fuel cell drains it
  }
  StorageStep out;
  out.next = std::clamp(unclipped, p.h_min, p.h_max);
  out.violated = unclipped < p.h_min - kBoundSlack || unclipped > p.h_max + kBoundSlack;
  return out;
}

double hess_op_cost(double p_h, const HessParams& p) {
  require_finite(p_h, "hydrogen power");
  const double fc_hourly = p.capex_fc / p.life_fc + p.om_fc;
  if (p_h < 0.0) {
    // Electrolysis commits both conversion stages, so the per-hour cost of
    // both units is charged, grossed up by the two conversion efficiencies.
    const double el_hourly = p.capex_el / p.life_el + p.om_el;
    return (el_hourly + fc_hourly) / (p.eta_fc * p.eta_el);
  }
  if (p_h > 0.0) {
    return fc_hourly;
  }
  return 0.0;
}

double inconvenience_cost(double d_actual, double d_base, const DemandParams& p) {
  require_finite(d_actual, "served demand");
  require_finite(d_base, "baseline demand");
  if (d_base < 0.0) throw std::invalid_argument("baseline demand must be non-negative");
  // kBoundSlack absorbs the one-ulp error when the caller reconstructs the
  // reduction as d_base - (d_base - delta_d)
  const double reduction = d_base - d_actual;
  if (reduction < -kBoundSlack) {
    throw std::invalid_argument("served demand exceeds baseline");
  }
  if (reduction > p.zeta * d_base + kBoundSlack) {
    throw std::invalid_argument("demand reduction exceeds the flexible share");
  }
  return p.alpha_d * reduction * reduction;
}

double grid_power(double d_actual, const SenAction& a, double p_pv, double p_w) {
  require_finite(d_actual, "served demand");
  require_finite(p_pv, "pv power");
  require_finite(p_w, "wind power");
  const ActionSplit s = split_action(a);
  return d_actual + s.p_c + s.p_el - p_pv - p_w - s.p_d - s.p_fc;
}

double grid_cost(double p_g, double dt, double slot_price, const TariffSchedule& t) {
  require_finite(p_g, "grid power");
  if (p_g >= 0.0) {
    return dt * (slot_price + t.carbon_factor) * p_g;
  }
  return -dt * t.export_price * (-p_g);
}

}  // namespace sen
