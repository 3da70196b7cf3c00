#pragma once

#include <array>

namespace sen {

// Violation flags ignore overshoot below this absolute slack so that dispatch
// computed to land exactly on a bound does not trip the penalty on rounding
// noise (state magnitudes here are ~1e3, so 1e-9 is far below physics and far
// above double rounding error).
inline constexpr double kBoundSlack = 1e-9;

// Battery storage. Energies in kWh, powers in kW, time in hours.
struct BessParams {
  double e_nom = 2000.0;        // nameplate capacity
  double p_max = 102.0;         // charge/discharge power limit
  double e_min = 100.0;         // usable window lower bound
  double e_max = 1900.0;        // usable window upper bound
  double eta_c = 0.98;          // charge efficiency
  double eta_d = 0.98;          // discharge efficiency
  double dod = 0.8;             // rated depth of discharge
  double life_cycles = 3650.0;  // cycle life at rated DoD
  double capital_cost = 210000.0;

  void validate() const;
};

// Electrolyzer + hydrogen tank + fuel cell. Tank levels in Nm^3.
struct HessParams {
  double h_min = 2.0;
  double h_max = 10.0;
  double p_max_el = 3.0;      // electrolyzer electric input limit, kW
  double p_max_fc = 3.0;      // fuel cell electric output limit, kW
  double r_el = 0.23;         // Nm^3 of H2 produced per kWh of electrolyzer input
  double r_fc = 1.32;         // kWh delivered per Nm^3 consumed by the fuel cell
  double eta_el = 0.9;        // electrolyzer efficiency
  double eta_fc = 0.5;        // fuel cell efficiency
  double life_el = 30000.0;   // operating-hour life
  double life_fc = 30000.0;
  double capex_el = 60000.0;
  double capex_fc = 22000.0;
  double om_el = 0.174;       // O&M per operating hour
  double om_fc = 0.174;

  void validate() const;
};

// Flexible-demand settings.
struct DemandParams {
  double zeta = 0.3;      // max reducible fraction of baseline demand
  double alpha_d = 1e-4;  // inconvenience weight, currency per kW^2
  void validate() const;
};

// Half-hourly import tariff plus flat export price and a carbon intensity
// factor that is billed on imported energy.
struct TariffSchedule {
  static constexpr int kSlotsPerDay = 48;

  std::array<double, kSlotsPerDay> import_price{};
  double export_price = 0.05;
  double carbon_factor = 0.23314;  // kgCO2 per kWh imported, priced 1:1

  double import_price_at(long abs_slot) const {
    long s = abs_slot % kSlotsPerDay;
    if (s < 0) s += kSlotsPerDay;
    return import_price[static_cast<std::size_t>(s)];
  }
  double peak_import_price() const;
  void validate() const;
};

// Physical state carried between slots.
struct SenState {
  double e_b = 0.0;  // battery energy, kWh
  double h = 0.0;    // tank hydrogen, Nm^3
  int slot = 0;      // slot index within the episode
};

// Combined controls for one slot. Sign conventions: p_b < 0 charges the
// battery and p_b > 0 discharges it; p_h < 0 runs the electrolyzer and
// p_h > 0 runs the fuel cell. delta_d >= 0 is the demand reduction in kW.
struct SenAction {
  double p_b = 0.0;
  double p_h = 0.0;
  double delta_d = 0.0;
};

// Exclusive decomposition of a combined action; the sign encoding guarantees
// p_c * p_d == 0 and p_el * p_fc == 0.
struct ActionSplit {
  double p_c = 0.0;   // battery charge power drawn from the bus
  double p_d = 0.0;   // battery discharge power fed to the bus
  double p_el = 0.0;  // electrolyzer power drawn from the bus
  double p_fc = 0.0;  // fuel cell power fed to the bus
};
ActionSplit split_action(const SenAction& a);

// Result of one storage transition: the clipped next level plus whether the
// unclipped value left the usable window.
struct StorageStep {
  double next = 0.0;
  bool violated = false;
};

// Battery energy update over one slot of width dt hours.
StorageStep bess_step(const SenState& s, double p_b, double dt, const BessParams& p);

// Degradation cost of moving |p_b|*dt through the battery.
double bess_wear_cost(double p_b, double dt, const BessParams& p);

// Hydrogen tank update over one slot.
StorageStep hess_step(const SenState& s, double p_h, double dt, const HessParams& p);

// Per-slot operating cost of the hydrogen subsystem (zero when idle).
double hess_op_cost(double p_h, const HessParams& p);

// Quadratic discomfort of serving d_actual instead of the baseline d_base.
double inconvenience_cost(double d_actual, double d_base, const DemandParams& p);

// Signed grid exchange: positive imports, negative exports.
// p_g = d_actual + p_c + p_el - p_pv - p_w - p_d - p_fc
double grid_power(double d_actual, const SenAction& a, double p_pv, double p_w);

// Energy bill for one slot: import pays tariff plus the carbon factor,
// export earns the flat export price. p_g == 0 costs zero either way.
double grid_cost(double p_g, double dt, double slot_price, const TariffSchedule& t);

}  // namespace sen
