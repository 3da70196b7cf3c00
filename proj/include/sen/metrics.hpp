#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sen {

// Per-slot cost components; total() fixes the summation order so that a
// reward recomputed from the breakdown matches the environment bit for bit.
struct CostBreakdown {
  double bess_wear = 0.0;
  double hess_op = 0.0;
  double inconvenience = 0.0;
  double grid = 0.0;

  double total() const { return bess_wear + hess_op + inconvenience + grid; }
};

// Everything the reporting layer needs about one executed slot.
struct SlotRecord {
  double pv = 0.0;
  double wind = 0.0;
  double d_base = 0.0;
  double d_actual = 0.0;
  double p_c = 0.0;   // battery charge, kW drawn from the bus
  double p_d = 0.0;   // battery discharge, kW fed to the bus
  double p_el = 0.0;  // electrolyzer draw, kW
  double p_fc = 0.0;  // fuel cell output, kW
  double p_g = 0.0;   // signed grid exchange, import positive
  double e_b = 0.0;   // battery energy after the slot, kWh
  double h = 0.0;     // tank level after the slot, Nm^3
  double import_price = 0.0;
  CostBreakdown costs;
  double reward = 0.0;
  bool violated = false;
};

// A sequence of executed slots (one or many days back to back).
struct Rollout {
  double dt = 0.5;
  double carbon_factor = 0.23314;
  std::vector<SlotRecord> slots;

  double total_cost() const;
  double total_reward() const;
  double total_demand_reduction_kwh() const;
  void append(const Rollout& other);
};

// Cost of a counterfactual policy over the same horizon, used as the
// reference for savings; slot count lets mismatched horizons be rejected.
struct ReferenceCost {
  double cost = 0.0;
  long slots = 0;
};

// kgCO2 attributed to imported energy; exports earn no credit.
double carbon_emissions(const Rollout& r);

// Share of renewable generation consumed on site (serving demand or charging
// storage, in that order, before export). 1.0 when there is no generation.
double self_consumption(const Rollout& r);

// Share of served demand met without grid import. 1.0 when there is no demand.
double self_sufficiency(const Rollout& r);

// reference cost minus realized cost; throws on horizon mismatch
double cost_saving(const Rollout& r, const ReferenceCost& reference);

struct KpiReport {
  int horizon_days = 0;
  double realized_cost = 0.0;
  double reference_cost = 0.0;
  double cost_saving = 0.0;
  double carbon_emissions_kg = 0.0;
  double self_consumption = 0.0;
  double self_sufficiency = 0.0;
  double demand_reduction_kwh = 0.0;
};

KpiReport compute_kpis(const Rollout& r, const ReferenceCost& reference, int horizon_days);

// JSON object with sorted keys; byte-stable for identical inputs.
std::string kpi_json(const KpiReport& k);

// Aligned human-readable block.
std::string kpi_text(const KpiReport& k);

// Per-slot dump: slot,pv_kw,wind_kw,demand_base_kw,demand_served_kw,charge_kw,
// discharge_kw,electrolyzer_kw,fuel_cell_kw,grid_kw,battery_kwh,tank_nm3,
// import_price,cost_bess,cost_hess,cost_inconvenience,cost_grid,reward,violated
void write_rollout_csv(const Rollout& r, std::ostream& out);

}  // namespace sen
