#include "sen/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace sen {

double Rollout::total_cost() const {
  double sum = 0.0;
  for (const auto& s : slots) sum += s.costs.total();
  return sum;
}

double Rollout::total_reward() const {
  double sum = 0.0;
  for (const auto& s : slots) sum += s.reward;
  return sum;
}

double Rollout::total_demand_reduction_kwh() const {
  double sum = 0.0;
  for (const auto& s : slots) sum += (s.d_base - s.d_actual) * dt;
  return sum;
}

void Rollout::append(const Rollout& other) {
  if (other.dt != dt || other.carbon_factor != carbon_factor) {
    throw std::invalid_argument("cannot append rollouts with different dt or carbon factor");
  }
  slots.insert(slots.end(), other.slots.begin(), other.slots.end());
}

double carbon_emissions(const Rollout& r) {
  double kg = 0.0;
  for (const auto& s : r.slots) kg += r.carbon_factor * std::max(s.p_g, 0.0) * r.dt;
  return kg;
}

namespace {

// How one slot's energy flows are attributed: renewables serve demand first,
// then charge storage, and only the remainder is exported; demand not covered
// by renewables is served by storage discharge before grid import.
struct SlotFlows {
  double res = 0.0;
  double res_to_demand = 0.0;
  double res_to_storage = 0.0;
  double import_to_demand = 0.0;
};

SlotFlows attribute(const SlotRecord& s) {
  SlotFlows f;
  f.res = s.pv + s.wind;
  f.res_to_demand = std::min(f.res, s.d_actual);
  f.res_to_storage = std::min(f.res - f.res_to_demand, s.p_c + s.p_el);
  const double local_to_demand =
      f.res_to_demand + std::min(s.d_actual - f.res_to_demand, s.p_d + s.p_fc);
  f.import_to_demand =
      std::clamp(s.d_actual - local_to_demand, 0.0, std::max(s.p_g, 0.0));
  return f;
}

}  // namespace

double self_consumption(const Rollout& r) {
  double res = 0.0, used = 0.0;
  for (const auto& s : r.slots) {
    const SlotFlows f = attribute(s);
    res += f.res;
    used += f.res_to_demand + f.res_to_storage;
  }
  if (res == 0.0) return 1.0;
  return used / res;
}

double self_sufficiency(const Rollout& r) {
  double demand = 0.0, imported = 0.0;
  for (const auto& s : r.slots) {
    demand += s.d_actual;
    imported += attribute(s).import_to_demand;
  }
  if (demand == 0.0) return 1.0;
  return (demand - imported) / demand;
}

double cost_saving(const Rollout& r, const ReferenceCost& reference) {
  if (reference.slots != static_cast<long>(r.slots.size())) {
    throw std::invalid_argument(
        "cost_saving: reference covers " + std::to_string(reference.slots) +
        " slots but the rollout has " + std::to_string(r.slots.size()));
  }
  return reference.cost - r.total_cost();
}

KpiReport compute_kpis(const Rollout& r, const ReferenceCost& reference, int horizon_days) {
  KpiReport k;
  k.horizon_days = horizon_days;
  k.realized_cost = r.total_cost();
  k.reference_cost = reference.cost;
  k.cost_saving = cost_saving(r, reference);
  k.carbon_emissions_kg = carbon_emissions(r);
  k.self_consumption = self_consumption(r);
  k.self_sufficiency = self_sufficiency(r);
  k.demand_reduction_kwh = r.total_demand_reduction_kwh();
  return k;
}

std::string kpi_json(const KpiReport& k) {
  nlohmann::json j;
  j["horizon_days"] = k.horizon_days;
  j["realized_cost"] = k.realized_cost;
  j["reference_cost"] = k.reference_cost;
  j["cost_saving"] = k.cost_saving;
  j["carbon_emissions_kg"] = k.carbon_emissions_kg;
  j["self_consumption"] = k.self_consumption;
  j["self_sufficiency"] = k.self_sufficiency;
  j["demand_reduction_kwh"] = k.demand_reduction_kwh;
  return j.dump(2) + "\n";
}

std::string kpi_text(const KpiReport& k) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "horizon               %10d days\n"
                "realized cost         %14.3f\n"
                "reference cost        %14.3f\n"
                "cost saving           %14.3f\n"
                "carbon emissions      %14.3f kg\n"
                "self-consumption      %14.4f\n"
                "self-sufficiency      %14.4f\n"
                "demand reduction      %14.3f kWh\n",
                k.horizon_days, k.realized_cost, k.reference_cost, k.cost_saving,
                k.carbon_emissions_kg, k.self_consumption, k.self_sufficiency,
                k.demand_reduction_kwh);
  return buf;
}

void write_rollout_csv(const Rollout& r, std::ostream& out) {
  out << "slot,pv_kw,wind_kw,demand_base_kw,demand_served_kw,charge_kw,discharge_kw,"
         "electrolyzer_kw,fuel_cell_kw,grid_kw,battery_kwh,tank_nm3,import_price,"
         "cost_bess,cost_hess,cost_inconvenience,cost_grid,reward,violated\n";
  char buf[640];
  for (std::size_t i = 0; i < r.slots.size(); ++i) {
    const auto& s = r.slots[i];
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                  i, s.pv, s.wind, s.d_base, s.d_actual, s.p_c, s.p_d, s.p_el, s.p_fc,
                  s.p_g, s.e_b, s.h, s.import_price, s.costs.bess_wear, s.costs.hess_op,
                  s.costs.inconvenience, s.costs.grid, s.reward, s.violated ? 1 : 0);
    out << buf;
  }
}

}  // namespace sen
