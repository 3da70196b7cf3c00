#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sen/model.hpp"

namespace sen {

// Exogenous half-hourly series: PV output, wind output, baseline demand,
// all in kW, one entry per slot across consecutive whole days.
struct ExogenousTrace {
  double dt = 0.5;  // slot width, hours
  std::vector<double> pv;
  std::vector<double> wind;
  std::vector<double> demand;

  long slots() const { return static_cast<long>(pv.size()); }
  long days() const { return slots() / TariffSchedule::kSlotsPerDay; }
  void validate() const;  // equal lengths, finite non-negative, whole days
};

// Fixed CSV layout for traces. Rows are half-hourly and must be contiguous.
struct TraceSchema {
  std::string header = "timestamp,pv_kw,wind_kw,demand_kw";
  int cadence_minutes = 30;
};

// Parse a trace CSV. Malformed rows (bad timestamp, broken cadence, missing
// fields, negative or non-numeric values) raise std::runtime_error naming the
// offending data row (1-based, header excluded).
ExogenousTrace load_trace(const std::string& path, const TraceSchema& schema = {});

// Write a trace in the same layout; load_trace(save_trace(t)) reproduces t
// exactly. Timestamps start at 2024-01-01 00:00.
void save_trace(const ExogenousTrace& t, const std::string& path,
                const TraceSchema& schema = {});

// Shape of the synthetic generator: PV is a clipped solar arc, wind is
// mean-reverting, demand carries morning and evening peaks.
struct SynthProfile {
  double pv_peak_kw = 200.0;
  double pv_noise = 0.15;       // multiplicative, clipped
  double wind_mean_kw = 60.0;
  double wind_sigma_kw = 12.0;  // innovation scale per slot
  double wind_revert = 0.2;     // pull toward the mean per slot
  double demand_mean_kw = 250.0;
  double demand_noise = 0.05;   // multiplicative, clipped
};

// Deterministic synthetic trace: same days/seed/profile gives identical data.
ExogenousTrace synth_trace(int days, std::uint64_t seed, const SynthProfile& profile = {});

// Three-level time-of-use schedule: peak 16:00-20:00, flat 14:00-16:00 and
// 20:00-23:00, valley otherwise.
TariffSchedule three_level_tariff(double peak, double flat, double valley,
                                  double export_price, double carbon_factor);

// The reference prices: peak 0.234, flat 0.117, valley 0.07, export 0.05,
// carbon 0.23314.
TariffSchedule default_tariff();

}  // namespace sen
